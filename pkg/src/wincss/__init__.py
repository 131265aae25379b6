"""Windowed compressed spectrum sensing with block sparsity."""

from wincss.window_lab import (
    Continuity,
    Window,
    WindowKind,
    WindowMetrics,
    continuity_class,
    ezc,
    generate_window,
    nze,
    window_metrics,
    wsc,
)
from wincss.spectrum_core import (
    MismatchDelta,
    MultiToneSpec,
    SamplingGrid,
    ToneComponent,
    dft,
    idft,
    leakage_magnitude,
    mismatch_delta,
    synthesize,
)
from wincss.measurement import (
    GaussianEnsemble,
    MeasurementOperator,
    RipEstimate,
    compose_windowed,
    rip_empirical,
    rip_reference_bounds,
    rip_success_probability,
    sample_ensemble,
    two_stability_energy,
)
from wincss.block_model import (
    BlockStructure,
    BoundInputs,
    KCParams,
    LogCount,
    blocks_from_spectrum,
    brute_force_count,
    freq_distribution_profile,
    sample_bound,
    sample_bound_asymptotic,
    subspace_count_kc,
    subspace_count_standard,
    ultra_sparse_count,
)
from wincss.recovery import (
    RecoveryResult,
    SparseInstance,
    block_omp,
    make_instance,
    measurement_sweep,
    omp,
    reconstruct_time_signal,
)

__version__ = "0.1.0"
