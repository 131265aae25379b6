"""(K, C) block-sparse model: subspace counts, sample bounds, block extraction.

Counts grow like binomials of the spectrum length and overflow any fixed
width integer long before they stop being interesting, so they are carried
as natural logs (:class:`LogCount`) with the exact integer attached while
it is still cheap.
"""
from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

EXACT_LIMIT = 64
BRUTE_FORCE_LIMIT = 20


def ln_comb(n: int, k: int) -> float:
    """Natural log of ``C(n, k)``; ``-inf`` when the coefficient is zero."""
    if k < 0 or n < 0 or k > n:
        return -math.inf
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


@dataclass(frozen=True)
class LogCount:
    ln_value: float
    exact_value: Optional[int] = None
    approx_ln: Optional[float] = None

    def __post_init__(self):
        if self.exact_value is not None and self.exact_value > 0:
            if abs(math.log(self.exact_value) - self.ln_value) >= 1e-9:
                raise ValueError("exact_value and ln_value disagree")

    @property
    def value(self) -> float:
        """Floating value; ``inf`` once it overflows a double."""
        if self.exact_value is not None:
            return float(self.exact_value)
        try:
            return math.exp(self.ln_value)
        except OverflowError:
            return math.inf


@dataclass(frozen=True)
class KCParams:
    signal_length: int
    total_nonzeros: int
    block_count: int

    def __post_init__(self):
        n, k, c = self.signal_length, self.total_nonzeros, self.block_count
        if not 1 <= c <= k <= n:
            raise ValueError(f"need 1 <= C <= K_S <= N_S, got N_S={n}, K_S={k}, C={c}")
        if n + 1 - k < c:
            raise ValueError(f"{c} blocks with {k} nonzeros cannot be separated in {n} bins")


@dataclass(frozen=True)
class BoundInputs:
    ric: float = 0.5
    ensemble_constant: float = 1.0
    confidence_exponent: float = 0.0

    def __post_init__(self):
        if not 0 < self.ric < 1:
            raise ValueError("ric must lie in (0, 1)")
        if not self.ensemble_constant > 0:
            raise ValueError("ensemble_constant must be positive")
        if not self.confidence_exponent >= 0:
            raise ValueError("confidence_exponent must be non-negative")


@dataclass(frozen=True)
class BlockStructure:
    total_length: int
    blocks: Tuple[Tuple[int, int], ...] = ()
    empty: bool = field(default=False)

    def __post_init__(self):
        blocks = tuple((int(s), int(l)) for s, l in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        end = -1
        for start, length in blocks:
            if length < 1 or start < 0:
                raise ValueError("blocks need a non-negative start and positive length")
            if start <= end:
                raise ValueError("blocks must be sorted and separated by at least one zero bin")
            end = start + length
        if blocks and end > self.total_length:
            raise ValueError("block extends past total_length")

    @property
    def nonzeros(self) -> int:
        return sum(length for _, length in self.blocks)

    @property
    def block_count(self) -> int:
        return len(self.blocks)

    @property
    def lengths(self) -> List[int]:
        return [length for _, length in self.blocks]

    def support(self) -> np.ndarray:
        idx = [np.arange(s, s + l) for s, l in self.blocks]
        return np.concatenate(idx) if idx else np.zeros(0, dtype=int)

    def kc_params(self) -> KCParams:
        return KCParams(self.total_length, self.nonzeros, self.block_count)


def _log_count(terms: Sequence[Tuple[int, int]], extra_ln: float = 0.0, extra_exact: int = 1,
               exact: bool = True) -> LogCount:
    ln_value = sum(ln_comb(n, k) for n, k in terms) + extra_ln
    exact_value = None
    if exact:
        exact_value = extra_exact
        for n, k in terms:
            exact_value *= math.comb(n, k)
        if exact_value > 0:
            # lgamma drifts for large arguments; the exact log is authoritative here
            ln_value = math.log(exact_value)
    return LogCount(ln_value, exact_value)


def subspace_count_kc(params: KCParams) -> LogCount:
    """Number of supports with ``K_S`` nonzeros in exactly ``C`` blocks.

    ``C(N_S + 1 - K_S, C) * C(K_S - 1, C - 1)``: choose the block lengths as
    a composition of ``K_S`` and the gap positions independently.
    """
    n, k, c = params.signal_length, params.total_nonzeros, params.block_count
    return _log_count([(n + 1 - k, c), (k - 1, c - 1)], exact=n <= EXACT_LIMIT)


def subspace_count_standard(signal_length: int, nonzeros: int) -> LogCount:
    """``C(N_S, K_S)`` with the ``(N_S e / K_S)^K_S`` approximation attached."""
    n, k = signal_length, nonzeros
    if not 0 <= k <= n:
        raise ValueError("need 0 <= K_S <= N_S")
    count = _log_count([(n, k)], exact=n <= EXACT_LIMIT)
    approx = k * (math.log(n) + 1 - math.log(k)) if k > 0 else 0.0
    return LogCount(count.ln_value, count.exact_value, approx)


def count_runs(pattern: int) -> Tuple[int, int]:
    """(ones, maximal runs of ones) in the binary expansion of ``pattern``."""
    ones = bin(pattern).count("1")
    runs = bin(pattern & ~(pattern << 1)).count("1")
    return ones, runs


@lru_cache(maxsize=None)
def run_histogram(n: int) -> Dict[Tuple[int, int], int]:
    """Tally ``(ones, runs)`` over every length-``n`` binary pattern."""
    if n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force refused for N_S={n} > {BRUTE_FORCE_LIMIT}")
    return dict(Counter(count_runs(p) for p in range(1 << n)))


def brute_force_count(params: KCParams) -> int:
    """Enumerate all ``2^N_S`` binary patterns and count the matching ones."""
    hist = run_histogram(params.signal_length)
    return hist.get((params.total_nonzeros, params.block_count), 0)


def sample_bound(count: LogCount, nonzeros: int, inputs: BoundInputs = BoundInputs()) -> int:
    """Measurements needed for the model-based RIP to hold.

    ``ceil(2 / (c delta) * (ln(2 m) + K_S ln(12 / delta) + t))``.
    """
    delta, c, t = inputs.ric, inputs.ensemble_constant, inputs.confidence_exponent
    rhs = 2 / (c * delta) * (math.log(2) + count.ln_value + nonzeros * math.log(12 / delta) + t)
    return math.ceil(rhs - 1e-12 * abs(rhs))


def sample_bound_asymptotic(signal_length: int, nonzeros: int, blocks: int) -> float:
    """``K_S + C ln(N_S / C)`` with unit constant, for trend plots."""
    if not 1 <= blocks <= nonzeros <= signal_length:
        raise ValueError("need 1 <= C <= K_S <= N_S")
    return nonzeros + blocks * math.log(signal_length / blocks)


@dataclass(frozen=True)
class DistributionProfile:
    signal_length: int
    component_count: int
    block_size: int
    counts: Tuple[LogCount, ...]
    probabilities: Tuple[float, ...]

    @property
    def group_counts(self) -> Tuple[int, ...]:
        return tuple(range(1, self.component_count + 1))

    @property
    def most_probable(self) -> int:
        return 1 + int(np.argmax(self.probabilities))


def freq_distribution_profile(signal_length: int, component_count: int, block_size: int) -> DistributionProfile:
    """Probability that ``K_c`` equal-size components fall into ``C`` groups.

    Merged components share one contiguous block, so the total number of
    nonzero bins stays ``K_c * B`` for every ``C``. The ``K_c!`` factor is
    kept in the reported counts; it cancels in the probabilities.
    """
    n, kc, b = signal_length, component_count, block_size
    if kc < 1 or b < 1 or kc * b > n:
        raise ValueError("need K_c >= 1, B >= 1 and K_c * B <= N")
    free = n + 1 - kc * b
    ln_fact = math.lgamma(kc + 1)
    exact = n <= EXACT_LIMIT
    counts = tuple(
        _log_count([(free, c), (kc - 1, c - 1)], ln_fact, math.factorial(kc), exact=exact)
        for c in range(1, kc + 1)
    )
    ln = np.array([cnt.ln_value for cnt in counts])
    weights = np.exp(ln - ln.max())
    probs = weights / weights.sum()
    return DistributionProfile(n, kc, b, counts, tuple(float(p) for p in probs))


def ultra_sparse_count(signal_length: int, components: int, block_size: int) -> LogCount:
    """Placements of ``K_c`` separated blocks of ``B_s`` bins: ``C(N_s + 1 - K_c B_s, K_c)``."""
    n, kc, b = signal_length, components, block_size
    if kc < 1 or b < 1 or kc * b > n:
        raise ValueError("need K_c >= 1, B_s >= 1 and K_c * B_s <= N_s")
    if n + 1 - kc * b < kc:
        raise ValueError(f"{kc} blocks of {b} bins cannot be placed separated in {n} bins")
    return _log_count([(n + 1 - kc * b, kc)], exact=n <= EXACT_LIMIT)


def blocks_from_mask(mask, gap_merge: int = 0) -> BlockStructure:
    """Maximal runs of True; runs split by at most ``gap_merge`` False bins are joined."""
    mask = np.asarray(mask, dtype=bool)
    padded = np.concatenate(([False], mask, [False]))
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    runs = [[s, e] for s, e in zip(edges[::2], edges[1::2])]
    merged: List[List[int]] = []
    for run in runs:
        if merged and run[0] - merged[-1][1] <= gap_merge:
            merged[-1][1] = run[1]
        else:
            merged.append(run)
    return BlockStructure(mask.size, tuple((s, e - s) for s, e in merged))


def blocks_from_spectrum(spectrum, noise_floor_db: float, gap_merge: int = 0) -> BlockStructure:
    """Block structure of the bins strictly above ``peak + noise_floor_db``.

    ``spectrum`` may be complex bins or magnitudes. Returns an empty
    structure flagged ``empty=True`` when nothing survives.
    """
    if not noise_floor_db < 0:
        raise ValueError("noise_floor_db must be negative (relative to peak)")
    mag = np.abs(np.asarray(spectrum))
    peak = mag.max() if mag.size else 0.0
    if not peak > 0:
        warnings.warn("spectrum has no energy; returning empty block structure", RuntimeWarning)
        return BlockStructure(mag.size, (), empty=True)
    return blocks_from_mask(mag > peak * 10 ** (noise_floor_db / 20), gap_merge)


def one_sided(spectrum) -> np.ndarray:
    """Bins ``0 .. N/2`` of a real signal's spectrum."""
    spectrum = np.asarray(spectrum)
    return spectrum[: spectrum.size // 2 + 1]


@dataclass(frozen=True)
class PipelineBound:
    window: str
    blocks: BlockStructure
    count: LogCount
    measurements: int


def pipeline_bound(spec, window, noise_floor_db: float, inputs: BoundInputs = BoundInputs(),
                   seed: int = 0) -> PipelineBound:
    """Windowed spectrum -> noise-floor blocks -> (K, C) count -> sample bound.

    Uses the one-sided spectrum of the real multi-tone signal described by
    ``spec``; ``window`` is a :class:`~wincss.window_lab.Window`.
    """
    from wincss.spectrum_core import dft, synthesize

    x = synthesize(spec, seed) * window.coefficients
    blocks = blocks_from_spectrum(one_sided(dft(x)), noise_floor_db)
    count = subspace_count_kc(blocks.kc_params())
    return PipelineBound(window.kind.label, blocks, count, sample_bound(count, blocks.nonzeros, inputs))
