"""Gaussian ensembles, windowed measurement operators and RIP estimates.

The windowed operator is ``Theta = Psi F D_w``: window the time samples,
take the unitary DFT, then project with a real Gaussian ``M x N`` matrix
whose entries have variance ``1/M``.

Random streams are keyed on ``(seed, block index)`` with a fixed block size,
so any trial can be regenerated without running the ones before it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterator, Tuple

import numpy as np

from wincss.window_lab import Window, wsc

DEFAULT_DELTA_REF = 0.3
TRIAL_BLOCK = 1000


def trial_rng(seed: int, block: int) -> np.random.Generator:
    """Generator for trial block ``block`` of a run seeded with ``seed``."""
    return np.random.default_rng([int(seed), int(block)])


def _trial_blocks(trials: int) -> Iterator[Tuple[int, int]]:
    for block in range(math.ceil(trials / TRIAL_BLOCK)):
        yield block, min(TRIAL_BLOCK, trials - block * TRIAL_BLOCK)


@dataclass(frozen=True, eq=False)
class GaussianEnsemble:
    rows: int
    cols: int
    seed: int
    entries: np.ndarray


@dataclass(frozen=True, eq=False)
class MeasurementOperator:
    ensemble: GaussianEnsemble
    window: Window

    @property
    def shape(self) -> Tuple[int, int]:
        return self.ensemble.rows, self.ensemble.cols

    @cached_property
    def matrix(self) -> np.ndarray:
        """Assembled ``Psi @ F @ diag(w)`` (complex, ``M x N``)."""
        n = self.ensemble.cols
        f = np.fft.fft(np.eye(n), axis=0, norm="ortho")
        return self.ensemble.entries @ (f * self.window.coefficients[np.newaxis, :])

    def apply(self, x) -> np.ndarray:
        """Apply to a vector, or to each row of a 2-D batch."""
        x = np.asarray(x)
        spectrum = np.fft.fft(self.window.coefficients * x, axis=-1, norm="ortho")
        return spectrum @ self.ensemble.entries.T


def sample_ensemble(rows: int, cols: int, seed: int) -> GaussianEnsemble:
    if rows < 1 or cols < 1:
        raise ValueError("ensemble dimensions must be positive")
    if rows > cols:
        raise ValueError(f"M={rows} exceeds N={cols}; compression requires M <= N")
    entries = np.random.default_rng(seed).normal(0.0, 1.0 / math.sqrt(rows), (rows, cols))
    entries.setflags(write=False)
    return GaussianEnsemble(rows, cols, seed, entries)


def compose_windowed(ensemble: GaussianEnsemble, window: Window) -> MeasurementOperator:
    if window.length != ensemble.cols:
        raise ValueError(f"window length {window.length} != ensemble cols {ensemble.cols}")
    return MeasurementOperator(ensemble, window)


def two_stability_energy(operator: MeasurementOperator, x, trials: int = 100_000, seed: int = 0) -> float:
    """Monte-Carlo mean of ``||Psi D_w x||^2`` over freshly drawn ensembles.

    Converges to ``sum(w_i^2 x_i^2)``; the unitary DFT leaves the energy
    unchanged so it is not applied here.
    """
    if trials < 10_000:
        raise ValueError("two_stability_energy needs at least 1e4 trials")
    m, n = operator.shape
    v = operator.window.coefficients * np.asarray(x, dtype=float)
    if v.shape != (n,):
        raise ValueError(f"x must have length {n}")
    total = 0.0
    for block, count in _trial_blocks(trials):
        rng = trial_rng(seed, block)
        step = max(1, 2_000_000 // (m * n))
        for start in range(0, count, step):
            psi = rng.normal(0.0, 1.0 / math.sqrt(m), (min(step, count - start), m, n))
            total += float(np.sum((psi @ v) ** 2))
    return total / trials


@dataclass(frozen=True)
class RipEstimate:
    sparsity: int
    trials: int
    empirical_lower: float
    empirical_upper: float
    theoretical_lower: float
    theoretical_upper: float
    delta_ref: float
    mean_ratio: float = float("nan")

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.empirical_lower + self.empirical_upper)


def random_sparse_unit(rng: np.random.Generator, n: int, k: int, count: int) -> np.ndarray:
    """``count`` rows of k-sparse unit vectors with Gaussian nonzeros."""
    x = np.zeros((count, n))
    for row in x:
        support = rng.choice(n, size=k, replace=False)
        v = rng.standard_normal(k)
        row[support] = v / np.linalg.norm(v)
    return x


def rip_reference_bounds(window: Window, delta_ref: float = DEFAULT_DELTA_REF) -> Tuple[float, float]:
    """Reference RIP interval centred on the window scaling coefficient."""
    if not 0 <= delta_ref < 1:
        raise ValueError("delta_ref must lie in [0, 1)")
    alpha = wsc(window)
    return (1 - delta_ref) * alpha, (1 + delta_ref) * alpha


def rip_empirical(operator: MeasurementOperator, k: int, trials: int = 2000, seed: int = 0,
                  delta_ref: float = DEFAULT_DELTA_REF) -> RipEstimate:
    """Min/max of ``||Theta x||^2`` over random k-sparse unit vectors ``x``."""
    m, n = operator.shape
    if k < 1:
        raise ValueError("sparsity must be at least 1")
    if k > m:
        raise ValueError(f"sparsity k={k} exceeds M={m}")
    if trials < 1000:
        raise ValueError("rip_empirical needs at least 1000 trials")
    lo, hi, total = math.inf, -math.inf, 0.0
    for block, count in _trial_blocks(trials):
        x = random_sparse_unit(trial_rng(seed, block), n, k, count)
        ratio = np.sum(np.abs(operator.apply(x)) ** 2, axis=1)
        lo, hi = min(lo, float(ratio.min())), max(hi, float(ratio.max()))
        total += float(ratio.sum())
    ref_lo, ref_hi = rip_reference_bounds(operator.window, delta_ref)
    return RipEstimate(k, trials, lo, hi, ref_lo, ref_hi, delta_ref, total / trials)


def c0_simple(eps: float) -> float:
    """Concentration constant ``eps^2/16 - eps^3/48`` of the Gaussian J-L argument."""
    return eps ** 2 / 16 - eps ** 3 / 48


def rip_success_probability(delta: float, k: int, n: int,
                            c0: Callable[[float], float] = c0_simple) -> float:
    """Lower bound ``1 - 2 (12/delta)^k exp(-c0(delta/2) n)``, clamped at 0."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if k < 1 or n < 1:
        raise ValueError("k and n must be positive")
    log_fail = math.log(2) + k * math.log(12 / delta) - c0(delta / 2) * n
    if log_fail >= 0:
        return 0.0
    return -math.expm1(log_fail)
