"""Greedy sparse and block-sparse recovery over windowed measurements.

The unknown is the windowed unitary spectrum ``z = F (w * s)`` of a time
signal ``s``; the measurements are ``y = Psi z + n``, so the dictionary
seen by the solvers is the Gaussian matrix ``Psi`` itself. The original
time signal is recovered afterwards by undoing the window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from wincss.block_model import BlockStructure, blocks_from_spectrum
from wincss.measurement import MeasurementOperator, compose_windowed, sample_ensemble
from wincss.spectrum_core import MultiToneSpec, synthesize
from wincss.window_lab import Window, generate_window

SUCCESS_NMSE = 1e-3
WINDOW_FLOOR = 1e-6
_RIDGE = 1e-10


@dataclass(frozen=True, eq=False)
class SparseInstance:
    operator: MeasurementOperator
    measurements: np.ndarray
    truth_spectrum: Optional[np.ndarray] = None
    truth_blocks: Optional[BlockStructure] = None
    noise_std: float = 0.0

    def __post_init__(self):
        y = np.asarray(self.measurements, dtype=complex)
        object.__setattr__(self, "measurements", y)
        if y.shape != (self.operator.shape[0],):
            raise ValueError(f"measurements must have length M={self.operator.shape[0]}")


@dataclass(frozen=True, eq=False)
class RecoveryResult:
    support: Tuple[int, ...]
    estimate: np.ndarray
    residual_norm: float
    iterations: int
    nmse: Optional[float] = None
    residual_history: Tuple[float, ...] = ()
    blocks: Tuple[int, ...] = ()
    regularized: bool = False


def instance_from_spectrum(operator: MeasurementOperator, spectrum, noise_std: float = 0.0,
                           seed: int = 0, blocks: Optional[BlockStructure] = None) -> SparseInstance:
    """Measure a known windowed spectrum, adding complex noise of total std ``noise_std``."""
    z = np.asarray(spectrum, dtype=complex)
    y = operator.ensemble.entries @ z
    if noise_std > 0:
        rng = np.random.default_rng(seed)
        y = y + noise_std / math.sqrt(2) * (rng.standard_normal(y.size) + 1j * rng.standard_normal(y.size))
    return SparseInstance(operator, y, z, blocks, noise_std)


def make_instance(operator: MeasurementOperator, signal, noise_std: float = 0.0, seed: int = 0,
                  floor_db: Optional[float] = None) -> SparseInstance:
    """Instance for time signal ``signal``; truth blocks come from ``floor_db`` if given."""
    z = np.fft.fft(operator.window.coefficients * np.asarray(signal), norm="ortho")
    blocks = blocks_from_spectrum(z, floor_db) if floor_db is not None else None
    y = operator.apply(signal)
    if noise_std > 0:
        rng = np.random.default_rng(seed)
        y = y + noise_std / math.sqrt(2) * (rng.standard_normal(y.size) + 1j * rng.standard_normal(y.size))
    return SparseInstance(operator, y, z, blocks, noise_std)


def nmse(estimate, truth) -> float:
    truth = np.asarray(truth)
    energy = float(np.vdot(truth, truth).real)
    err = float(np.sum(np.abs(np.asarray(estimate) - truth) ** 2))
    if energy == 0:
        return 0.0 if err == 0 else math.inf
    return err / energy


def _least_squares(a: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, bool]:
    """Least squares for real ``a`` and complex ``y``; ridge fallback when rank deficient."""
    rhs = np.column_stack((y.real, y.imag))
    coef, _, rank, _ = np.linalg.lstsq(a, rhs, rcond=None)
    regularized = rank < a.shape[1]
    if regularized:
        gram = a.T @ a
        lam = _RIDGE * max(float(np.trace(gram)), 1.0)
        coef = np.linalg.solve(gram + lam * np.eye(gram.shape[0]), a.T @ rhs)
    return coef[:, 0] + 1j * coef[:, 1], regularized


def _greedy(instance: SparseInstance, iterations: int, block_length: int, tol: float,
            refine: bool = False) -> RecoveryResult:
    a = instance.operator.ensemble.entries
    y = instance.measurements
    m, n = a.shape
    if block_length < 1 or block_length > n:
        raise ValueError("block length must lie in [1, N]")
    if iterations < 0:
        raise ValueError("budget must be non-negative")
    if iterations * block_length > m:
        raise ValueError(f"budget {iterations} x {block_length} exceeds M={m}")
    norms = np.linalg.norm(a, axis=0)
    y_norm = float(np.linalg.norm(y))
    estimate = np.zeros(n, dtype=complex)
    selected = np.zeros(n, dtype=bool)
    starts: List[int] = []
    history = [y_norm]
    residual = y
    regularized = False
    if y_norm == 0:
        iterations = 0
    for _ in range(iterations):
        energy = (np.abs(a.T @ residual) / norms) ** 2
        csum = np.concatenate(([0.0], np.cumsum(energy)))
        score = csum[block_length:] - csum[:-block_length]
        fresh = np.concatenate(([0], np.cumsum(~selected)))
        score[(fresh[block_length:] - fresh[:-block_length]) == 0] = -np.inf
        start = int(np.argmax(score))
        if not np.isfinite(score[start]):
            break
        starts.append(start)
        selected[start:start + block_length] = True
        support = np.flatnonzero(selected)
        coef, reg = _least_squares(a[:, support], y)
        regularized |= reg
        residual = y - a[:, support] @ coef
        estimate[:] = 0
        estimate[support] = coef
        history.append(float(np.linalg.norm(residual)))
        if history[-1] <= tol * y_norm:
            break
    if refine and block_length > 1 and starts and history[-1] > tol * y_norm:
        starts, coef, support, reg = _polish(a, y, starts, block_length, history)
        regularized |= reg
        selected[:] = False
        selected[support] = True
        estimate[:] = 0
        estimate[support] = coef
    error = None
    if instance.truth_spectrum is not None:
        error = nmse(estimate, instance.truth_spectrum)
    return RecoveryResult(tuple(int(i) for i in np.flatnonzero(selected)), estimate, history[-1],
                          len(starts), error, tuple(history), tuple(starts), regularized)


def _union(starts: Sequence[int], block_length: int) -> np.ndarray:
    return np.unique(np.concatenate([np.arange(s, s + block_length) for s in starts]))


def _residual_norm(a: np.ndarray, y: np.ndarray) -> float:
    """Distance from ``y`` to the column span of ``a`` (full column rank assumed)."""
    if a.shape[1] >= a.shape[0]:
        return 0.0
    q = np.linalg.qr(a)[0]
    proj = q.T @ np.column_stack((y.real, y.imag))
    rest = float(np.vdot(y, y).real) - float(np.sum(proj ** 2))
    return math.sqrt(max(rest, 0.0))


def _polish(a: np.ndarray, y: np.ndarray, starts: List[int], block_length: int, history: List[float],
            max_passes: int = 10):
    """Shift picked blocks by fewer than ``block_length`` bins while the fit improves.

    A greedy pick that straddles a true block edge keeps part of the
    overlap; sliding it back recovers the bins it missed. Appends each
    improved residual norm to ``history``.
    """
    n = a.shape[1]
    support = _union(starts, block_length)
    coef, reg = _least_squares(a[:, support], y)
    for _ in range(max_passes):
        moved = False
        for i, start in enumerate(list(starts)):
            for shift in range(1 - block_length, block_length):
                cand = start + shift
                if shift == 0 or not 0 <= cand <= n - block_length:
                    continue
                trial = starts[:i] + [cand] + starts[i + 1:]
                trial_support = _union(trial, block_length)
                if _residual_norm(a[:, trial_support], y) < history[-1] * (1 - 1e-9):
                    trial_coef, trial_reg = _least_squares(a[:, trial_support], y)
                    res = float(np.linalg.norm(y - a[:, trial_support] @ trial_coef))
                    if res >= history[-1]:
                        continue
                    starts, support, coef, reg = trial, trial_support, trial_coef, reg or trial_reg
                    history.append(res)
                    start = cand
                    moved = True
        if not moved:
            break
    return starts, coef, support, reg


def omp(instance: SparseInstance, sparsity_budget: int, tol: float = 1e-12) -> RecoveryResult:
    """Orthogonal matching pursuit with at most ``sparsity_budget`` picks.

    Columns are scored by normalized correlation with the residual; the
    coefficients are refit by least squares on the whole support after
    every pick. Stops early once the residual falls below ``tol * ||y||``.
    """
    return _greedy(instance, sparsity_budget, 1, tol)


def block_omp(instance: SparseInstance, block_budget: int, block_length: int,
              tol: float = 1e-12, refine: bool = True) -> RecoveryResult:
    """Block OMP over sliding contiguous blocks of ``block_length`` bins.

    Each step picks the block (any start bin) with the largest summed
    squared normalized correlation, then refits on the union of the picked
    blocks. After the last pick, each block is slid by fewer than
    ``block_length`` bins while that lowers the residual (``refine``), which
    repairs picks that straddle a true block edge. With ``block_length=1``
    there is nothing to slide and this is exactly :func:`omp`.
    """
    return _greedy(instance, block_budget, block_length, tol, refine)


def reconstruct_time_signal(spectrum, window: Window, floor: float = WINDOW_FLOOR) -> Tuple[np.ndarray, np.ndarray]:
    """Undo the window: ``s = F^H z / w``.

    Samples where ``|w| < floor`` cannot be inverted; they are set to zero
    and reported in the returned boolean mask.
    """
    windowed = np.fft.ifft(np.asarray(spectrum), norm="ortho")
    w = window.coefficients
    flagged = np.abs(w) < floor
    out = np.zeros_like(windowed)
    out[~flagged] = windowed[~flagged] / w[~flagged]
    return out, flagged


def random_block_spectrum(rng: np.random.Generator, n: int, blocks: int, block_length: int) -> Tuple[np.ndarray, BlockStructure]:
    """Complex Gaussian spectrum with ``blocks`` separated runs of ``block_length`` bins."""
    free = n + 1 - blocks * block_length
    if free < blocks:
        raise ValueError("blocks do not fit separated")
    # stars and bars: sorted distinct gap markers give separated starts
    marks = np.sort(rng.choice(free, size=blocks, replace=False))
    starts = marks + block_length * np.arange(blocks)
    z = np.zeros(n, dtype=complex)
    for s in starts:
        z[s:s + block_length] = rng.standard_normal(block_length) + 1j * rng.standard_normal(block_length)
    return z, BlockStructure(n, tuple((int(s), block_length) for s in starts))


def cell_seed(seed: int, *keys: int) -> int:
    """Deterministic 32-bit seed for a sweep cell."""
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1)[0])


@dataclass(frozen=True)
class SweepRow:
    measurements: int
    successes: int
    trials: int

    @property
    def rate(self) -> float:
        return self.successes / self.trials


@dataclass(frozen=True)
class SweepTable:
    window: str
    rows: Tuple[SweepRow, ...]
    success_nmse: float = SUCCESS_NMSE
    metadata: dict = field(default_factory=dict)

    def first_reaching(self, rate: float) -> float:
        """Smallest M with success rate >= ``rate``; ``inf`` if never reached."""
        for row in self.rows:
            if row.rate >= rate:
                return row.measurements
        return math.inf


def _check_grid(m_grid: Sequence[int], trials: int, min_trials: int) -> List[int]:
    grid = [int(m) for m in m_grid]
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("m_grid must be strictly ascending and non-empty")
    if trials < min_trials:
        raise ValueError(f"need at least {min_trials} trials")
    return grid


def _block_trial_success(inst: SparseInstance, blocks: BlockStructure, success_nmse: float) -> bool:
    if blocks.empty or not blocks.blocks:
        return False
    c, b = blocks.block_count, max(blocks.lengths)
    if c * b > inst.operator.shape[0]:
        return False
    result = block_omp(inst, c, b)
    if inst.noise_std == 0:
        return result.nmse < success_nmse
    # noisy: within 3 dB of the least-squares oracle on the true support
    support = blocks.support()
    a = inst.operator.ensemble.entries
    coef, _ = _least_squares(a[:, support], inst.measurements)
    oracle = np.zeros(a.shape[1], dtype=complex)
    oracle[support] = coef
    return result.nmse <= 2 * nmse(oracle, inst.truth_spectrum)


def measurement_sweep(spec: MultiToneSpec, window, floor_db: float, m_grid: Sequence[int],
                      trials: int = 20, seed: int = 0, success_nmse: float = SUCCESS_NMSE) -> SweepTable:
    """Block-OMP success rate versus the number of measurements.

    Each ``(M, trial)`` cell draws its own ensemble and noise from
    :func:`cell_seed`. The block budget and width come from the noise-floor
    block structure of the windowed spectrum (count of blocks, longest
    block). Noiseless trials succeed when nmse < ``success_nmse``; noisy
    ones when nmse is within 3 dB of the oracle least-squares fit on the
    true blocks.
    """
    grid = _check_grid(m_grid, trials, 20)
    n = spec.grid.length
    if not isinstance(window, Window):
        window = generate_window(window, n)
    rows = []
    for m in grid:
        if m > n:
            raise ValueError(f"M={m} exceeds N={n}")
        wins = 0
        for t in range(trials):
            s = cell_seed(seed, m, t)
            op = compose_windowed(sample_ensemble(m, n, s), window)
            inst = make_instance(op, synthesize(spec, s), 0.0, s, floor_db)
            wins += _block_trial_success(inst, inst.truth_blocks, success_nmse)
        rows.append(SweepRow(m, wins, trials))
    meta = {"success_nmse": success_nmse, "floor_db": floor_db, "seed": seed, "N": n}
    return SweepTable(window.kind.label, tuple(rows), success_nmse, meta)


def block_recovery_sweep(n: int, blocks: int, block_length: int, m_grid: Sequence[int],
                         trials: int = 100, seed: int = 0, method: str = "block_omp",
                         success_nmse: float = SUCCESS_NMSE) -> SweepTable:
    """Success rate on synthetic block-sparse spectra, unwindowed operator.

    ``method`` is ``"block_omp"`` (budget ``blocks``, width ``block_length``)
    or ``"omp"`` (budget ``blocks * block_length``). Trial ``t`` uses the
    same spectrum and ensemble for both methods.
    """
    grid = _check_grid(m_grid, trials, 1)
    rect = generate_window("rectangular", n)
    rows = []
    for m in grid:
        wins = 0
        for t in range(trials):
            s = cell_seed(seed, m, t)
            z, truth = random_block_spectrum(np.random.default_rng(s), n, blocks, block_length)
            op = compose_windowed(sample_ensemble(m, n, s), rect)
            inst = instance_from_spectrum(op, z, blocks=truth)
            if method == "block_omp":
                res = block_omp(inst, blocks, block_length)
            elif method == "omp":
                res = omp(inst, blocks * block_length)
            else:
                raise ValueError(f"unknown method {method!r}")
            wins += res.nmse < success_nmse
        rows.append(SweepRow(m, wins, trials))
    return SweepTable(method, tuple(rows), success_nmse, {"N": n, "C": blocks, "B": block_length, "seed": seed})
