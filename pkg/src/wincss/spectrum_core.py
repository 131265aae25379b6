"""Multi-tone synthesis, the DFT, basis mismatch and closed-form leakage."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class SamplingGrid:
    sample_rate: float
    length: int

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        if int(self.length) != self.length or self.length < 8:
            raise ValueError("grid length must be an integer >= 8")
        object.__setattr__(self, "length", int(self.length))

    @property
    def bin_width(self) -> float:
        return self.sample_rate / self.length

    def bin_frequency(self, k: float) -> float:
        """Frequency in Hz of (possibly fractional) bin ``k``."""
        return k * self.sample_rate / self.length


@dataclass(frozen=True)
class ToneComponent:
    amplitude: float
    frequency: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ValueError("tone amplitude must be positive")
        if not self.frequency >= 0:
            raise ValueError("tone frequency must be non-negative")


@dataclass(frozen=True)
class MultiToneSpec:
    grid: SamplingGrid
    tones: tuple
    noise_std: float = 0.0

    def __post_init__(self):
        tones = tuple(self.tones)
        object.__setattr__(self, "tones", tones)
        if not tones:
            raise ValueError("at least one tone is required")
        nyquist = self.grid.sample_rate / 2
        for tone in tones:
            if tone.frequency >= nyquist:
                raise ValueError(f"tone at {tone.frequency} Hz is not below f_s/2 = {nyquist} Hz")
        freqs = [t.frequency for t in tones]
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise ValueError("tone frequencies must be strictly increasing")
        if not self.noise_std >= 0:
            raise ValueError("noise_std must be non-negative")

    @classmethod
    def from_bins(cls, length: int, bins: Sequence[float], amplitudes=None, phases=None,
                  noise_std: float = 0.0, sample_rate: float = 1.0) -> "MultiToneSpec":
        """Build a spec whose tone frequencies are given in (fractional) bins."""
        grid = SamplingGrid(sample_rate, length)
        amplitudes = [1.0] * len(bins) if amplitudes is None else amplitudes
        phases = [0.0] * len(bins) if phases is None else phases
        tones = tuple(ToneComponent(a, grid.bin_frequency(b), p)
                      for b, a, p in zip(bins, amplitudes, phases))
        return cls(grid, tones, noise_std)


@dataclass(frozen=True)
class MismatchDelta:
    nearest_bin: int
    delta_bins: float


def synthesize(spec: MultiToneSpec, seed: int = 0) -> np.ndarray:
    """Sum of real cosines plus seeded white Gaussian noise."""
    n = np.arange(spec.grid.length)
    x = np.zeros(spec.grid.length)
    for tone in spec.tones:
        x += tone.amplitude * np.cos(2 * np.pi * tone.frequency * n / spec.grid.sample_rate + tone.phase)
    if spec.noise_std > 0:
        x += np.random.default_rng(seed).normal(0.0, spec.noise_std, spec.grid.length)
    return x


def complex_tone(amplitude: float, frequency: float, grid: SamplingGrid, phase: float = 0.0) -> np.ndarray:
    """Sampled complex exponential ``A exp(j(2 pi f n / f_s + phi))``."""
    n = np.arange(grid.length)
    return amplitude * np.exp(1j * (2 * np.pi * frequency * n / grid.sample_rate + phase))


def dft(signal, fast: bool = True) -> np.ndarray:
    """Unnormalized forward DFT, ``X[k] = sum_n x[n] exp(-j 2 pi k n / N)``.

    ``fast=False`` evaluates the direct O(N^2) sum.
    """
    x = np.asarray(signal)
    if x.ndim != 1 or x.size < 1:
        raise ValueError("dft expects a non-empty 1-D sequence")
    if fast:
        return np.fft.fft(x)
    n = np.arange(x.size)
    kernel = np.exp(-2j * np.pi * np.outer(n, n) / x.size)
    return kernel @ x


def idft(spectrum) -> np.ndarray:
    """Inverse of :func:`dft`."""
    return np.fft.ifft(np.asarray(spectrum))


def mismatch_delta(frequency: float, grid: SamplingGrid) -> MismatchDelta:
    """Split ``f N / f_s`` into nearest bin plus an offset in ``[-0.5, 0.5)``."""
    if not 0 <= frequency < grid.sample_rate / 2:
        raise ValueError("frequency must lie in [0, f_s/2)")
    position = frequency * grid.length / grid.sample_rate
    k = math.floor(position + 0.5)
    return MismatchDelta(int(k), position - k)


def leakage_magnitude(amplitude: float, delta: MismatchDelta, length: int) -> np.ndarray:
    """Closed-form DFT magnitude of an off-grid complex exponential.

    Entry ``k`` holds ``A |sin(pi d)| / |sin(pi d / N)|`` with
    ``d = delta - (k - nearest_bin)``; the removable singularity at
    ``d = 0 (mod N)`` evaluates to ``A N``.
    """
    if length < 8:
        raise ValueError("length must be >= 8")
    k = np.arange(length)
    d = delta.delta_bins - (k - delta.nearest_bin)
    # reduce to (-N/2, N/2] so the singular point is d == 0 only
    d = d - length * np.round(d / length)
    den = np.sin(np.pi * d / length)
    out = np.empty(length)
    regular = np.abs(d) > 1e-12
    out[regular] = np.abs(np.sin(np.pi * d[regular]) / den[regular])
    out[~regular] = length
    return amplitude * out


def energy_fraction_near_peak(spectrum: np.ndarray, half_width: int = 2) -> float:
    """Share of spectral energy within ``half_width`` bins of the peak (circular)."""
    p = np.abs(spectrum) ** 2
    peak = int(np.argmax(p))
    idx = (peak + np.arange(-half_width, half_width + 1)) % p.size
    return float(p[idx].sum() / p.sum())
