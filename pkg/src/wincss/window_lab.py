"""Window functions and the edge/scaling metrics used to rank them.

All windows are symmetric (non-periodic) and peak-normalized. The metrics:

* ``ezc``  -- log10 of the window integral over the first 1/20 of the record.
* ``wsc``  -- mean of the coefficients; centre of the windowed RIP interval.
* ``nze``  -- log10 of the fraction of DFT bins above a relative threshold.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

if TYPE_CHECKING:
    from wincss.spectrum_core import MultiToneSpec

EDGE_FRACTION = 0.05
DEFAULT_GAUSSIAN_SIGMA = 0.2
DEFAULT_NZE_THRESHOLD_DB = -60.0


class Continuity(str, enum.Enum):
    DISCONTINUOUS = "Discontinuous"
    ZEROTH_ORDER = "ZerothOrder"
    FIRST_ORDER = "FirstOrder"


NAMED_KINDS = ("rectangular", "triangular", "hamming", "hann", "blackman", "gaussian")

_CONTINUITY = {
    "rectangular": Continuity.DISCONTINUOUS,
    "hamming": Continuity.DISCONTINUOUS,
    "gaussian": Continuity.DISCONTINUOUS,
    "triangular": Continuity.ZEROTH_ORDER,
    "hann": Continuity.ZEROTH_ORDER,
    "blackman": Continuity.FIRST_ORDER,
}


@dataclass(frozen=True)
class WindowKind:
    """Window identity.

    ``name`` is one of :data:`NAMED_KINDS` or ``"custom"``; ``sigma`` only
    matters for the Gaussian window (fraction of record duration) and
    ``coefficients`` only for custom windows.
    """

    name: str
    sigma: float = DEFAULT_GAUSSIAN_SIGMA
    coefficients: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        name = self.name.lower()
        object.__setattr__(self, "name", name)
        if name not in NAMED_KINDS and name != "custom":
            raise ValueError(f"unknown window kind {self.name!r}; options: {NAMED_KINDS}")
        if name == "gaussian" and not self.sigma > 0:
            raise ValueError("gaussian sigma must be positive")
        if name == "custom" and self.coefficients is None:
            raise ValueError("custom window requires coefficients")

    @classmethod
    def parse(cls, text: str) -> "WindowKind":
        """Parse ``"hann"`` or ``"gaussian:0.3"`` style strings."""
        name, _, arg = text.strip().partition(":")
        if arg:
            return cls(name, sigma=float(arg))
        return cls(name)

    @classmethod
    def custom(cls, coefficients: Sequence[float]) -> "WindowKind":
        return cls("custom", coefficients=tuple(float(c) for c in coefficients))

    @property
    def label(self) -> str:
        if self.name == "gaussian" and self.sigma != DEFAULT_GAUSSIAN_SIGMA:
            return f"gaussian:{self.sigma:g}"
        return self.name


@dataclass(frozen=True)
class Window:
    kind: WindowKind
    coefficients: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.coefficients, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "coefficients", w)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("window coefficients must be a non-empty 1-D sequence")
        if np.any(w < 0) or np.any(w > 1 + 1e-12) or not math.isclose(w.max(), 1.0, abs_tol=1e-12):
            raise ValueError("window must be peak-normalized with 0 <= w <= 1")
        if np.max(np.abs(w - w[::-1])) > 1e-12:
            raise ValueError("window must be symmetric")

    @property
    def length(self) -> int:
        return self.coefficients.size

    def __len__(self) -> int:
        return self.coefficients.size


@dataclass(frozen=True)
class WindowMetrics:
    ezc: float
    wsc: float
    nze: float
    continuity: Optional[Continuity]


def _coefficients(kind: WindowKind, length: int) -> np.ndarray:
    u = np.arange(length) / (length - 1)
    name = kind.name
    if name == "rectangular":
        return np.ones(length)
    if name == "triangular":
        return 1.0 - np.abs(2.0 * u - 1.0)
    if name == "hamming":
        return 0.54 - 0.46 * np.cos(2 * np.pi * u)
    if name == "hann":
        return 0.5 - 0.5 * np.cos(2 * np.pi * u)
    if name == "blackman":
        return 0.42 - 0.5 * np.cos(2 * np.pi * u) + 0.08 * np.cos(4 * np.pi * u)
    if name == "gaussian":
        return np.exp(-0.5 * ((u - 0.5) / kind.sigma) ** 2)
    coeffs = np.asarray(kind.coefficients, dtype=float)
    if coeffs.size != length:
        raise ValueError(f"custom window has {coeffs.size} coefficients, expected {length}")
    return coeffs


def generate_window(kind, length: int) -> Window:
    """Generate a peak-normalized symmetric window of ``length`` samples.

    ``kind`` may be a :class:`WindowKind` or a string accepted by
    :meth:`WindowKind.parse`.
    """
    if isinstance(kind, str):
        kind = WindowKind.parse(kind)
    if int(length) != length or length < 4:
        raise ValueError(f"window length must be an integer >= 4, got {length}")
    length = int(length)
    w = _coefficients(kind, length)
    peak = w.max()
    if not peak > 0:
        raise ValueError("window has no positive coefficient")
    w = w / peak
    # symmetrize away last-ulp cosine asymmetry and pin the range
    w = np.clip(0.5 * (w + w[::-1]), 0.0, 1.0)
    return Window(kind, w)


def edge_integral(coefficients) -> float:
    """Trapezoid integral of the sampled window over the first 1/20 of ``[0, 1]``.

    Sample ``i`` sits at ``i / (N - 1)``; the value at 0.05 is linearly
    interpolated.
    """
    w = np.asarray(coefficients, dtype=float)
    u = np.arange(w.size) / (w.size - 1)
    inside = u < EDGE_FRACTION
    x = np.append(u[inside], EDGE_FRACTION)
    y = np.append(w[inside], np.interp(EDGE_FRACTION, u, w))
    return float(np.trapezoid(y, x))


def ezc(window: Window) -> float:
    """Edge zeroing coefficient: log10 of :func:`edge_integral`."""
    integral = edge_integral(window.coefficients)
    if not integral > 0:
        raise RuntimeError("edge integral is not positive")
    return math.log10(integral)


def wsc(window: Window) -> float:
    """Window scaling coefficient: the arithmetic mean of the coefficients."""
    return float(np.mean(window.coefficients))


def nze(window: Window, tones: "MultiToneSpec", threshold_db: float = DEFAULT_NZE_THRESHOLD_DB,
        seed: int = 0) -> float:
    """log10 of the fraction of windowed-spectrum bins above ``threshold_db``.

    The threshold is relative to the spectrum peak and the comparison is
    strict. ``seed`` only matters when ``tones`` carries noise.
    """
    from wincss.spectrum_core import dft, synthesize

    if not threshold_db < 0:
        raise ValueError("threshold_db must be negative (relative to peak)")
    n = tones.grid.length
    if window.length != n:
        raise ValueError(f"window length {window.length} != signal length {n}")
    mag = np.abs(dft(window.coefficients * synthesize(tones, seed)))
    peak = mag.max()
    count = int(np.count_nonzero(mag > peak * 10 ** (threshold_db / 20))) if peak > 0 else 0
    if count == 0:
        warnings.warn("no bin above threshold; returning log10(1/N) floor", RuntimeWarning)
        count = 1
    return math.log10(count / n)


def continuity_class(kind) -> Continuity:
    if isinstance(kind, str):
        kind = WindowKind.parse(kind)
    if kind.name == "custom":
        raise ValueError("continuity class is only defined for named windows")
    return _CONTINUITY[kind.name]


def boundary_continuous(kind) -> bool:
    """The BC flag: True when the window reaches zero at both ends."""
    return continuity_class(kind) is not Continuity.DISCONTINUOUS


def window_metrics(window: Window, tones: "MultiToneSpec",
                   threshold_db: float = DEFAULT_NZE_THRESHOLD_DB) -> WindowMetrics:
    cont = None if window.kind.name == "custom" else continuity_class(window.kind)
    return WindowMetrics(ezc(window), wsc(window), nze(window, tones, threshold_db), cont)
