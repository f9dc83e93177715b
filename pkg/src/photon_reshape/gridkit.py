"""Uniform sampling grids and the unitary time/frequency transform pair.

Envelopes follow the ``A(t) exp(-i w0 t)`` carrier convention, so the
spectrum is ``A~(nu) = integral A(tau) exp(+i nu tau) dtau`` with ``tau`` and
``nu`` measured from the grid centres.  Frequency grids keep the absolute
carrier ``w0`` in ``center`` and work in detunings everywhere else.
"""

from __future__ import annotations

__version__ = "0.1.0"

from dataclasses import dataclass, field

import numpy as np

from .errors import GridError

TIME = "time"
FREQUENCY = "frequency"


@dataclass(frozen=True)
class SampledGrid:
    """``n`` uniform samples ``center + (k - n/2) * spacing``, k = 0..n-1.

    ``spacing`` is in seconds for time grids and rad/s for frequency grids.
    """

    n: int
    spacing: float
    center: float = 0.0
    domain: str = TIME

    def __post_init__(self):
        n = int(self.n)
        if n < 16 or n & (n - 1):
            raise GridError(f"grid size must be a power of two >= 16, got {self.n}")
        if not np.isfinite(self.spacing) or self.spacing <= 0:
            raise GridError(f"grid spacing must be positive, got {self.spacing}")
        if self.domain not in (TIME, FREQUENCY):
            raise GridError(f"unknown grid domain {self.domain!r}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "center", float(self.center))

    @property
    def relative(self) -> np.ndarray:
        """Offsets from the centre; index ``n // 2`` is exactly zero."""
        return (np.arange(self.n) - self.n // 2) * self.spacing

    @property
    def absolute(self) -> np.ndarray:
        return self.center + self.relative

    @property
    def span(self) -> float:
        return self.n * self.spacing

    def conjugate(self, center: float = 0.0) -> "SampledGrid":
        """Grid paired with this one by the discrete Fourier transform."""
        other = FREQUENCY if self.domain == TIME else TIME
        return SampledGrid(self.n, 2.0 * np.pi / (self.n * self.spacing), center, other)

    def measure(self) -> float:
        """Integration weight that makes energies agree across domains."""
        if self.domain == TIME:
            return self.spacing
        return self.spacing / (2.0 * np.pi)

    def compatible(self, other: "SampledGrid", rtol: float = 1e-12) -> bool:
        return (
            self.n == other.n
            and self.domain == other.domain
            and abs(self.spacing - other.spacing) <= rtol * self.spacing
            and abs(self.center - other.center) <= rtol * max(abs(self.center), self.spacing)
        )


def time_grid(n: int, window: float, center: float = 0.0) -> SampledGrid:
    """Time grid of ``n`` points covering ``window`` seconds."""
    return SampledGrid(n, window / n, center, TIME)


def frequency_grid(n: int, span: float, center: float) -> SampledGrid:
    """Frequency grid of ``n`` points covering ``span`` rad/s about ``center``."""
    return SampledGrid(n, span / n, center, FREQUENCY)


@dataclass(frozen=True)
class ComplexEnvelope:
    """Complex samples on a grid.

    ``conjugate_center`` is the centre of the paired grid: the carrier
    frequency for time-domain envelopes and the time reference for spectra.
    """

    grid: SampledGrid
    samples: np.ndarray = field(repr=False)
    conjugate_center: float = 0.0

    def __post_init__(self):
        samples = np.array(self.samples, dtype=complex)
        if samples.shape != (self.grid.n,):
            raise GridError(
                f"expected {self.grid.n} samples, got array of shape {samples.shape}"
            )
        if not np.all(np.isfinite(samples)):
            raise GridError("envelope samples must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    @property
    def energy(self) -> float:
        return energy(self)


def energy(env: ComplexEnvelope) -> float:
    """``sum |A|^2`` times the domain measure (dt, or dw / 2 pi)."""
    return float(np.sum(np.abs(env.samples) ** 2) * env.grid.measure())


def _forward(samples: np.ndarray, dt: float, axis: int = -1) -> np.ndarray:
    n = samples.shape[axis]
    shifted = np.fft.ifftshift(samples, axes=axis)
    return np.fft.fftshift(np.fft.ifft(shifted, axis=axis), axes=axis) * (n * dt)


def _inverse(spectrum: np.ndarray, dt: float, axis: int = -1) -> np.ndarray:
    n = spectrum.shape[axis]
    shifted = np.fft.ifftshift(spectrum, axes=axis)
    return np.fft.fftshift(np.fft.fft(shifted, axis=axis), axes=axis) / (n * dt)


def spectrum_of(samples: np.ndarray, dt: float, axis: int = -1) -> np.ndarray:
    """Array version of :func:`to_frequency` (acts along ``axis``)."""
    return _forward(np.asarray(samples, dtype=complex), dt, axis)


def field_of(spectrum: np.ndarray, dt: float, axis: int = -1) -> np.ndarray:
    """Array version of :func:`to_time`; ``dt`` is the conjugate time step."""
    return _inverse(np.asarray(spectrum, dtype=complex), dt, axis)


def to_frequency(env: ComplexEnvelope) -> ComplexEnvelope:
    """Spectrum of a time-domain envelope.

    Parseval holds as ``sum |A|^2 dt == sum |A~|^2 dw / 2 pi``.
    """
    if env.grid.domain != TIME:
        raise GridError("to_frequency expects a time-domain envelope")
    grid = env.grid.conjugate(env.conjugate_center)
    return ComplexEnvelope(grid, _forward(env.samples, env.grid.spacing), env.grid.center)


def to_time(env: ComplexEnvelope) -> ComplexEnvelope:
    """Inverse of :func:`to_frequency`."""
    if env.grid.domain != FREQUENCY:
        raise GridError("to_time expects a frequency-domain envelope")
    grid = env.grid.conjugate(env.conjugate_center)
    return ComplexEnvelope(grid, _inverse(env.samples, grid.spacing), env.grid.center)


def centroid(env: ComplexEnvelope) -> float:
    """Intensity-weighted mean coordinate, in absolute grid units."""
    weights = np.abs(env.samples) ** 2
    total = weights.sum()
    if not total > 0:
        raise GridError("centroid of a zero-energy envelope is undefined")
    return env.grid.center + float(np.dot(env.grid.relative, weights) / total)


def relative_centroid(values: np.ndarray, weights: np.ndarray) -> float:
    total = float(np.sum(weights))
    if not total > 0:
        raise GridError("centroid of a zero-energy distribution is undefined")
    return float(np.dot(values, weights) / total)


def fwhm(env: ComplexEnvelope) -> float:
    """Full width at half maximum of ``|A|^2`` with linear interpolation.

    With several peaks the outermost half-maximum crossings are used.
    """
    return width_at_half_maximum(env.grid.relative, np.abs(env.samples) ** 2)


def width_at_half_maximum(x: np.ndarray, y: np.ndarray) -> float:
    y = np.asarray(y, dtype=float)
    peak = y.max()
    if not peak > 0:
        raise GridError("FWHM of a zero-energy profile is undefined")
    half = 0.5 * peak
    above = np.flatnonzero(y >= half)
    lo, hi = above[0], above[-1]
    if lo == 0 or hi == len(y) - 1:
        raise GridError("profile does not fall below half maximum inside the grid")
    left = x[lo - 1] + (half - y[lo - 1]) * (x[lo] - x[lo - 1]) / (y[lo] - y[lo - 1])
    right = x[hi] + (y[hi] - half) * (x[hi + 1] - x[hi]) / (y[hi] - y[hi + 1])
    return float(right - left)
