"""Two-photon joint spectral amplitudes: construction, filtering, reshaping.

Amplitudes are stored as ``amplitude[i_s, i_i]`` on two frequency grids with
absolute centres.  Norms are ``sum |S|^2 dw_s dw_i``.
"""

from __future__ import annotations

__version__ = "0.1.0"

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import gridkit
from .errors import GridError, ZeroStateWarning
from .fiber import C, omega_to_wavelength, wavelength_to_omega
from .gridkit import SampledGrid
from .propagate import SignalOperator

SIGNAL = "signal"
IDLER = "idler"
RECTANGULAR = "rectangular"
GAUSSIAN = "gaussian"

_FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


@dataclass(frozen=True)
class SpdcSpec:
    """Type-II SPDC source with linearised phase matching.

    ``gvm_ps`` and ``gvm_pi`` are the inverse-group-velocity mismatches
    ``k'_p - k'_s`` and ``k'_p - k'_i`` (s/m).  ``phase_mismatch`` is a
    constant offset (rad) added to ``dk L / 2``; non-zero values move the
    photons away from degeneracy.
    """

    pump_center: float = 756e-9
    pump_bandwidth: float = 3.0e12
    crystal_length: float = 5e-3
    gvm_ps: float = 2.0e-10
    gvm_pi: float = -2.0e-10
    phase_mismatch: float = 0.0
    degenerate_wavelength: float | None = None

    def __post_init__(self):
        if not (self.pump_center > 0 and self.crystal_length > 0):
            raise ValueError("pump_center and crystal_length must be positive")
        if not self.pump_bandwidth > 0:
            raise ValueError("pump_bandwidth must be positive")
        if self.degenerate_wavelength is None:
            object.__setattr__(self, "degenerate_wavelength", 2.0 * self.pump_center)
        elif not self.degenerate_wavelength > 0:
            raise ValueError("degenerate_wavelength must be positive")

    @property
    def degenerate_omega(self) -> float:
        return float(wavelength_to_omega(self.degenerate_wavelength))

    def phase_matching_bandwidth(self) -> float:
        """FWHM (rad/s) of the sinc^2 factor along its steepest direction."""
        g = math.hypot(self.gvm_ps, self.gvm_pi)
        # sinc^2(x) falls to 1/2 at x = 1.39156
        return 4.0 * 1.391557 / (g * self.crystal_length)


@dataclass(frozen=True)
class JointSpectralAmplitude:
    grid_s: SampledGrid
    grid_i: SampledGrid
    amplitude: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.grid_s.domain != gridkit.FREQUENCY or self.grid_i.domain != gridkit.FREQUENCY:
            raise GridError("joint spectra live on frequency grids")
        amp = np.array(self.amplitude, dtype=complex)
        if amp.shape != (self.grid_s.n, self.grid_i.n):
            raise GridError(f"amplitude shape {amp.shape} does not match the grids")
        if not np.all(np.isfinite(amp)):
            raise ValueError("joint spectral amplitude must be finite")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitude", amp)

    @property
    def cell(self) -> float:
        return self.grid_s.spacing * self.grid_i.spacing

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitude) ** 2) * self.cell)

    def replace(self, amplitude) -> "JointSpectralAmplitude":
        return JointSpectralAmplitude(self.grid_s, self.grid_i, amplitude)

    def normalized(self) -> "JointSpectralAmplitude":
        norm = self.norm
        if not norm > 0:
            raise ValueError("cannot normalize a zero state")
        return self.replace(self.amplitude / math.sqrt(norm))

    def same_grids(self) -> bool:
        return self.grid_s.compatible(self.grid_i)


@dataclass(frozen=True)
class FilterSpec:
    """Band-pass filter; ``center`` and FWHM ``width`` in metres."""

    center: float
    width: float = 0.4e-9
    shape: str = RECTANGULAR

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("filter width must be positive")
        if self.shape not in (RECTANGULAR, GAUSSIAN):
            raise ValueError(f"unknown filter shape {self.shape!r}")

    def amplitude(self, omega) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        if self.shape == RECTANGULAR:
            lam = omega_to_wavelength(omega)
            # half-open so adjacent filters tile the axis without overlap
            return ((lam >= self.center - 0.5 * self.width)
                    & (lam < self.center + 0.5 * self.width)).astype(float)
        w0 = float(wavelength_to_omega(self.center))
        fwhm_omega = 2.0 * np.pi * C * self.width / self.center**2
        sigma = fwhm_omega / _FWHM_PER_SIGMA
        return np.exp(-((omega - w0) ** 2) / (4.0 * sigma**2))

    def at(self, center: float) -> "FilterSpec":
        return FilterSpec(center, self.width, self.shape)


def default_jsa_grid(spec: SpdcSpec, n: int = 512, span_hz: float = 5e12) -> SampledGrid:
    """Frequency grid of ``n`` points spanning ``span_hz`` about degeneracy."""
    return gridkit.frequency_grid(n, 2.0 * np.pi * span_hz, spec.degenerate_omega)


def build_jsa(spec: SpdcSpec, grid_s: SampledGrid, grid_i: SampledGrid,
              check_coverage: bool = True) -> JointSpectralAmplitude:
    """Gaussian pump envelope times the linearised phase-matching function.

    ``S = exp(-(nu_s + nu_i - nu_p)^2 / (4 sigma_p^2)) sinc(x) exp(i x)`` with
    ``x = (gvm_ps nu_s + gvm_pi nu_i) L / 2 + phase_mismatch``; detunings are
    taken from the degenerate frequency.  Normalized to unit norm.
    """
    w_deg = spec.degenerate_omega
    nu_s = (grid_s.center - w_deg) + grid_s.relative
    nu_i = (grid_i.center - w_deg) + grid_i.relative
    pump_detuning = float(wavelength_to_omega(spec.pump_center)) - 2.0 * w_deg
    total = nu_s[:, None] + nu_i[None, :] - pump_detuning
    pump = np.exp(-(total**2) / (4.0 * spec.pump_bandwidth**2))
    x = 0.5 * spec.crystal_length * (spec.gvm_ps * nu_s[:, None] + spec.gvm_pi * nu_i[None, :])
    x = x + spec.phase_mismatch
    amp = pump * np.sinc(x / np.pi) * np.exp(1j * x)
    jsa = JointSpectralAmplitude(grid_s, grid_i, amp)
    if not jsa.norm > 0:
        raise GridError("joint spectrum vanishes on the requested grids")
    jsa = jsa.normalized()
    if check_coverage:
        edge = edge_fraction(jsa)
        if edge > 0.01:
            raise GridError(
                f"grid too narrow: {edge:.2%} of the norm sits on the boundary samples"
            )
    return jsa


def edge_fraction(jsa: JointSpectralAmplitude) -> float:
    weights = np.abs(jsa.amplitude) ** 2
    inner = weights[1:-1, 1:-1].sum()
    return float(1.0 - inner / weights.sum())


def _axis(arm: str) -> int:
    if arm == SIGNAL:
        return 0
    if arm == IDLER:
        return 1
    raise ValueError(f"arm must be 'signal' or 'idler', got {arm!r}")


def _grid(jsa: JointSpectralAmplitude, arm: str) -> SampledGrid:
    return jsa.grid_s if _axis(arm) == 0 else jsa.grid_i


def apply_signal_operator(jsa: JointSpectralAmplitude, operator: SignalOperator,
                          arm: str = SIGNAL) -> JointSpectralAmplitude:
    """Apply a single-photon operator to every column of one arm."""
    axis = _axis(arm)
    if not _grid(jsa, arm).compatible(operator.frequency_grid):
        raise GridError(f"operator grid does not match the {arm} grid")
    return jsa.replace(operator.apply_spectrum(jsa.amplitude, axis=axis))


def apply_filter(jsa: JointSpectralAmplitude, filt: FilterSpec, arm: str) -> JointSpectralAmplitude:
    """Multiply one arm by the filter amplitude; warns if nothing is transmitted."""
    axis = _axis(arm)
    t = filt.amplitude(_grid(jsa, arm).absolute)
    if not np.any(t > 0):
        warnings.warn(f"{arm} filter at {filt.center * 1e9:.3f} nm does not overlap the grid",
                      ZeroStateWarning, stacklevel=2)
    shape = (-1, 1) if axis == 0 else (1, -1)
    out = jsa.replace(jsa.amplitude * t.reshape(shape))
    if not np.any(out.amplitude):
        warnings.warn("filtering produced the zero state", ZeroStateWarning, stacklevel=2)
    return out


def jsi(jsa: JointSpectralAmplitude) -> np.ndarray:
    return np.abs(jsa.amplitude) ** 2


def marginal(jsa: JointSpectralAmplitude, arm: str) -> np.ndarray:
    """Single-photon spectral density of ``arm`` (integrates to the norm)."""
    if _axis(arm) == 0:
        return jsi(jsa).sum(axis=1) * jsa.grid_i.spacing
    return jsi(jsa).sum(axis=0) * jsa.grid_s.spacing


def marginal_centroid(jsa: JointSpectralAmplitude, arm: str) -> float:
    """Detuning (rad/s, relative to the grid centre) of the marginal's centroid."""
    return gridkit.relative_centroid(_grid(jsa, arm).relative, marginal(jsa, arm))


def marginal_fwhm(jsa: JointSpectralAmplitude, arm: str) -> float:
    return gridkit.width_at_half_maximum(_grid(jsa, arm).relative, marginal(jsa, arm))


@dataclass(frozen=True)
class HeraldedSpectrum:
    centers: np.ndarray
    counts: np.ndarray
    herald_total: float

    @property
    def total(self) -> float:
        return float(self.counts.sum())


def heralded_spectrum(jsa: JointSpectralAmplitude, herald: FilterSpec, scan: FilterSpec,
                      centers: Sequence[float]) -> HeraldedSpectrum:
    """Coincidence mass versus the centre of a scanned signal filter.

    The idler is fixed behind ``herald``; ``scan`` supplies width and shape.
    """
    t_i = herald.amplitude(jsa.grid_i.absolute) ** 2
    heralded = (jsi(jsa) * t_i[None, :]).sum(axis=1) * jsa.grid_i.spacing
    omega_s = jsa.grid_s.absolute
    counts = np.array([
        np.sum(heralded * scan.at(c).amplitude(omega_s) ** 2) * jsa.grid_s.spacing
        for c in centers
    ])
    return HeraldedSpectrum(np.asarray(centers, dtype=float), counts,
                            float(heralded.sum() * jsa.grid_s.spacing))


def spectral_overlap(a: np.ndarray, b: np.ndarray) -> float:
    """Squared Bhattacharyya coefficient of two intensity spectra."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("spectra must share a grid")
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("spectra must be non-negative")
    sa, sb = a.sum(), b.sum()
    if not (sa > 0 and sb > 0):
        raise ValueError("overlap of a zero spectrum is undefined")
    return float(np.sum(np.sqrt(a * b)) ** 2 / (sa * sb))


@dataclass(frozen=True)
class ExchangeParts:
    symmetric: JointSpectralAmplitude
    antisymmetric: JointSpectralAmplitude
    antisymmetric_fraction: float


def exchange_decompose(jsa: JointSpectralAmplitude) -> ExchangeParts:
    """Split ``S`` into parts even and odd under ``w_s <-> w_i``."""
    if not jsa.same_grids():
        raise GridError("exchange symmetry needs identical signal and idler grids")
    s = jsa.amplitude
    sym = jsa.replace(0.5 * (s + s.T))
    anti = jsa.replace(0.5 * (s - s.T))
    total = jsa.norm
    if not total > 0:
        raise ValueError("exchange decomposition of the zero state")
    return ExchangeParts(sym, anti, anti.norm / total)


def delay_arm(jsa: JointSpectralAmplitude, arm: str, delay: float) -> JointSpectralAmplitude:
    """Delay one photon by ``delay`` seconds (a linear spectral phase)."""
    axis = _axis(arm)
    phase = np.exp(1j * _grid(jsa, arm).relative * delay)
    shape = (-1, 1) if axis == 0 else (1, -1)
    return jsa.replace(jsa.amplitude * phase.reshape(shape))


def arrival_time(jsa: JointSpectralAmplitude, arm: str) -> float:
    """Mean arrival time of one photon relative to its frame origin (s)."""
    axis = _axis(arm)
    grid = _grid(jsa, arm)
    tgrid = grid.conjugate()
    field = gridkit.field_of(np.moveaxis(jsa.amplitude, axis, -1), tgrid.spacing)
    density = np.sum(np.abs(field) ** 2, axis=0)
    return gridkit.relative_centroid(tgrid.relative, density)


def center_arrival_times(jsa: JointSpectralAmplitude) -> JointSpectralAmplitude:
    """Remove the mean birth delay of both photons so each arrives at t = 0."""
    out = delay_arm(jsa, SIGNAL, -arrival_time(jsa, SIGNAL))
    return delay_arm(out, IDLER, -arrival_time(out, IDLER))


def _fmt(x: float) -> str:
    return f"{x:.10e}"


def write_matrix_csv(path, row_axis, col_axis, values, corner: str) -> None:
    """Matrix CSV with one header row of column coordinates and a leading row-coordinate column."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([corner] + [_fmt(v) for v in col_axis])
        for r, row in zip(row_axis, values):
            writer.writerow([_fmt(r)] + [_fmt(v) for v in row])


def export_jsi_csv(path, jsa: JointSpectralAmplitude) -> None:
    """JSI matrix; rows are signal wavelengths (nm), columns idler wavelengths (nm)."""
    lam_s = omega_to_wavelength(jsa.grid_s.absolute) * 1e9
    lam_i = omega_to_wavelength(jsa.grid_i.absolute) * 1e9
    write_matrix_csv(path, lam_s, lam_i, jsi(jsa), "signal_nm/idler_nm")


def export_jsa_csv(real_path, imag_path, jsa: JointSpectralAmplitude) -> None:
    lam_s = omega_to_wavelength(jsa.grid_s.absolute) * 1e9
    lam_i = omega_to_wavelength(jsa.grid_i.absolute) * 1e9
    write_matrix_csv(real_path, lam_s, lam_i, jsa.amplitude.real, "signal_nm/idler_nm")
    write_matrix_csv(imag_path, lam_s, lam_i, jsa.amplitude.imag, "signal_nm/idler_nm")


def read_matrix_csv(path):
    """Inverse of the matrix writers: ``(row_axis, col_axis, values)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    cols = np.array([float(v) for v in rows[0][1:]])
    body = np.array([[float(v) for v in r] for r in rows[1:]])
    return body[:, 0], cols, body[:, 1:]
