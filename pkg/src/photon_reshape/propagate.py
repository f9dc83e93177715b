"""Control-pulse propagation and the XPM reshaping operator for the signal.

Conventions used throughout:

* envelopes are ``A(t) exp(-i w0 t)``; dispersion acts in the frequency domain
  as ``exp(i beta2 nu^2 dz / 2)``;
* Kerr phase accumulates as ``+i * xpm_factor * gamma * |A_c|^2 * dz``;
* the instantaneous frequency is ``-d(phi)/dt``;
* the signal operator works in the signal's own frame, where the control
  peak sits at ``t = -delay - walkoff * z``.  A positive delay therefore puts
  the signal on the trailing edge of the control, where the phase slope is
  negative and the signal is blue-shifted.
"""

from __future__ import annotations

__version__ = "0.1.0"

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import gridkit
from .errors import CalibrationSaturationError, GridError, RefinementError
from .fiber import FiberSpec, beta2_at, omega_to_wavelength, wavelength_to_omega
from .gridkit import ComplexEnvelope, SampledGrid

log = logging.getLogger(__name__)

GAUSSIAN = "gaussian"
SECH = "sech"
LUMPED = "lumped"
SPLIT_STEP = "split_step"

SECH_FWHM_FACTOR = 2.0 * math.acosh(math.sqrt(2.0))  # ~1.7627


@dataclass(frozen=True)
class PulseSpec:
    """Transform-limited control pulse.

    ``fwhm`` is the intensity FWHM (s); ``delay`` is the signal delay
    relative to the control peak (positive: signal on the trailing edge).
    """

    shape: str = GAUSSIAN
    fwhm: float = 0.78e-12
    peak_power: float = 0.0
    wavelength: float = 756e-9
    delay: float = 0.0

    def __post_init__(self):
        if self.shape not in (GAUSSIAN, SECH):
            raise ValueError(f"unknown pulse shape {self.shape!r}")
        if not self.fwhm > 0:
            raise ValueError("pulse fwhm must be positive")
        if self.peak_power < 0:
            raise ValueError("peak power must be non-negative")
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")

    def intensity(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.shape == GAUSSIAN:
            return self.peak_power * np.exp(-4.0 * math.log(2.0) * (t / self.fwhm) ** 2)
        t0 = self.fwhm / SECH_FWHM_FACTOR
        return self.peak_power / np.cosh(np.clip(t / t0, -700, 700)) ** 2

    def energy(self) -> float:
        """Closed-form pulse energy (J)."""
        if self.shape == GAUSSIAN:
            return self.peak_power * self.fwhm * math.sqrt(math.pi / (4.0 * math.log(2.0)))
        return 2.0 * self.peak_power * self.fwhm / SECH_FWHM_FACTOR


@dataclass(frozen=True)
class PhaseProfile:
    grid: SampledGrid
    phase: np.ndarray = field(repr=False)

    def __post_init__(self):
        phase = np.array(self.phase, dtype=float)
        if phase.shape != (self.grid.n,):
            raise GridError("phase length must match the grid")
        if not np.all(np.isfinite(phase)):
            raise ValueError("phase must be finite")
        phase.setflags(write=False)
        object.__setattr__(self, "phase", phase)


@dataclass(frozen=True)
class PropagationConfig:
    z_steps: int = 64
    scheme: str = SPLIT_STEP
    include_control_dispersion: bool = True
    include_spm: bool = True

    def __post_init__(self):
        if self.scheme not in (LUMPED, SPLIT_STEP):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if int(self.z_steps) < 1:
            raise ValueError("z_steps must be at least 1")
        if self.scheme == SPLIT_STEP and self.z_steps < 8:
            raise ValueError("split_step needs z_steps >= 8")


def default_control_grid(n: int = 4096, window: float = 40e-12) -> SampledGrid:
    return gridkit.time_grid(n, window)


def synthesize_pulse(spec: PulseSpec, grid: SampledGrid) -> ComplexEnvelope:
    """Control envelope centred at t = 0 with ``|A|^2 = P(t)``."""
    if grid.domain != gridkit.TIME:
        raise GridError("pulses are synthesized on time grids")
    if grid.span < 10.0 * spec.fwhm:
        raise GridError(
            f"time window {grid.span * 1e12:.3g} ps is shorter than 10 x fwhm "
            f"({spec.fwhm * 1e12:.3g} ps)"
        )
    amplitude = np.sqrt(spec.intensity(grid.relative))
    return ComplexEnvelope(grid, amplitude, float(wavelength_to_omega(spec.wavelength)))


def _angular_frequencies(n: int, dt: float) -> np.ndarray:
    # FFT ordering; only nu**2 is used so the transform sign is immaterial
    return 2.0 * np.pi * np.fft.fftfreq(n, dt)


def _disperse(x: np.ndarray, factor: np.ndarray) -> np.ndarray:
    return np.fft.ifft(np.fft.fft(x, axis=-1) * factor, axis=-1)


def evolve_control(pulse: ComplexEnvelope, fiber: FiberSpec, cfg: PropagationConfig) -> list:
    """Control envelope at the midpoint of each of ``cfg.z_steps`` slices.

    Entry ``k`` is the field at ``z = (k + 1/2) L / z_steps`` in the control's
    co-moving frame.  The lumped scheme freezes the control.
    """
    if pulse.grid.domain != gridkit.TIME:
        raise GridError("the control must be a time-domain envelope")
    n_steps = int(cfg.z_steps)
    if cfg.scheme == LUMPED:
        return [pulse] * n_steps

    dz = fiber.length / n_steps
    gamma = fiber.gamma_control if cfg.include_spm else 0.0
    peak = float(np.max(np.abs(pulse.samples) ** 2))
    if gamma > 0 and peak > 0:
        l_nl = 1.0 / (gamma * peak)
        if dz > l_nl / 4.0:
            needed = int(math.ceil(4.0 * fiber.length / l_nl))
            raise RefinementError(
                f"step {dz:.3g} m exceeds L_NL/4 = {l_nl / 4:.3g} m; use z_steps >= {needed}"
            )
    beta2 = 0.0
    if cfg.include_control_dispersion:
        beta2 = beta2_at(fiber.delay_curve, float(omega_to_wavelength(pulse.conjugate_center)))

    nu = _angular_frequencies(pulse.grid.n, pulse.grid.spacing)
    quarter = np.exp(0.5j * beta2 * nu**2 * dz / 4.0)
    half = quarter**2

    def nonlinear(a, length):
        if gamma == 0.0:
            return a
        return a * np.exp(1j * gamma * np.abs(a) ** 2 * length)

    # first half slice reaches the first midpoint, then full Strang steps
    a = np.array(pulse.samples)
    a = _disperse(nonlinear(_disperse(a, quarter), dz / 2.0), quarter)
    history = [ComplexEnvelope(pulse.grid, a, pulse.conjugate_center)]
    for _ in range(n_steps - 1):
        a = _disperse(nonlinear(_disperse(a, half), dz), half)
        history.append(ComplexEnvelope(pulse.grid, a, pulse.conjugate_center))
    return history


def _check_history(history: Sequence[ComplexEnvelope]) -> SampledGrid:
    if not history:
        raise ValueError("control history is empty")
    grid = history[0].grid
    if grid.domain != gridkit.TIME:
        raise GridError("control history must be time-domain")
    for env in history[1:]:
        if env.grid != grid:
            raise GridError("control history entries use different grids")
    return grid


def _shifted_intensities(history, t, delay, walkoff, dz) -> np.ndarray:
    """``|A_c(z_k, t + delay + walkoff z_k)|^2`` for every slice, shape (steps, len(t))."""
    grid = _check_history(history)
    tc = grid.relative
    out = np.empty((len(history), len(t)))
    cache = {}
    for k, env in enumerate(history):
        z = (k + 0.5) * dz
        key = id(env)
        if key not in cache:
            cache[key] = np.abs(env.samples) ** 2
        out[k] = np.interp(t + delay + walkoff * z, tc, cache[key], left=0.0, right=0.0)
    return out


def xpm_phase(control_history: Sequence[ComplexEnvelope], fiber: FiberSpec, delay: float,
              walkoff: float = 0.0, grid: SampledGrid | None = None) -> PhaseProfile:
    """Total XPM phase imprinted on the signal, ``phi(t)``.

    ``phi(t) = xpm_factor gamma_s sum_k |A_c(z_k, t + delay + walkoff z_k)|^2 dz``
    sampled on ``grid`` (the control grid by default).
    """
    control_grid = _check_history(control_history)
    grid = grid or control_grid
    if grid.domain != gridkit.TIME:
        raise GridError("xpm_phase needs a time grid")
    dz = fiber.length / len(control_history)
    intens = _shifted_intensities(control_history, grid.relative, delay, walkoff, dz)
    phase = fiber.xpm_factor * fiber.gamma_signal * dz * intens.sum(axis=0)
    return PhaseProfile(grid, phase)


def instantaneous_frequency(phi: PhaseProfile) -> np.ndarray:
    """``-d(phi)/dt`` by central differences (rad/s)."""
    return -np.gradient(phi.phase, phi.grid.spacing)


class SignalOperator:
    """Linear map applied to single-photon signal envelopes.

    Built by :func:`signal_operator`.  ``apply_time`` acts on time-domain
    samples along the last axis, ``apply_spectrum`` on spectral samples.
    Batches (e.g. all idler columns of a joint spectrum) are supported.
    """

    def __init__(self, time_grid: SampledGrid, carrier: float, phases: np.ndarray,
                 beta2: float, dz: float, transmission: float = 1.0):
        self.time_grid = time_grid
        self.carrier = float(carrier)
        self.phases = np.asarray(phases, dtype=float)
        self.beta2 = float(beta2)
        self.dz = float(dz)
        self.transmission = float(transmission)
        self.phases.setflags(write=False)
        nu = _angular_frequencies(time_grid.n, time_grid.spacing)
        self._half = np.exp(0.5j * self.beta2 * nu**2 * self.dz / 2.0)
        self._full = self._half**2
        self._kerr = np.exp(1j * self.phases)

    @property
    def frequency_grid(self) -> SampledGrid:
        return self.time_grid.conjugate(self.carrier)

    @property
    def is_dispersive(self) -> bool:
        return self.beta2 != 0.0

    def apply_time(self, samples: np.ndarray) -> np.ndarray:
        x = np.array(samples, dtype=complex)
        if x.shape[-1] != self.time_grid.n:
            raise GridError(
                f"operator built for {self.time_grid.n} samples, got {x.shape[-1]}"
            )
        if not self.is_dispersive:
            x = x * np.prod(self._kerr, axis=0)
        else:
            x = _disperse(x, self._half)
            last = len(self._kerr) - 1
            for k, kerr in enumerate(self._kerr):
                x = x * kerr
                x = _disperse(x, self._half if k == last else self._full)
        if self.transmission != 1.0:
            x *= math.sqrt(self.transmission)
        return x

    def apply_spectrum(self, spectrum: np.ndarray, axis: int = -1) -> np.ndarray:
        dt = self.time_grid.spacing
        moved = np.moveaxis(np.asarray(spectrum, dtype=complex), axis, -1)
        out = gridkit.spectrum_of(self.apply_time(gridkit.field_of(moved, dt)), dt)
        return np.moveaxis(out, -1, axis)

    def __call__(self, env: ComplexEnvelope) -> ComplexEnvelope:
        if env.grid.domain == gridkit.TIME:
            if not env.grid.compatible(self.time_grid):
                raise GridError("envelope grid does not match the operator grid")
            return ComplexEnvelope(env.grid, self.apply_time(env.samples), env.conjugate_center)
        if not env.grid.compatible(self.frequency_grid):
            raise GridError("spectrum grid does not match the operator grid")
        return ComplexEnvelope(env.grid, self.apply_spectrum(env.samples), env.conjugate_center)

    def matrix(self) -> np.ndarray:
        """Dense time-domain matrix; column ``j`` is the image of sample ``j``."""
        return self.apply_time(np.eye(self.time_grid.n)).T


def signal_operator(control_history: Sequence[ComplexEnvelope], fiber: FiberSpec,
                    grid_s: SampledGrid, delay: float, walkoff: float = 0.0,
                    scheme: str = SPLIT_STEP, signal_wavelength: float | None = None,
                    include_dispersion: bool = True) -> SignalOperator:
    """Reshaping operator for a signal photon delayed by ``delay`` behind the control.

    ``grid_s`` is the signal frequency grid (its centre fixes the signal
    wavelength) or a time grid together with ``signal_wavelength``.
    The split-step form interleaves half-step signal dispersion with the XPM
    phase of each control slice; the lumped form applies half of the total
    dispersion on either side of one phase screen.
    """
    _check_history(control_history)
    if scheme not in (LUMPED, SPLIT_STEP):
        raise ValueError(f"unknown scheme {scheme!r}")
    if grid_s.domain == gridkit.FREQUENCY:
        carrier = grid_s.center
        tgrid = grid_s.conjugate(0.0)
    else:
        if signal_wavelength is None:
            raise GridError("a time grid needs an explicit signal_wavelength")
        carrier = float(wavelength_to_omega(signal_wavelength))
        tgrid = grid_s
    if signal_wavelength is None:
        signal_wavelength = float(omega_to_wavelength(carrier))

    beta2 = beta2_at(fiber.delay_curve, signal_wavelength) if include_dispersion else 0.0
    n_steps = len(control_history)
    dz = fiber.length / n_steps
    intens = _shifted_intensities(control_history, tgrid.relative, delay, walkoff, dz)
    phases = fiber.xpm_factor * fiber.gamma_signal * dz * intens
    if scheme == LUMPED:
        phases = phases.sum(axis=0, keepdims=True)
        dz = fiber.length
    return SignalOperator(tgrid, carrier, phases, beta2, dz, fiber.transmission)


def spectral_centroid_shift(operator: SignalOperator, spectra: np.ndarray) -> float:
    """Centroid shift (Hz) of ``sum_columns |spectrum|^2`` caused by ``operator``.

    ``spectra`` holds signal spectral amplitudes along axis 0 (one column per
    idler frequency, or a single vector).
    """
    spectra = np.asarray(spectra, dtype=complex)
    if spectra.ndim == 1:
        spectra = spectra[:, None]
    nu = operator.frequency_grid.relative
    before = np.sum(np.abs(spectra) ** 2, axis=1)
    after_amp = operator.apply_spectrum(spectra, axis=0)
    after = np.sum(np.abs(after_amp) ** 2, axis=1)
    shift = gridkit.relative_centroid(nu, after) - gridkit.relative_centroid(nu, before)
    return shift / (2.0 * np.pi)


@dataclass
class CalibrationTemplate:
    """Everything except the peak power that defines a shift measurement.

    ``spectra`` are signal spectral amplitudes on ``signal_grid`` (axis 0),
    typically the columns of a joint spectral amplitude.
    """

    fiber: FiberSpec
    control: PulseSpec
    signal_grid: SampledGrid
    spectra: np.ndarray
    config: PropagationConfig = field(default_factory=PropagationConfig)
    control_grid: SampledGrid = field(default_factory=default_control_grid)
    walkoff: float = 0.0
    delay_range: tuple | None = None
    delay_points: int = 33
    max_power: float | None = None
    column_cutoff: float = 1e-14

    def active_spectra(self) -> np.ndarray:
        """Columns carrying non-negligible weight (calibration only)."""
        spectra = np.asarray(self.spectra, dtype=complex)
        if spectra.ndim == 1:
            return spectra[:, None]
        weight = np.sum(np.abs(spectra) ** 2, axis=0)
        keep = weight > self.column_cutoff * weight.sum()
        return spectra[:, keep]

    def power_limit(self) -> float:
        if self.max_power is not None:
            return float(self.max_power)
        if self.config.scheme == SPLIT_STEP and self.config.include_spm and self.fiber.gamma_control > 0:
            dz = self.fiber.length / self.config.z_steps
            return 1.0 / (4.0 * self.fiber.gamma_control * dz)
        return 1e5


@dataclass(frozen=True)
class CalibrationResult:
    peak_power: float  # W
    delay: float  # s, delay giving the largest blue shift
    shift: float  # Hz, achieved centroid shift
    evaluations: int


class _ShiftModel:
    def __init__(self, template: CalibrationTemplate):
        self.t = template
        self.spectra = template.active_spectra()
        self.evaluations = 0
        self._history_cache = {}

    def history(self, power):
        if power not in self._history_cache:
            spec = PulseSpec(self.t.control.shape, self.t.control.fwhm, power, self.t.control.wavelength)
            pulse = synthesize_pulse(spec, self.t.control_grid)
            self._history_cache = {power: evolve_control(pulse, self.t.fiber, self.t.config)}
        return self._history_cache[power]

    def shift(self, power, delay):
        self.evaluations += 1
        op = signal_operator(self.history(power), self.t.fiber, self.t.signal_grid, delay,
                             self.t.walkoff, self.t.config.scheme)
        return spectral_centroid_shift(op, self.spectra)

    def best_delay(self, power, around=None):
        fwhm = self.t.control.fwhm
        lo, hi = self.t.delay_range or (-3.0 * fwhm, 3.0 * fwhm)
        if around is None:
            delays = np.linspace(lo, hi, self.t.delay_points)
            shifts = [self.shift(power, d) for d in delays]
            k = int(np.argmax(shifts))
            step = delays[1] - delays[0]
            center = delays[k]
        else:
            center, step = around
        res = minimize_scalar(lambda d: -self.shift(power, d),
                              bounds=(center - step, center + step), method="bounded",
                              options={"xatol": fwhm * 5e-3})
        best_d, best_s = float(res.x), float(-res.fun)
        if around is None and shifts[k] > best_s:
            best_d, best_s = float(delays[k]), float(shifts[k])
        return best_d, best_s, step


def calibrate_peak_power(target_shift: float, template: CalibrationTemplate,
                         rtol: float = 1e-3) -> CalibrationResult:
    """Peak power whose maximal blue centroid shift (over delay) hits ``target_shift`` Hz."""
    if target_shift < 0:
        raise ValueError("target_shift is a blue shift and must be non-negative")
    if target_shift == 0:
        return CalibrationResult(0.0, 0.0, 0.0, 0)
    model = _ShiftModel(template)
    limit = template.power_limit()

    # small-phase estimate: shift ~ phi_max / fwhm
    fib = template.fiber
    guess = 2.0 * np.pi * target_shift * template.control.fwhm / (
        fib.xpm_factor * max(fib.gamma_signal, 1e-30) * fib.length * 2.0 * np.pi)
    guess = min(max(guess, 1e-6), limit)

    state = {"around": None}
    memo = {}

    def max_shift(power):
        if power not in memo:
            delay, shift, step = model.best_delay(power, state["around"])
            state["around"] = (delay, step)
            log.debug("calibration: P=%.6g W delay=%.4g ps shift=%.6g THz",
                      power, delay * 1e12, shift * 1e-12)
            memo[power] = (delay, shift)
        return memo[power]

    lo_p, hi_p = 0.0, guess
    _, s_hi = max_shift(hi_p)
    best = (hi_p, s_hi)
    while s_hi < target_shift:
        if hi_p >= limit:
            raise CalibrationSaturationError(
                f"target shift {target_shift * 1e-12:.4g} THz unreachable: best "
                f"{best[1] * 1e-12:.4g} THz at {best[0]:.4g} W (power limit {limit:.4g} W)",
                best_shift=best[1], best_power=best[0])
        lo_p = hi_p
        # the shift grows roughly linearly with power; overshoot a little
        grow = 1.1 * target_shift / s_hi if s_hi > 0 else 2.0
        hi_p = min(hi_p * min(max(grow, 1.1), 4.0), limit)
        _, s_hi = max_shift(hi_p)
        if s_hi > best[1]:
            best = (hi_p, s_hi)

    power = brentq(lambda p: max_shift(p)[1] - target_shift, lo_p, hi_p,
                   rtol=rtol * 0.1, xtol=1e-9)
    # final full scan so the reported delay is the global maximiser
    state["around"] = None
    memo.pop(power, None)
    delay, shift = max_shift(power)
    return CalibrationResult(float(power), delay, shift, model.evaluations)
