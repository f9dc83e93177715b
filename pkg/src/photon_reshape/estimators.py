"""Estimator-style wrappers around the functional core.

``GroupDelayRegressor`` fits a group-delay polynomial and predicts delays.
``XPMReshaper`` learns a reshaping operator from a reference joint spectral
amplitude (optionally calibrating the control power) and applies it.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, column_or_1d

from . import biphoton, fiber, propagate
from .biphoton import JointSpectralAmplitude
from .errors import GridError
from .gridkit import ComplexEnvelope


def check_jsa(X) -> JointSpectralAmplitude:
    """Validate that ``X`` is a joint spectral amplitude on a square grid pair."""
    if not isinstance(X, JointSpectralAmplitude):
        raise TypeError(f"expected a JointSpectralAmplitude, got {type(X).__name__}")
    if not np.all(np.isfinite(X.amplitude)):
        raise ValueError("JSA contains non-finite values")
    return X


def check_wavelengths(X) -> np.ndarray:
    """Accept an ``(n,)`` or ``(n, 1)`` array of wavelengths in metres."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = check_array(X, ensure_min_features=1)
        if X.shape[1] != 1:
            raise ValueError(f"expected one feature (wavelength), got {X.shape[1]}")
        X = X[:, 0]
    return column_or_1d(X)


class GroupDelayRegressor(RegressorMixin, BaseEstimator):
    """Polynomial group delay ``tau(lambda)`` (s/m) versus wavelength (m).

    Parameters
    ----------
    degree : int
        Polynomial degree, 1 to 6.
    """

    def __init__(self, degree: int = 6):
        self.degree = degree

    def fit(self, X, y):
        lam = check_wavelengths(X)
        tau = column_or_1d(np.asarray(y, dtype=float))
        if lam.shape != tau.shape:
            raise ValueError("X and y have different lengths")
        samples = [fiber.GroupDelaySample(a, b) for a, b in zip(lam, tau)]
        self.curve_ = fiber.fit_group_delay(samples, self.degree)
        self.residual_rms_ = self.curve_.residual_rms
        self.n_features_in_ = 1
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "curve_")
        return np.asarray(self.curve_.delay(check_wavelengths(X)))

    def beta2(self, wavelength: float) -> float:
        check_is_fitted(self, "curve_")
        return fiber.beta2_at(self.curve_, wavelength)

    def matched_wavelength(self, reference: float, search) -> float:
        check_is_fitted(self, "curve_")
        return fiber.find_matched_wavelength(self.curve_, reference, search)


class XPMReshaper(TransformerMixin, BaseEstimator):
    """Cross-phase-modulation reshaping of one photon of a pair.

    Parameters
    ----------
    fiber : FiberSpec or None
        ``None`` uses the bundled default fiber.
    control : PulseSpec or None
        Control pulse; its ``peak_power`` is ignored when ``peak_power`` is set.
    delay : float or "optimal"
        Signal delay behind the control (s).  ``"optimal"`` takes the delay
        found by calibration.
    peak_power : float or "calibrate"
        Control peak power (W), or calibrate it to ``target_shift``.
    target_shift : float
        Blue centroid shift (Hz) used by calibration.
    arm : {"signal", "idler"}
        Photon that co-propagates with the control.
    scheme, z_steps :
        Solver settings, see ``PropagationConfig``.
    walkoff : float
        Residual group-delay mismatch (s/m).
    control_grid : SampledGrid or None
        Time grid for the control pulse.
    """

    def __init__(self, fiber=None, control=None, delay=0.0, peak_power=0.0,
                 target_shift=0.4e12, arm="signal", scheme="split_step", z_steps=64,
                 walkoff=0.0, control_grid=None):
        self.fiber = fiber
        self.control = control
        self.delay = delay
        self.peak_power = peak_power
        self.target_shift = target_shift
        self.arm = arm
        self.scheme = scheme
        self.z_steps = z_steps
        self.walkoff = walkoff
        self.control_grid = control_grid

    def _arm_grid(self, jsa):
        return jsa.grid_s if self.arm == biphoton.SIGNAL else jsa.grid_i

    def fit(self, X, y=None):
        """Build the operator for the grid of the reference JSA ``X``."""
        jsa = check_jsa(X)
        if self.arm not in (biphoton.SIGNAL, biphoton.IDLER):
            raise ValueError(f"arm must be 'signal' or 'idler', got {self.arm!r}")
        fib = self.fiber if self.fiber is not None else fiber.default_fiber()
        control = self.control if self.control is not None else propagate.PulseSpec()
        cgrid = self.control_grid if self.control_grid is not None else propagate.default_control_grid()
        cfg = propagate.PropagationConfig(z_steps=self.z_steps, scheme=self.scheme)
        grid = self._arm_grid(jsa)

        self.calibration_ = None
        if isinstance(self.peak_power, str):
            if self.peak_power != "calibrate":
                raise ValueError(f"peak_power must be a number or 'calibrate', got {self.peak_power!r}")
            spectra = jsa.amplitude if self.arm == biphoton.SIGNAL else jsa.amplitude.T
            template = propagate.CalibrationTemplate(fib, control, grid, spectra, cfg, cgrid, self.walkoff)
            self.calibration_ = propagate.calibrate_peak_power(self.target_shift, template)
            power = self.calibration_.peak_power
        else:
            power = float(self.peak_power)
            if power < 0:
                raise ValueError("peak_power must be non-negative")

        if isinstance(self.delay, str):
            if self.delay != "optimal" or self.calibration_ is None:
                raise ValueError("delay='optimal' requires peak_power='calibrate'")
            delay = self.calibration_.delay
        else:
            delay = float(self.delay)

        pulse = propagate.synthesize_pulse(
            propagate.PulseSpec(control.shape, control.fwhm, power, control.wavelength), cgrid)
        history = propagate.evolve_control(pulse, fib, cfg)
        self.peak_power_ = power
        self.delay_ = delay
        self.operator_ = propagate.signal_operator(history, fib, grid, delay, self.walkoff, self.scheme)
        self.grid_ = grid
        return self

    def transform(self, X):
        """Apply the fitted operator to a JSA or a single-photon spectrum."""
        check_is_fitted(self, "operator_")
        if isinstance(X, ComplexEnvelope):
            if not X.grid.compatible(self.grid_):
                raise GridError("spectrum grid differs from the fitted grid")
            return self.operator_(X)
        jsa = check_jsa(X)
        if not self._arm_grid(jsa).compatible(self.grid_):
            raise GridError("JSA grid differs from the fitted grid")
        return biphoton.apply_signal_operator(jsa, self.operator_, self.arm)
