"""Fiber dispersion: group-delay fits, GVD, and group-velocity matching.

Group delay is handled per unit length (s/m) as a polynomial in wavelength.
Frequency derivatives follow from the chain rule with
``dw = -(2 pi c / lambda^2) dlambda``.
"""

from __future__ import annotations

__version__ = "0.1.0"

import csv
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import NoMatchedWavelengthError, OutOfRangeError

C = 299_792_458.0
MAX_DEGREE = 6

PS = 1e-12
NM = 1e-9
MATCH_TOLERANCE = 1e-4 * PS  # 1e-4 ps/m


def wavelength_to_omega(wavelength):
    return 2.0 * np.pi * C / np.asarray(wavelength, dtype=float)


def omega_to_wavelength(omega):
    return 2.0 * np.pi * C / np.asarray(omega, dtype=float)


@dataclass(frozen=True)
class GroupDelaySample:
    wavelength: float  # m
    delay: float  # s/m

    def __post_init__(self):
        if not (self.wavelength > 0 and math.isfinite(self.wavelength)):
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        if not math.isfinite(self.delay):
            raise ValueError("group delay must be finite")


@dataclass(frozen=True)
class GroupDelayCurve:
    """``delay(lambda) = sum_k a_k ((lambda - reference) / scale)**k``.

    The scaled abscissa keeps degree-6 fits well conditioned;
    :attr:`coefficients` gives the unscaled ``c_k`` in s/m/m^k.
    """

    scaled_coefficients: tuple
    reference: float
    valid_range: tuple
    scale: float = 1.0
    residual_rms: float = 0.0

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.scaled_coefficients)
        if not coeffs:
            raise ValueError("a group-delay curve needs at least one coefficient")
        if len(coeffs) - 1 > MAX_DEGREE:
            raise ValueError(f"degree {len(coeffs) - 1} exceeds {MAX_DEGREE}")
        lo, hi = (float(v) for v in self.valid_range)
        if not lo < hi:
            raise ValueError(f"empty valid range [{lo}, {hi}]")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        object.__setattr__(self, "scaled_coefficients", coeffs)
        object.__setattr__(self, "valid_range", (lo, hi))

    @classmethod
    def from_coefficients(cls, coefficients: Sequence[float], reference: float,
                          valid_range, residual_rms: float = 0.0) -> "GroupDelayCurve":
        lo, hi = valid_range
        scale = 0.5 * (hi - lo)
        scaled = [c * scale**k for k, c in enumerate(coefficients)]
        return cls(tuple(scaled), reference, (lo, hi), scale, residual_rms)

    @property
    def degree(self) -> int:
        return len(self.scaled_coefficients) - 1

    @property
    def coefficients(self) -> tuple:
        return tuple(c / self.scale**k for k, c in enumerate(self.scaled_coefficients))

    def check_range(self, wavelength) -> np.ndarray:
        lam = np.asarray(wavelength, dtype=float)
        lo, hi = self.valid_range
        # tolerate round-off at the edges
        slack = 1e-12 * (hi - lo)
        if np.any(lam < lo - slack) or np.any(lam > hi + slack) or np.any(~np.isfinite(lam)):
            raise OutOfRangeError(
                f"wavelength outside valid range [{lo * 1e9:.3f}, {hi * 1e9:.3f}] nm"
            )
        return lam

    def delay(self, wavelength):
        lam = self.check_range(wavelength)
        value = P.polyval((lam - self.reference) / self.scale, self.scaled_coefficients)
        return float(value) if np.ndim(value) == 0 else value

    def derivative(self, wavelength, order: int = 1):
        """``d^order delay / d lambda^order`` in s/m per m^order."""
        lam = self.check_range(wavelength)
        der = P.polyder(self.scaled_coefficients, order) / self.scale**order
        value = P.polyval((lam - self.reference) / self.scale, der)
        return float(value) if np.ndim(value) == 0 else value

    def group_velocity(self, wavelength):
        return 1.0 / np.asarray(self.delay(wavelength))


@dataclass(frozen=True)
class FiberSpec:
    """Kerr fiber used for XPM.

    ``gamma_control`` and ``gamma_signal`` are the nonlinear coefficients
    (1/(W m)) at the control and signal wavelengths.  ``xpm_factor`` is 2 for
    co-polarized fields and 2/3 for orthogonal ones.
    """

    length: float
    gamma_control: float
    gamma_signal: float
    delay_curve: GroupDelayCurve = field(repr=False)
    xpm_factor: float = 2.0
    transmission: float = 1.0

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("fiber length must be positive")
        if self.gamma_control < 0 or self.gamma_signal < 0:
            raise ValueError("nonlinear coefficients must be non-negative")
        if not self.xpm_factor > 0:
            raise ValueError("xpm_factor must be positive")
        if not 0 < self.transmission <= 1:
            raise ValueError("transmission must lie in (0, 1]")


def fit_group_delay(samples: Iterable[GroupDelaySample], degree: int) -> GroupDelayCurve:
    """Least-squares polynomial fit of group delay versus wavelength."""
    samples = list(samples)
    degree = int(degree)
    if degree < 0 or degree > MAX_DEGREE:
        raise ValueError(f"degree must be between 0 and {MAX_DEGREE}, got {degree}")
    if len(samples) < degree + 1:
        raise ValueError(f"degree {degree} needs at least {degree + 1} samples, got {len(samples)}")
    lam = np.array([s.wavelength for s in samples])
    tau = np.array([s.delay for s in samples])
    if len(np.unique(lam)) != len(lam):
        raise ValueError("duplicate wavelengths make the fit rank deficient")

    lo, hi = float(lam.min()), float(lam.max())
    reference = 0.5 * (lo + hi)
    scale = 0.5 * (hi - lo) if hi > lo else 1.0
    x = (lam - reference) / scale
    vander = np.vander(x, degree + 1, increasing=True)
    coeffs, _, rank, _ = np.linalg.lstsq(vander, tau, rcond=None)
    if rank < degree + 1:
        raise ValueError("group-delay fit is rank deficient")
    residual = tau - vander @ coeffs
    rms = float(np.sqrt(np.mean(residual**2)))
    if hi == lo:
        hi = lo + scale * 1e-12
    return GroupDelayCurve(tuple(coeffs), reference, (lo, hi), scale, rms)


def beta2_at(curve: GroupDelayCurve, wavelength: float) -> float:
    """GVD ``d(delay)/dw`` in s^2/m."""
    dtau = curve.derivative(wavelength, 1)
    return float(dtau * (-(wavelength**2) / (2.0 * np.pi * C)))


def beta3_at(curve: GroupDelayCurve, wavelength: float) -> float:
    """Third-order dispersion ``d^2(delay)/dw^2`` in s^3/m."""
    d1 = curve.derivative(wavelength, 1)
    d2 = curve.derivative(wavelength, 2)
    k = wavelength**2 / (2.0 * np.pi * C)
    return float(k * (d2 * wavelength**2 + 2.0 * wavelength * d1) / (2.0 * np.pi * C))


def walkoff_per_meter(curve: GroupDelayCurve, wavelength_a: float, wavelength_b: float) -> float:
    """Group-delay difference ``delay(a) - delay(b)`` in s/m."""
    return curve.delay(wavelength_a) - curve.delay(wavelength_b)


def find_matched_wavelength(curve: GroupDelayCurve, reference: float, search,
                            tolerance: float = MATCH_TOLERANCE) -> float:
    """Wavelength in ``search`` whose group delay equals that at ``reference``.

    Bisection on the sign change of ``delay(lambda) - delay(reference)``.
    """
    lo, hi = sorted(float(v) for v in search)
    curve.check_range([lo, hi, reference])
    if lo <= reference <= hi:
        raise ValueError("search window must exclude the reference wavelength")
    target = curve.delay(reference)
    f_lo = curve.delay(lo) - target
    f_hi = curve.delay(hi) - target
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise NoMatchedWavelengthError(
            f"no matched wavelength for {reference * 1e9:.2f} nm in "
            f"[{lo * 1e9:.2f}, {hi * 1e9:.2f}] nm"
        )
    while hi - lo > 4e-16 * hi:
        mid = 0.5 * (lo + hi)
        f_mid = curve.delay(mid) - target
        if f_mid == 0.0:
            return mid
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    best = 0.5 * (lo + hi)
    if abs(curve.delay(best) - target) >= tolerance:
        raise NoMatchedWavelengthError("bisection did not reach the matching tolerance")
    return best


@dataclass(frozen=True)
class BandwidthLimit:
    """First-order GVD ceiling on the XPM shift (Hz); see :func:`gvd_bandwidth_limit`."""

    value: float
    dispersion_free: bool = False


def gvd_bandwidth_limit(fiber: FiberSpec, pulse_fwhm: float, signal_wavelength: float) -> BandwidthLimit:
    """Shift at which dispersive walk-off over the fiber equals the control width.

    Solves ``|beta2| L 2 pi dnu = pulse_fwhm``.  An order-of-magnitude
    design aid, not a derived limit.
    """
    if not pulse_fwhm > 0:
        raise ValueError("pulse_fwhm must be positive")
    beta2 = beta2_at(fiber.delay_curve, signal_wavelength)
    if beta2 == 0.0:
        return BandwidthLimit(math.inf, True)
    return BandwidthLimit(pulse_fwhm / (2.0 * np.pi * abs(beta2) * fiber.length))


def read_group_delay_csv(path) -> list:
    """Read ``wavelength_nm, delay_ps_per_m`` rows (header required)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != ["wavelength_nm", "delay_ps_per_m"]:
            raise ValueError(
                f"{path}: expected header 'wavelength_nm,delay_ps_per_m', got {','.join(header)!r}"
            )
        samples = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                lam_nm, tau_ps = float(row[0]), float(row[1])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            samples.append(GroupDelaySample(lam_nm * NM, tau_ps * PS))
    return samples


def write_group_delay_csv(path, samples: Iterable[GroupDelaySample]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["wavelength_nm", "delay_ps_per_m"])
        for s in samples:
            writer.writerow([repr(float(s.wavelength / NM)), repr(float(s.delay / PS))])


def default_delay_curve() -> GroupDelayCurve:
    """Bundled stand-in for the PCF group-delay curve (visual approximation).

    Equal group delay at 756 nm and 1512 nm, zero dispersion near 1065 nm.
    """
    text = resources.files("photon_reshape.data").joinpath("default_group_delay.json").read_text()
    doc = json.loads(text)
    ref_nm = doc["reference_nm"]
    lo_nm, hi_nm = doc["valid_range_nm"]
    # stored per nm^k and ps/m; convert to SI
    coeffs = [c * PS / NM**k for k, c in enumerate(doc["coefficients_ps_per_m"])]
    return GroupDelayCurve.from_coefficients(coeffs, ref_nm * NM, (lo_nm * NM, hi_nm * NM))


def default_fiber(**overrides) -> FiberSpec:
    """1 m dispersion-managed PCF with approximate nonlinear coefficients."""
    params = dict(
        length=1.0,
        gamma_control=0.0155,
        gamma_signal=0.0062,
        delay_curve=default_delay_curve(),
        xpm_factor=2.0,
        transmission=1.0,
    )
    params.update(overrides)
    return FiberSpec(**params)
