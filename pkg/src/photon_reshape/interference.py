"""Hong-Ou-Mandel observables computed from a joint spectral amplitude."""

from __future__ import annotations

__version__ = "0.1.0"

import csv
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .biphoton import JointSpectralAmplitude
from .errors import GridError, NumericalConsistencyError

DIP = "dip"
BUMP = "bump"
FLAT = "flat"

W_TOLERANCE = 1e-8


@dataclass(frozen=True)
class HomFringe:
    """Coincidence rate versus arrival-time difference, plateau normalized to 1.

    ``overlap`` keeps the complex interference term ``W(delay)``.
    """

    delays: np.ndarray
    rates: np.ndarray
    r_classical: float
    r_extremum: float
    kind: str = DIP
    overlap: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        delays = np.asarray(self.delays, dtype=float)
        rates = np.asarray(self.rates, dtype=float)
        if delays.shape != rates.shape or delays.ndim != 1:
            raise ValueError("delays and rates must be 1-D arrays of equal length")
        if np.any(np.diff(delays) <= 0):
            raise ValueError("delays must be strictly increasing")
        if np.any(rates < -1e-12):
            raise ValueError("coincidence rates must be non-negative")
        if not self.r_classical > 0:
            raise ValueError("r_classical must be positive")
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "rates", rates)


class Visibility(NamedTuple):
    value: float
    kind: str


def _difference_sums(jsa: JointSpectralAmplitude) -> np.ndarray:
    """``c_k = sum_{i - j = k} S[i, j] conj(S[j, i])`` for k = -(n-1)..n-1."""
    s = jsa.amplitude
    n = s.shape[0]
    m = s * np.conj(s.T)
    i, j = np.indices(m.shape)
    idx = (i - j + n - 1).ravel()
    real = np.bincount(idx, weights=m.real.ravel(), minlength=2 * n - 1)
    imag = np.bincount(idx, weights=m.imag.ravel(), minlength=2 * n - 1)
    return real + 1j * imag


def interference_term(jsa: JointSpectralAmplitude, delays) -> np.ndarray:
    """Normalized ``W(delay) = sum S(w1,w2) S*(w2,w1) exp(i (w1-w2) delay) / N``."""
    if not jsa.same_grids():
        raise GridError("HOM interference needs identical signal and idler grids")
    norm = float(np.sum(np.abs(jsa.amplitude) ** 2))
    if not norm > 0:
        raise ValueError("HOM fringe of the zero state")
    n = jsa.grid_s.n
    c = _difference_sums(jsa) / norm
    k = np.arange(-(n - 1), n)
    delays = np.atleast_1d(np.asarray(delays, dtype=float))
    phase = np.exp(1j * np.outer(delays, k * jsa.grid_s.spacing))
    w = phase @ c
    worst = float(np.max(np.abs(w))) if len(w) else 0.0
    if worst > 1.0 + W_TOLERANCE:
        raise NumericalConsistencyError(f"|W| = {worst:.12g} exceeds 1")
    return w


def _classify(delays, rates):
    mid = 0.5 * (delays[0] + delays[-1])
    half = 0.5 * (delays[-1] - delays[0])
    dist = np.abs(delays - mid)
    outer = dist >= 0.9 * half
    inner = dist <= 0.2 * half
    if not inner.any():
        inner = dist == dist.min()
    r_classical = float(np.mean(rates[outer]))
    # the fringe at the window centre decides between dip and bump
    center_dev = rates[int(np.argmin(dist))] - r_classical
    if abs(center_dev) <= 1e-12 * max(r_classical, 1.0):
        return r_classical, r_classical, FLAT
    if center_dev > 0:
        return r_classical, float(rates[inner].max()), BUMP
    return r_classical, float(rates[inner].min()), DIP


def hom_fringe(jsa: JointSpectralAmplitude, delays: Sequence[float]) -> HomFringe:
    """Two-photon coincidence fringe behind an ideal 50/50 splitter.

    Rates are ``1 - Re W`` (the bare probability ``(1 - Re W) / 2`` divided
    by its plateau value 1/2).  The plateau is the mean over the outer 10% of
    the delay window, the extremum is taken over the inner 20%.
    """
    delays = np.asarray(delays, dtype=float)
    if delays.ndim != 1 or len(delays) < 3:
        raise ValueError("need at least three delays")
    w = interference_term(jsa, delays)
    rates = np.clip(1.0 - w.real, 0.0, None)
    r_classical, r_ext, kind = _classify(delays, rates)
    return HomFringe(delays, rates, r_classical, r_ext, kind, w)


def visibility(fringe: HomFringe) -> Visibility:
    """``|r_classical - r_extremum| / r_classical`` with its dip/bump tag."""
    if not fringe.r_classical > 0:
        raise ValueError("r_classical must be positive")
    v = abs(fringe.r_classical - fringe.r_extremum) / fringe.r_classical
    return Visibility(float(v), fringe.kind)


def jsi_visibility_bound(jsi: np.ndarray) -> float:
    """Largest ``|W(0)|`` compatible with a joint spectral intensity.

    ``sum sqrt(J(w1,w2) J(w2,w1)) / sum J``, i.e. the optimum over all
    spectral phases.
    """
    j = np.asarray(jsi, dtype=float)
    if j.ndim != 2 or j.shape[0] != j.shape[1]:
        raise ValueError("the JSI must be a square matrix")
    if np.any(j < 0):
        raise ValueError("the JSI must be non-negative")
    total = j.sum()
    if not total > 0:
        raise ValueError("the JSI has zero mass")
    return float(np.sum(np.sqrt(j * j.T)) / total)


def add_accidentals(fringe: HomFringe, background_fraction: float) -> HomFringe:
    """Add a flat background ``b = background_fraction * r_classical``, renormalized.

    ``rates' = (rates + b) / (1 + b)``.
    """
    if background_fraction < 0:
        raise ValueError("background_fraction must be non-negative")
    b = background_fraction * fringe.r_classical
    return _remap(fringe, lambda r: (r + b) / (1.0 + b))


def remove_accidentals(fringe: HomFringe, background_fraction: float) -> HomFringe:
    """Inverse of :func:`add_accidentals` for the same ``background_fraction``."""
    if background_fraction < 0:
        raise ValueError("background_fraction must be non-negative")
    f, rc = background_fraction, fringe.r_classical
    b = f * rc / (1.0 + f - f * rc)
    return _remap(fringe, lambda r: r * (1.0 + b) - b)


def _remap(fringe: HomFringe, fn) -> HomFringe:
    return replace(fringe, rates=fn(fringe.rates), r_classical=float(fn(fringe.r_classical)),
                   r_extremum=float(fn(fringe.r_extremum)))


def background_for_visibility(v_clean: float, v_raw: float) -> float:
    """Background fraction turning visibility ``v_clean`` into ``v_raw`` (plateau 1)."""
    if not 0 < v_raw <= v_clean:
        raise ValueError("need 0 < v_raw <= v_clean")
    return v_clean / v_raw - 1.0


def export_fringe_csv(path, fringe: HomFringe) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["delay_ps", "rate_normalized"])
        for d, r in zip(fringe.delays, fringe.rates):
            writer.writerow([f"{d * 1e12:.10e}", f"{r:.10e}"])
