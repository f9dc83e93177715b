"""Simulation toolkit for reshaping single-photon spectra by cross-phase modulation.

Submodules
----------
gridkit
    Sampling grids and the time/frequency transform pair.
fiber
    Group-delay curves, dispersion and matched-wavelength search.
propagate
    Control-pulse evolution and the XPM operator acting on a signal photon.
biphoton
    Joint spectral amplitudes, filters and heralded spectra.
interference
    Hong-Ou-Mandel fringes, visibility and accidental-count models.
estimators
    Estimator-style wrappers (``fit``/``transform``/``predict``).
expcli
    Config-driven scenario runner and the ``photon-reshape`` command.
"""

from . import biphoton, fiber, gridkit, interference, propagate
from .errors import (
    CalibrationSaturationError,
    ConfigError,
    GridError,
    NoMatchedWavelengthError,
    NumericalConsistencyError,
    OutOfRangeError,
    PhotonReshapeError,
    RefinementError,
    ZeroStateWarning,
)

__version__ = "0.1.0"


def module_versions() -> dict:
    """Version string of every computational submodule, keyed by name."""
    mods = (gridkit, fiber, propagate, biphoton, interference)
    out = {m.__name__.rsplit(".", 1)[-1]: m.__version__ for m in mods}
    out["photon_reshape"] = __version__
    return out


__all__ = [
    "biphoton",
    "fiber",
    "gridkit",
    "interference",
    "propagate",
    "module_versions",
    "CalibrationSaturationError",
    "ConfigError",
    "GridError",
    "NoMatchedWavelengthError",
    "NumericalConsistencyError",
    "OutOfRangeError",
    "PhotonReshapeError",
    "RefinementError",
    "ZeroStateWarning",
]
