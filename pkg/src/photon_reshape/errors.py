"""Exception types shared across the package."""


class PhotonReshapeError(Exception):
    """Base class for all package errors."""


class GridError(PhotonReshapeError, ValueError):
    pass


class OutOfRangeError(PhotonReshapeError, ValueError):
    """A wavelength fell outside a curve's valid range."""


class NoMatchedWavelengthError(PhotonReshapeError, ValueError):
    pass


class RefinementError(PhotonReshapeError, ValueError):
    """The z step is too coarse for the nonlinear length."""


class NumericalConsistencyError(PhotonReshapeError, ArithmeticError):
    """A quantity violated a bound that holds analytically (e.g. |W| > 1)."""


class CalibrationSaturationError(PhotonReshapeError):
    """The requested spectral shift cannot be reached with the template."""

    def __init__(self, message, best_shift=None, best_power=None):
        super().__init__(message)
        self.best_shift = best_shift
        self.best_power = best_power


class ConfigError(PhotonReshapeError, ValueError):
    pass


class ZeroStateWarning(UserWarning):
    """Filtering removed all amplitude from a joint spectrum."""
