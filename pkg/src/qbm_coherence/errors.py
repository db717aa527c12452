"""Exception types raised across the package."""


class QBMError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(QBMError, ValueError):
    pass


class UnsupportedModelError(QBMError):
    """The requested quantity does not exist for the chosen bath model."""


class DivergenceError(QBMError, ArithmeticError):
    """A spectral integral diverges (e.g. strict Ohmic velocity variance)."""


class QuadratureError(QBMError, ArithmeticError):
    """Numerical integration failed to reach the requested tolerance.

    ``achieved`` holds the best relative accuracy that was reached, and
    ``panels`` the number of panels spent before giving up.
    """

    def __init__(self, message, achieved=float("nan"), panels=0):
        super().__init__(f"{message} (achieved rel. accuracy {achieved:.3g}, {panels} panels)")
        self.achieved = achieved
        self.panels = panels


class BracketError(InvalidInputError):
    pass


class DegeneracyError(QBMError, ArithmeticError):
    """Covariance determinant at or below hbar^2/4: the input is not a valid state."""


class InconsistentStateError(QBMError):
    pass


class ConfigError(QBMError, ValueError):
    pass
