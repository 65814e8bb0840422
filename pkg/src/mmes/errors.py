"""Exception types raised by the package."""


class ParameterError(ValueError):
    """An argument is outside the domain an operation accepts."""


class NumericalError(ArithmeticError):
    """A matrix or statistic is numerically unusable (not SPD, zero variance, ...)."""


class ObjectiveError(RuntimeError):
    """The objective function returned a non-finite value."""
