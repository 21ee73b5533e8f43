"""Exception types raised across the package."""


class ConvposError(Exception):
    """Base class for all package errors."""


class NotPositiveDefiniteError(ConvposError, ValueError):
    """A matrix expected to be symmetric positive-definite is not."""


class SingularMatrixError(ConvposError, ValueError):
    """A matrix expected to be invertible is (numerically) singular."""


class ConditioningError(ConvposError, ArithmeticError):
    """A computed factor fails its invariant because of poor conditioning."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class UnsupportedDimensionError(ConvposError, ValueError):
    """The requested construction does not exist in this dimension."""


class BodySpecError(ConvposError, ValueError):
    """A body description is malformed or describes an invalid body."""


class InfeasibleStartError(ConvposError, RuntimeError):
    """No strictly feasible starting point could be built."""


class ConvergenceError(ConvposError, RuntimeError):
    """An iterative method stopped before reaching its tolerance.

    Attributes
    ----------
    residual : float
        Last residual seen by the method.
    best : object
        Best iterate available when the method stopped, if any.
    """

    def __init__(self, message: str, residual: float = float("nan"), best=None):
        super().__init__(message)
        self.residual = residual
        self.best = best


class DecompositionError(ConvposError, ArithmeticError):
    """Contact-pair weights could not be found to the required accuracy."""


class UnsupportedBodyError(ConvposError, NotImplementedError):
    """The requested exact computation is not available for these bodies."""
