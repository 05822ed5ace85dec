"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """Parameters or arguments outside the admissible domain."""


class PrecisionError(ArithmeticError):
    """Numerical evaluation did not reach the requested accuracy.

    The best available estimate is kept in ``partial`` so callers can decide
    whether it is usable.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ConditioningError(ArithmeticError):
    """A matrix or tridiagonal problem is too ill-conditioned to trust."""


class ContractError(ValueError):
    """Structurally invalid input (bad shapes, lengths or file contents)."""


class EstimationError(RuntimeError):
    """An iterative estimator failed to converge. ``trace`` holds the history."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class UnreliableEstimateWarning(UserWarning):
    """An estimate was returned but its input window is too narrow to trust."""
