"""Exception hierarchy shared by every module."""


class LikertKitError(Exception):
    """Base class for all errors raised by likertkit."""


class DataError(LikertKitError, ValueError):
    """Input data is malformed, out of range, or insufficient."""


class NumericalError(LikertKitError, ArithmeticError):
    """A numerical routine could not produce a result."""


class NotPositiveDefiniteError(NumericalError):
    """A matrix that must be positive definite is not."""


class ConvergenceError(NumericalError):
    """An iterative routine failed to converge."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations
