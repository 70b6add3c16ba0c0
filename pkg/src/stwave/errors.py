"""Exception hierarchy shared by all stwave modules."""


class StwaveError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(StwaveError, ValueError):
    pass


class MeshMismatchError(InvalidArgumentError):
    pass


class OutOfDomainError(InvalidArgumentError):
    pass


class SolverError(StwaveError, ArithmeticError):
    """Numerical failure inside a linear or eigenvalue solver."""


class NonPositivePivotError(SolverError):
    """Cholesky met a pivot <= 0; the matrix is not positive definite."""

    def __init__(self, index, pivot):
        super().__init__(f"non-positive pivot {pivot!r} at row {index}")
        self.index = index
        self.pivot = pivot


class NoConvergenceError(SolverError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SingularSystemError(SolverError):
    pass


class RhsSyntaxError(InvalidArgumentError):
    """Malformed right-hand-side spec string.

    ``offset`` is the byte offset into the input where parsing stopped and
    ``expected`` lists the tokens that would have been accepted there.
    """

    def __init__(self, message, text, offset, expected=()):
        self.text = text
        self.offset = offset
        self.expected = tuple(expected)
        detail = f"{message} at offset {offset}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


class ConfigError(InvalidArgumentError):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
