"""Exception hierarchy shared by every lrelab module."""


class LreError(Exception):
    """Base class for all lrelab errors."""


class DomainError(LreError, ValueError):
    """A quantity is outside the domain where it is defined or finite."""


class RangeError(DomainError):
    """A target value is outside the attainable range of a monotone map."""

    def __init__(self, message, low=None, high=None):
        super().__init__(message)
        self.low = low
        self.high = high


class DegeneratePathError(DomainError):
    """The sufficient statistic is constant, so duality maps are undefined."""


class BoundaryError(DomainError):
    """An interior optimum was requested but the solution sits on a boundary."""


class ConvergenceError(LreError, RuntimeError):
    """An iterative solver hit its iteration budget."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SchemaError(LreError, ValueError):
    """An input document does not match the expected JSON schema."""
