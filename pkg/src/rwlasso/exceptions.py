"""Exception types shared across the package."""


class RWLassoError(Exception):
    """Base class for errors raised by rwlasso."""


class InvalidArgumentError(RWLassoError, ValueError):
    """Raised when an argument violates a documented precondition."""


class SingularSystemError(RWLassoError, ArithmeticError):
    """Raised when a linear system is not (numerically) positive definite.

    ``pivot`` is the 0-based index of the failing pivot, when known.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class DataParseError(RWLassoError, ValueError):
    """Raised when an input file cannot be parsed.

    ``row`` and ``column`` locate the offending cell (1-based data row,
    column name) when applicable.
    """

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column
