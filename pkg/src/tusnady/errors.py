"""Exception types raised across the package."""


class TusnadyError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(TusnadyError, ValueError):
    """Argument outside the mathematical domain of a function."""


class RangeError(TusnadyError, ValueError):
    """Target value is not attained by the function being inverted."""


class IndexOutOfRange(TusnadyError, IndexError):
    """Tail index k outside m/2 < k <= m (or m not admissible)."""


class NotInSupport(TusnadyError, ValueError):
    """Point is not in {-m, -m+2, ..., m}."""


class InvalidBracket(TusnadyError, ValueError):
    """Root bracket with lo >= hi."""


class NoSignChange(TusnadyError, ValueError):
    """Function has the same strict sign at both bracket ends."""


class EvaluationFailure(TusnadyError, ArithmeticError):
    """A lazily evaluated expression could not be computed."""


class Undecidable(TusnadyError, ArithmeticError):
    """A comparison could not be settled within the precision budget."""

    def __init__(self, message, precision):
        super().__init__(message)
        self.precision = precision
