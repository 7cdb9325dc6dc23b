class LapDictError(Exception):
    """Base class for errors raised by lapdict."""


class InvalidParameterError(LapDictError, ValueError):
    """A parameter is outside the range an operation accepts."""


class NumericalFailureError(LapDictError, ArithmeticError):
    """A linear-algebra step could not be carried out reliably."""


class FormatError(LapDictError, IOError):
    """A persisted file does not follow the expected binary layout."""
