"""Exception hierarchy. The CLI maps each family to an exit code."""


class FGLeakError(Exception):
    """Base class for every error raised by fgleak."""


class ConfigError(FGLeakError, ValueError):
    pass


class DataError(FGLeakError):
    pass


class ParseError(DataError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(DataError):
    pass


class UniverseError(DataError):
    pass


class DelistingError(DataError):
    pass


class NumericalError(FGLeakError, ArithmeticError):
    """Raised when a quantity leaves its mathematical domain during a run."""

    def __init__(self, message, date=None):
        if date is not None:
            message = f"{date}: {message}"
        super().__init__(message)
        self.date = date


class DomainError(NumericalError, ValueError):
    pass


class SimplexError(DomainError):
    pass


class CalibrationError(NumericalError):
    pass


class GenerationError(NumericalError):
    pass


class WealthError(NumericalError):
    pass


class AlignmentError(NumericalError):
    pass


class SequencingError(FGLeakError):
    pass
