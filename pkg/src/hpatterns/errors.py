"""Exception hierarchy shared by every module."""


class PatternError(Exception):
    """Base class for all errors raised by hpatterns."""


class DomainError(PatternError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class BracketError(PatternError, ValueError):
    """A target value is not bracketed by the images of a search interval."""


class ConfigError(PatternError, ValueError):
    """Invalid parameters or inconsistent configuration."""


class ParseError(ConfigError):
    """Text input could not be parsed; carries a 1-based line and column."""

    def __init__(self, message, line=1, column=1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class CertificationError(PatternError):
    """A certified inequality could not be established at the working precision."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class InfeasibleError(PatternError):
    """Grid arithmetic found no candidate where the nesting argument promises one."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ConstructionLimitError(PatternError):
    """A required quantity cannot be represented within the configured limits."""
