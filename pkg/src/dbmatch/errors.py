"""Exception types raised across the package."""

from __future__ import annotations


class DBMatchError(Exception):
    """Base class for all package errors."""


class GammaOutOfRange(DBMatchError, ValueError):
    pass


class InvalidDistribution(DBMatchError, ValueError):
    pass


class InvalidDelta(DBMatchError, ValueError):
    pass


class InvalidEpsilon(DBMatchError, ValueError):
    pass


class DimensionOverflow(DBMatchError, MemoryError):
    pass


class SizeMismatch(DBMatchError, ValueError):
    pass


class WidthMismatch(SizeMismatch):
    pass


class RowCountMismatch(SizeMismatch):
    pass


class PatternMismatch(DBMatchError, ValueError):
    pass


class SymbolOutOfRange(DBMatchError, ValueError):
    pass


class ConfigError(DBMatchError):
    """Raised for unreadable or invalid experiment configurations."""


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    """A config field failed validation; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


class TrialError(DBMatchError):
    """Wraps an error raised while running a single trial."""

    def __init__(self, trial_index: int, cause: BaseException):
        super().__init__(f"trial {trial_index}: {cause}")
        self.trial_index = trial_index
        self.cause = cause
