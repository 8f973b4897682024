"""Exception hierarchy shared across the toolkit.

The CLI maps the three base classes to exit codes: ConfigError -> 2,
DataError -> 3, ProviderError -> 4.
"""

from __future__ import annotations


class NameOriginError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(NameOriginError):
    """Invalid or incomplete run configuration."""


class DataError(NameOriginError):
    """Problems with input data, labels, or file formats."""


class ProviderError(NameOriginError):
    """Chat-completion provider failure (transport, auth, bad payload)."""


class FormatError(DataError):
    """Malformed input file; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownLabel(DataError):
    pass


class MissingLabel(DataError):
    pass


class EmptyAfterFilter(DataError):
    pass


class SingleClass(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class EmptySet(DataError):
    pass


class NameSetMismatch(DataError):
    pass


class BadExampleSet(ConfigError):
    pass


class UnknownTableKind(ConfigError):
    pass


class MissingAnalysis(DataError):
    pass
