class EegDecodeError(Exception):
    """Base class for package errors."""


class ConfigError(EegDecodeError, ValueError):
    """Invalid or inconsistent configuration (CLI exit code 2)."""


class DataError(EegDecodeError, ValueError):
    """Malformed or inconsistent data on disk or in memory (CLI exit code 3)."""


class EmptySelectionError(DataError):
    """A trial or channel selection matched nothing."""
