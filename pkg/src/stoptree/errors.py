"""Exception types shared across the package.

The CLI maps these onto process exit codes (config 2, data 3, internal 4),
so library code should raise the most specific one that applies.
"""


class StopTreeError(Exception):
    """Base class for all package errors."""


class ConfigError(StopTreeError):
    """Invalid parameters, flags, or configuration values."""


class DataError(StopTreeError):
    """Malformed or inconsistent input data (files, arrays, policies vs. data)."""


class InternalError(StopTreeError):
    """An internal invariant was violated; indicates a bug, not user error."""
