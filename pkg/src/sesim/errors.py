"""Shared exception and warning types."""


class ParseError(ValueError):
    """Unreadable or malformed input file (edge lists, feature tables)."""


class ConfigError(ValueError):
    """Structurally valid input with semantically invalid configuration values."""


class InvariantError(RuntimeError):
    """An internal consistency check failed; indicates a bug, not bad input."""


class DegenerateGraphWarning(UserWarning):
    """Raised when an operation receives a graph with zero total volume."""
