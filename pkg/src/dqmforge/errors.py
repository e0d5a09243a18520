"""Exception types shared across the toolchain."""


class DqmError(Exception):
    """Base class for all domain errors raised by dqmforge."""


class InputError(DqmError, ValueError):
    """Malformed or inconsistent input (shapes, ranges, vartypes, schemas)."""


class ConfigError(DqmError, ValueError):
    """Unresolvable or empty configuration."""


class EmbeddingError(DqmError, ValueError):
    """An embedding does not fit the logical model or the hardware graph."""


class SearchSpaceError(DqmError, ValueError):
    """Exhaustive search refused because the space exceeds the cap."""
