"""Exception types shared across the package."""


class AnkgeError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(AnkgeError):
    """Invalid configuration value, key, or command-line usage."""


class ParseError(AnkgeError):
    """Malformed input file (triple TSV or config file)."""


class DataError(AnkgeError):
    """Inconsistent or missing data artifacts."""


class CheckpointError(DataError):
    """Unreadable, truncated, or inconsistent checkpoint/cache file."""


class DigestMismatchError(DataError):
    """An artifact does not match the digest recorded by a downstream stage."""


class DivergenceError(AnkgeError):
    """Training produced a non-finite loss."""
