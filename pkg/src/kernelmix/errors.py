"""Exception types shared across the package.

The CLI maps these onto its stable exit codes: DataError -> 2,
ConfigError -> 3, ModelIntegrityError -> 4.
"""


class KernelmixError(Exception):
    """Base class for package errors."""


class DataError(KernelmixError):
    """Malformed or unusable input data (parse failures, empty classes, ...)."""


class ConfigError(KernelmixError):
    """Invalid configuration or argument values."""


class ModelIntegrityError(KernelmixError):
    """A persisted model failed verification on load."""
