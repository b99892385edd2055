"""Exception types shared across the package."""


class SelMixError(Exception):
    """Base class for runtime failures raised by this package."""


class DataError(SelMixError):
    """Malformed or inconsistent dataset input (bad CSV, missing class, ...)."""


class ConfigError(SelMixError):
    """Invalid configuration file or option value."""
