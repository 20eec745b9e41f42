"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration: bad value, unknown key, or mismatched shapes."""


class DegenerateLogError(ValueError):
    """Logged data is unusable for fitting (e.g. only one action present)."""
