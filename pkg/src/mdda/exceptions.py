"""Error types that the command line maps to distinct exit codes."""


class ConfigError(ValueError):
    """Invalid configuration value, flag, or config-file field."""


class DataError(ValueError):
    """Malformed input data: parse failures, shape or label violations."""


class NumericError(RuntimeError):
    """Numerical failure during fitting (singular solve, non-finite objective)."""
