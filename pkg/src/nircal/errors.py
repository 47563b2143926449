"""Exception types; the CLI maps each class to a distinct exit code."""


class ConfigError(ValueError):
    """Invalid configuration key, value, or command usage (exit code 2)."""


class DataError(ValueError):
    """Malformed or invalid data content: files, grids, targets (exit code 3)."""


class NumericalError(RuntimeError):
    """Numerical failure: non-convergence, rank deficit, degenerate deflation (exit code 4)."""
