"""Exception types shared across the package.

The CLI maps these onto its exit codes: ConfigError -> 1, RegimeError -> 2,
ConvergenceError -> 3.
"""


class ConfigError(ValueError):
    """Invalid or missing configuration input."""

    exit_code = 1


class RegimeError(ValueError):
    """Operation requested outside its admissible parameter regime."""

    exit_code = 2


class ConvergenceError(RuntimeError):
    """A numerical procedure failed to converge within its budget."""

    exit_code = 3
