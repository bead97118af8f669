"""Exception types shared across the package.

Exit-code mapping in the CLI: ConfigError -> 2, NumericError (and any
other runtime abort) -> 3.
"""


class ConfigError(ValueError):
    """Invalid configuration value or malformed config file."""


class NumericError(RuntimeError):
    """NaN/Inf detected in a place that must stay finite; the run aborts."""
