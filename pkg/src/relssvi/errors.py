"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericalError -> 4.
"""


class RelssviError(Exception):
    """Base class for package errors."""


class ConfigError(RelssviError, ValueError):
    """Invalid parameter or configuration value."""


class DataError(RelssviError, ValueError):
    """Malformed or inconsistent input data (corpus files, model files)."""


class NumericalError(RelssviError, ArithmeticError):
    """A computation produced a non-finite or out-of-domain value."""
