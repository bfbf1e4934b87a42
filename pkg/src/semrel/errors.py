"""Exception hierarchy shared by all semrel modules.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericalError -> 4.
"""


class SemrelError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SemrelError):
    """Bad usage or wiring: missing resources, unknown names, shape mismatches."""


class DataError(SemrelError):
    """Malformed or inconsistent input data (datasets, sidecars, predictions)."""


class NumericalError(SemrelError):
    """Degenerate numeric condition: undefined ratio/correlation, zero vector,
    constant feature column, failed convergence."""
