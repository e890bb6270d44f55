"""Exception types shared across the toolkit.

ValidationError covers bad parameters and violated preconditions (CLI exit
code 1); DataError covers unreadable, malformed, or inconsistent data files
(CLI exit code 2).
"""


class DussError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(DussError):
    """Invalid argument, configuration, or precondition violation."""


class DataError(DussError):
    """Missing, malformed, or mutually inconsistent data."""
