"""
Error types for the aided navigation toolkit.
Each family maps onto one CLI exit code.
"""


class NavAidError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ConfigError(NavAidError):
    """Invalid or incomplete run configuration (usage error)."""

    exit_code = 1


class NavDataError(NavAidError, ValueError):
    """Malformed, inconsistent or insufficient data."""

    exit_code = 2


class NumericalError(NavAidError, ArithmeticError):
    """A numerical operation could not be carried out (e.g. singular matrix)."""

    exit_code = 3
