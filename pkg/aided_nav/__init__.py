"""
INS/DVL navigation with set-transformer bridging of DVL outages.
"""

from .errors import ConfigError, NavAidError, NavDataError, NumericalError

__all__ = ["NavAidError", "ConfigError", "NavDataError", "NumericalError"]
