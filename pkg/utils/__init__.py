"""
Utilities Module for the time-change lab
Logging, errors, run-config loading and linear-algebra helpers.
"""

from .logger import setup_logger, get_logger, LabLogger
from .errors import LabError, ConfigError, CheckFailed, ToleranceExceeded

__all__ = ['setup_logger', 'get_logger', 'LabLogger', 'LabError', 'ConfigError', 'CheckFailed',
           'ToleranceExceeded']
