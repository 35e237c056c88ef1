"""
Reporting for the time-change lab
The check, converge and simulate commands and their CSV/JSON writer.
"""

from .writer import ReportWriter, to_jsonable
from .commands import COMMANDS, cmd_check, cmd_converge, cmd_simulate

__all__ = ['ReportWriter', 'to_jsonable', 'COMMANDS', 'cmd_check', 'cmd_converge', 'cmd_simulate']
