"""
Lab for the time-change lab
Experiment specifications, convergence runners and their reports.
"""

from .experiment import ExperimentSpec, THEOREMS, SEMIGROUP_MODES, t_grid_from_text
from .extension import extend, hitting_projection, restrict
from .report import ConvergenceReport, best_subsequence, failed_report, fit_slope, verdict
from .runners import RUNNERS, run_experiment

__all__ = [
    'ExperimentSpec', 'THEOREMS', 'SEMIGROUP_MODES', 't_grid_from_text',
    'extend', 'hitting_projection', 'restrict',
    'ConvergenceReport', 'best_subsequence', 'failed_report', 'fit_slope', 'verdict',
    'RUNNERS', 'run_experiment'
]
