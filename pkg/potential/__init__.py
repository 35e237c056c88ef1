"""
Potential Operators for the time-change lab
Potentials, the time-changed resolvent, hitting operators and structural checks.
"""

from .operators import (
    hitting_apply,
    markov_completion,
    phi_A,
    potential_apply,
    resolvent_equation_residual,
    resolvent_operator,
    revuz_recovery,
    strong_limit_check,
    timechanged_resolvent,
)
from .checks import (
    cmp_check,
    feller_resolvent_check,
    kernel_range_check,
    normality_check,
    range_identity_check,
    support_consistency,
)

__all__ = [
    'hitting_apply', 'markov_completion', 'phi_A', 'potential_apply', 'resolvent_equation_residual',
    'resolvent_operator', 'revuz_recovery', 'strong_limit_check', 'timechanged_resolvent',
    'cmp_check', 'feller_resolvent_check', 'kernel_range_check', 'normality_check',
    'range_identity_check', 'support_consistency'
]
