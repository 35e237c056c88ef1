"""
Time Change for the time-change lab
Trace generator and the semigroups of the time-changed process.
"""

from .trace import TimeChangedFamily, TraceGenerator, family_for, trace_generator
from .semigroups import (
    evolution_solution,
    exact_fdd,
    feller_full_check,
    heat_solution,
    integrated_semigroup,
    laplace_residual,
    mild_solution,
    relation_membership,
    restricted_resolvent,
    restricted_semigroup,
    semigroup_apply,
    substitute_feller_check,
)

__all__ = [
    'TimeChangedFamily', 'TraceGenerator', 'family_for', 'trace_generator',
    'evolution_solution', 'exact_fdd', 'feller_full_check', 'heat_solution', 'integrated_semigroup',
    'laplace_residual', 'mild_solution', 'relation_membership', 'restricted_resolvent',
    'restricted_semigroup', 'semigroup_apply', 'substitute_feller_check'
]
