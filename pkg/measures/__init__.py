"""
Smooth Measures for the time-change lab
Measures, fine supports, G-Kato membership and measure sequences.
"""

from .smooth_measure import (
    FineSupport,
    MeasureNodes,
    SmoothMeasure,
    chain_measure,
    dirac,
    fine_support,
    integrate,
    lebesgue,
    load_measure,
    reference_measure,
    total_mass,
)
from .kato import KatoResult, green_potential_of_one, is_green_kato
from .sequences import (
    HypothesisReport,
    MeasureSequence,
    check_hypothesis,
    hat_functions,
    load_sequence,
    make_sequence,
    placement_note,
)

__all__ = [
    'FineSupport', 'MeasureNodes', 'SmoothMeasure', 'chain_measure', 'dirac', 'fine_support',
    'integrate', 'lebesgue', 'load_measure', 'reference_measure', 'total_mass',
    'KatoResult', 'green_potential_of_one', 'is_green_kato',
    'HypothesisReport', 'MeasureSequence', 'check_hypothesis', 'hat_functions',
    'load_sequence', 'make_sequence', 'placement_note'
]
