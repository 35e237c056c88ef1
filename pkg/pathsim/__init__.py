"""
Path Simulation for the time-change lab
Exact chain paths, additive functionals and Monte Carlo estimators.
"""

from .paths import (
    CEMETERY,
    ChainPath,
    PathBatch,
    PcafPath,
    inverse_pcaf,
    pcaf,
    sample_batch,
    sample_path,
    state_density,
    timechanged_segments,
    timechanged_state,
)
from .estimators import (
    McEstimate,
    ResolventEstimates,
    mc_apotential,
    mc_fdd,
    mc_lifetime,
    mc_resolvent,
    mc_semigroup,
    mc_transition,
)

__all__ = [
    'CEMETERY', 'ChainPath', 'PathBatch', 'PcafPath', 'inverse_pcaf', 'pcaf', 'sample_batch',
    'sample_path', 'state_density', 'timechanged_segments', 'timechanged_state',
    'McEstimate', 'ResolventEstimates', 'mc_apotential', 'mc_fdd', 'mc_lifetime', 'mc_resolvent',
    'mc_semigroup', 'mc_transition'
]
