"""
Kernel Models for the time-change lab
Finite transient chains and killed Brownian motion on (0, 1).
"""

from .functions import FunctionOnX, as_values, function_from_spec, hat_function
from .base_model import KernelModel
from .chain_model import ChainModel, build_chain, dual_model, transition
from .diffusion_model import DiffusionModel, bm_green
from .loader import load_model

__all__ = [
    'FunctionOnX',
    'as_values',
    'function_from_spec',
    'hat_function',
    'KernelModel',
    'ChainModel',
    'build_chain',
    'dual_model',
    'transition',
    'DiffusionModel',
    'bm_green',
    'load_model'
]
