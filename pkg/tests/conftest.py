"""
Shared fixtures: the two-state chain C2, the five-state chain C5, a small
killed Brownian motion and a few standard measures.
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from measures.smooth_measure import SmoothMeasure, chain_measure, lebesgue, reference_measure  # noqa: E402
from models.chain_model import build_chain  # noqa: E402
from models.diffusion_model import DiffusionModel  # noqa: E402

C2_Q = [[-2.0, 1.0], [1.0, -2.0]]
C2_M = [1.0, 1.0]

C5_Q = [
    [-3.0, 1.0, 0.0, 0.0, 1.0],
    [1.0, -3.0, 1.0, 0.0, 0.0],
    [0.0, 2.0, -4.0, 1.0, 0.0],
    [0.0, 0.0, 1.0, -2.0, 0.5],
    [1.0, 0.0, 0.0, 1.0, -2.5],
]
C5_M = [1.0, 2.0, 1.0, 0.5, 1.5]


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Monte Carlo gates at full path counts")


@pytest.fixture(scope="module")
def c2():
    return build_chain(C2_Q, C2_M, name="C2")


@pytest.fixture(scope="module")
def c5():
    return build_chain(C5_Q, C5_M, name="C5")


@pytest.fixture(scope="module")
def diffusion():
    return DiffusionModel(199)


@pytest.fixture(scope="module")
def fine_diffusion():
    return DiffusionModel(1000)


@pytest.fixture
def atom_c2():
    """mu = (1, 0) on C2: F = {first state}."""
    return chain_measure([1.0, 0.0], "atom")


@pytest.fixture
def partial_c5():
    return chain_measure([1.0, 0.0, 2.0, 0.0, 0.5], "partial")


@pytest.fixture
def reference_c5(c5):
    return reference_measure(c5)


@pytest.fixture
def half_atom():
    return SmoothMeasure(((0.5, 1.0),), None, "diffusion", "delta_0.5")


@pytest.fixture
def leb():
    return SmoothMeasure((), lebesgue().density, "diffusion", "lebesgue")


def ones(x):
    return np.ones(np.shape(x))


def random_chain_masses(rng: np.random.Generator, size: int) -> np.ndarray:
    masses = rng.exponential(size=size) * (rng.random(size) > 1.0 / 3.0)
    if not masses.any():
        masses[rng.integers(size)] = 1.0
    return masses
