"""
Path simulation tests: the additive functional and its inverse on a fixed
path, and the Monte Carlo estimators against exact values.
"""

import numpy as np
import pytest

from measures.smooth_measure import chain_measure
from pathsim.estimators import (
    McEstimate,
    mc_apotential,
    mc_fdd,
    mc_lifetime,
    mc_resolvent,
    mc_semigroup,
    mc_transition,
)
from pathsim.paths import (
    CEMETERY,
    ChainPath,
    PathBatch,
    inverse_identity_residuals,
    inverse_pcaf,
    pcaf,
    sample_path,
    state_density,
    timechanged_segments,
    timechanged_state,
)
from potential.operators import potential_apply
from tests.conftest import ones
from utils.errors import BadParameters

FAST_PATHS = 20_000
Z_GATE = 4.0


@pytest.fixture
def fixed_path():
    # state 0 on [0, 1), state 1 on [1, 3), state 0 on [3, 4), then killed
    return ChainPath(np.array([0.0, 1.0, 3.0, 4.0]), np.array([0, 1, 0]), 4.0, True)


class TestFunctional:
    def test_values(self, c2, atom_c2, fixed_path):
        functional = pcaf(fixed_path, state_density(c2, atom_c2))
        np.testing.assert_allclose(functional.values, [0.0, 1.0, 1.0, 2.0])
        assert functional.total == 2.0
        assert functional.at(2.0) == 1.0
        assert functional.at(10.0) == 2.0

    def test_flat_stretch_becomes_a_jump(self, c2, atom_c2, fixed_path):
        functional = pcaf(fixed_path, state_density(c2, atom_c2))
        assert inverse_pcaf(functional, 0.5) == 0.5
        assert inverse_pcaf(functional, 1.0) == 3.0
        assert inverse_pcaf(functional, 1.5) == 3.5

    def test_inverse_beyond_total_is_infinite(self, c2, atom_c2, fixed_path):
        functional = pcaf(fixed_path, state_density(c2, atom_c2))
        assert inverse_pcaf(functional, 2.0) == float("inf")
        assert timechanged_state(fixed_path, functional, 2.5) == CEMETERY
        with pytest.raises(ValueError):
            inverse_pcaf(functional, -1.0)

    def test_time_changed_path_skips_off_support(self, c2, atom_c2, fixed_path):
        functional = pcaf(fixed_path, state_density(c2, atom_c2))
        assert [timechanged_state(fixed_path, functional, t) for t in (0.0, 0.9, 1.0, 1.9)] == [0, 0, 0, 0]
        assert timechanged_segments(fixed_path, functional) == [(0.0, 1.0, 0), (1.0, 2.0, 0)]

    def test_inverse_identities(self, c2, atom_c2, fixed_path):
        functional = pcaf(fixed_path, state_density(c2, atom_c2))
        residuals = inverse_identity_residuals(functional, [0.0, 0.5, 1.0, 1.5, 1.99], [0.0, 0.5, 2.0, 3.5])
        assert residuals["forward"] < 1e-14
        assert residuals["backward"] <= 0.0

    def test_batch_matches_single_path(self, c2, atom_c2, fixed_path):
        batch = PathBatch(fixed_path.jump_times[np.newaxis, :], fixed_path.states[np.newaxis, :],
                          np.array([4.0]), np.array([False]))
        _, values = batch.functional(state_density(c2, atom_c2))
        functional = pcaf(fixed_path, state_density(c2, atom_c2))
        for t in (0.2, 1.0, 1.7, 2.0, 3.0):
            assert batch.timechanged_state(values, t)[0] == timechanged_state(fixed_path, functional, t)
        assert batch.state_at(2.0)[0] == 1
        assert batch.state_at(4.0)[0] == CEMETERY

    def test_segments_agree_with_batch_states(self, c5, partial_c5):
        path = sample_path(c5, 2, seed=11)
        density = state_density(c5, partial_c5)
        functional = pcaf(path, density)
        batch = PathBatch(path.jump_times[np.newaxis, :], path.states[np.newaxis, :],
                          np.array([path.lifetime]), np.array([False]))
        _, values = batch.functional(density)
        segments = timechanged_segments(path, functional)
        assert segments
        for start, end, state in segments:
            assert batch.timechanged_state(values, 0.5 * (start + end))[0] == state
        assert sum(end - start for start, end, _ in segments) == pytest.approx(functional.total)


class TestSamplePath:
    def test_path_structure(self, c5):
        path = sample_path(c5, 2, seed=11)
        assert path.jump_times[0] == 0.0
        assert np.all(np.diff(path.jump_times) > 0)
        assert path.states[0] == 2
        assert np.all((path.states >= 0) & (path.states < c5.size))
        assert path.lifetime == path.jump_times[-1]

    def test_horizon(self, c5):
        path = sample_path(c5, 0, horizon=1e-9, seed=1)
        assert not path.killed and path.lifetime == 1e-9

    def test_bad_start(self, c5):
        with pytest.raises(ValueError):
            sample_path(c5, 5)


class TestEstimators:
    def test_same_seed_same_estimate(self, c5, partial_c5):
        first = mc_semigroup(c5, partial_c5, 0.5, ones, 1, n_paths=2000, seed=5, workers=1)
        second = mc_semigroup(c5, partial_c5, 0.5, ones, 1, n_paths=2000, seed=5, workers=1)
        assert first == second
        other = mc_semigroup(c5, partial_c5, 0.5, ones, 1, n_paths=2000, seed=6, workers=1)
        assert other.estimate != first.estimate

    def test_zero_function_short_circuits(self, c2, atom_c2):
        estimate = mc_semigroup(c2, atom_c2, 1.0, np.zeros(2), 0, n_paths=5000)
        assert estimate.estimate == 0.0 and estimate.stderr == 0.0
        assert estimate.z(0.0) == 0.0
        both = mc_resolvent(c2, atom_c2, 1.0, [0.0, 3.0], 0, n_paths=5000)
        assert both.randomized.estimate == 0.0 and both.agreement_z() == 0.0

    def test_too_few_paths(self, c2, atom_c2):
        with pytest.raises(BadParameters):
            mc_semigroup(c2, atom_c2, 1.0, ones, 0, n_paths=10)

    def test_bad_start(self, c2, atom_c2):
        with pytest.raises(BadParameters):
            mc_semigroup(c2, atom_c2, 1.0, ones, 2, n_paths=2000)

    def test_z_of_exact_zero_stderr(self):
        assert McEstimate(1.0, 0.0, 10, 0).z(2.0) == float("inf")

    def test_c2_semigroup(self, c2, atom_c2):
        estimate = mc_semigroup(c2, atom_c2, 1.0, ones, 0, n_paths=FAST_PATHS, seed=1)
        assert abs(estimate.z(np.exp(-1.5))) <= Z_GATE

    def test_c2_resolvent_estimators_agree(self, c2, atom_c2):
        exact = 2.0 / 5.0
        both = mc_resolvent(c2, atom_c2, 1.0, ones, 0, n_paths=FAST_PATHS, seed=2)
        assert abs(both.randomized.z(exact)) <= Z_GATE
        assert abs(both.functional.z(exact)) <= Z_GATE
        assert abs(both.agreement_z()) <= Z_GATE

    def test_c2_apotential(self, c2, atom_c2):
        estimate = mc_apotential(c2, atom_c2, 1.0, ones, 0, n_paths=FAST_PATHS, seed=3)
        assert potential_apply(c2, atom_c2, 1.0, ones).values[0] == pytest.approx(3.0 / 8.0)
        assert abs(estimate.z(3.0 / 8.0)) <= Z_GATE

    def test_c2_lifetime_and_transition(self, c2):
        assert abs(mc_lifetime(c2, 0, n_paths=FAST_PATHS, seed=4).z(1.0)) <= Z_GATE
        exact = c2.transition(0.5, [1.0, 2.0]).values[1]
        assert abs(mc_transition(c2, 0.5, [1.0, 2.0], 1, n_paths=FAST_PATHS, seed=5).z(exact)) <= Z_GATE

    def test_c2_fdd(self, c2, atom_c2):
        start = chain_measure([1.0, 0.0], "start")
        estimate = mc_fdd(c2, start, atom_c2, [1.0], [ones, ones], n_paths=FAST_PATHS, seed=6)
        assert estimate.mass_factor == 1.0
        assert abs(estimate.z(np.exp(-1.5))) <= Z_GATE

    def test_fdd_needs_matching_functions(self, c2, atom_c2):
        with pytest.raises(BadParameters):
            mc_fdd(c2, atom_c2, atom_c2, [1.0], [ones])


@pytest.mark.slow
class TestParallelWorkers:
    PATHS = 100_000

    def test_workers_are_deterministic(self, c5, partial_c5):
        first = mc_semigroup(c5, partial_c5, 0.5, ones, 0, n_paths=self.PATHS, seed=40, workers=2)
        second = mc_semigroup(c5, partial_c5, 0.5, ones, 0, n_paths=self.PATHS, seed=40, workers=2)
        assert first == second
