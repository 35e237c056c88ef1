"""
Tests for the trace generator and the time-changed semigroups on C2, C5 and
the killed Brownian motion.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import linalg

from measures.smooth_measure import chain_measure, reference_measure
from potential.operators import timechanged_resolvent
from timechange.semigroups import (
    evolution_membership_check,
    exact_fdd,
    feller_full_check,
    heat_solution,
    integrated_semigroup,
    laplace_residual,
    laplace_table,
    mild_solution,
    relation_membership,
    restricted_resolvent,
    restricted_semigroup,
    semigroup_apply,
    semigroup_law_residual,
    solution_diagnostics,
    substitute_feller_check,
    trace_submarkov_excess,
)
from timechange.trace import TimeChangedFamily, family_for, trace_generator
from tests.conftest import ones
from utils.errors import BadParameters

U = [3.0, -5.0]


class TestTraceGenerator:
    def test_c2_schur_complement(self, c2, atom_c2):
        trace = trace_generator(c2, atom_c2)
        assert_allclose(trace.matrix, [[-1.5]], atol=1e-14)
        assert trace.residual < 1e-12

    def test_reference_measure_recovers_q(self, c5, reference_c5):
        trace = trace_generator(c5, reference_c5)
        assert_allclose(trace.matrix, c5.generator, atol=1e-12)

    def test_partial_support_size(self, c5, partial_c5):
        assert trace_generator(c5, partial_c5).size == 3

    def test_half_atom_conductance(self, diffusion, half_atom):
        assert_allclose(trace_generator(diffusion, half_atom).matrix, [[-2.0]], atol=1e-14)

    def test_half_atom_resolvent(self, diffusion, half_atom):
        family = family_for(diffusion, half_atom)
        for alpha in (0.5, 3.0):
            assert family.resolvent_action(alpha, [1.0])[0] == pytest.approx(1.0 / (2.0 + alpha))

    def test_matrix_is_read_only(self, c2, atom_c2):
        with pytest.raises(ValueError):
            trace_generator(c2, atom_c2).matrix[0, 0] = 1.0


class TestSemigroups:
    @pytest.mark.parametrize("t", [0.0, 0.3, 1.0, 4.0])
    def test_c2_semigroup(self, c2, atom_c2, t):
        expected = np.exp(-1.5 * t) * np.array([U[0], U[0] / 2.0])
        assert_allclose(semigroup_apply(c2, atom_c2, t, U).values, expected, atol=1e-14)

    def test_zero_time_is_hitting(self, c5, partial_c5):
        u = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        values = semigroup_apply(c5, partial_c5, 0.0, u).values
        assert_allclose(values[[0, 2, 4]], u[[0, 2, 4]])
        assert not np.allclose(values, u)

    @pytest.mark.parametrize("t", [0.0, 0.5, 2.0])
    def test_c2_integrated(self, c2, atom_c2, t):
        values = integrated_semigroup(c2, atom_c2, t, U).values
        scale = (1.0 - np.exp(-1.5 * t)) / 1.5
        assert_allclose(values, scale * np.array([U[0], U[0] / 2.0]), atol=1e-14)
        assert values[0] == pytest.approx(2.0 / 3.0 * (1.0 - np.exp(-1.5 * t)) * U[0], abs=1e-14)

    def test_restricted_operators(self, c2, atom_c2):
        assert_allclose(restricted_semigroup(c2, atom_c2, 2.0, [4.0]), [4.0 * np.exp(-3.0)])
        assert_allclose(restricted_resolvent(c2, atom_c2, 2.5, [4.0]), [1.0])
        with pytest.raises(ValueError):
            restricted_resolvent(c2, atom_c2, 1.0, [1.0, 2.0])
        with pytest.raises(ValueError):
            restricted_resolvent(c2, atom_c2, 0.0, [1.0])

    def test_heat_solution_starts_from_hitting(self, c2, atom_c2):
        assert_allclose(heat_solution(c2, atom_c2, U, 0.0).values, [U[0], U[0] / 2.0], atol=1e-14)
        assert_allclose(heat_solution(c2, atom_c2, U, 1.0).values, semigroup_apply(c2, atom_c2, 1.0, U).values)

    def test_negative_time(self, c2, atom_c2):
        with pytest.raises(ValueError):
            semigroup_apply(c2, atom_c2, -1.0, U)

    def test_semigroup_law(self, c5, partial_c5):
        assert semigroup_law_residual(c5, partial_c5, 0.4, 1.1) < 1e-12
        assert trace_submarkov_excess(c5, partial_c5, [0.1, 1.0, 10.0]) < 1e-12

    def test_diffusion_semigroup_is_submarkov(self, diffusion, leb):
        values = semigroup_apply(diffusion, leb, 0.05, ones).values
        assert np.all(values >= -1e-12) and np.all(values <= 1.0 + 1e-12)


class TestLaplace:
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 10.0])
    def test_chain_identity(self, c2, c5, atom_c2, partial_c5, alpha):
        assert laplace_residual(c2, atom_c2, alpha, U) < 1e-6
        assert laplace_residual(c5, partial_c5, alpha, [1.0, -1.0, 2.0, 0.0, 0.5]) < 1e-6

    def test_diffusion_table(self, diffusion, half_atom):
        table = laplace_table(diffusion, half_atom, ones)
        assert list(table.columns) == ["alpha", "residual"]
        assert table["residual"].max() < 1e-6


class TestRelation:
    def test_resolvent_images_are_members(self, c2, atom_c2):
        alpha = 2.0
        g = np.array([1.0, 5.0])
        u = timechanged_resolvent(c2, atom_c2, alpha, g).values
        assert relation_membership(c2, atom_c2, alpha, u, g - alpha * u)
        # only the trace on F is pinned down
        assert relation_membership(c2, atom_c2, alpha, u, g - alpha * u + np.array([0.0, 7.0]))
        assert not relation_membership(c2, atom_c2, alpha, u, g - alpha * u + np.array([1.0, 0.0]))

    def test_integrated_semigroup_membership(self, c2, atom_c2):
        table = evolution_membership_check(c2, atom_c2, ones, [0.5, 1.0, 3.0])
        assert table["member"].all()

    def test_membership_needs_time_past_step(self, c2, atom_c2):
        with pytest.raises(BadParameters):
            evolution_membership_check(c2, atom_c2, ones, [1e-5])

    @pytest.mark.parametrize("kind", ["heat", "evolution"])
    def test_solution_diagnostics(self, c5, partial_c5, kind):
        table = solution_diagnostics(c5, partial_c5, [1.0, 0.0, 2.0, 0.0, 1.0], [0.2, 1.0], kind)
        assert table["residual"].max() < 1e-6

    def test_mild_solution(self, c2, atom_c2):
        t = 0.8
        free = mild_solution(c2, atom_c2, [2.0], t)
        assert_allclose(free, [2.0 * np.exp(-1.5 * t)])
        forced = mild_solution(c2, atom_c2, [2.0], t, forcing=lambda s: np.array([1.0]))
        assert_allclose(forced, [2.0 * np.exp(-1.5 * t) + (1.0 - np.exp(-1.5 * t)) / 1.5], atol=1e-10)


class TestFdd:
    def test_single_time(self, c2, atom_c2):
        start = chain_measure([1.0, 0.0], "start")
        assert exact_fdd(c2, start, atom_c2, [1.0], [ones, ones]) == pytest.approx(np.exp(-1.5))

    def test_two_times_factorise(self, c2, atom_c2):
        start = chain_measure([1.0, 0.0], "start")
        value = exact_fdd(c2, start, atom_c2, [0.5, 1.5], [ones, ones, ones])
        assert value == pytest.approx(np.exp(-1.5 * 1.5))

    def test_hitting_start(self, c2, atom_c2):
        start = chain_measure([0.0, 1.0], "start")
        assert exact_fdd(c2, start, atom_c2, [1.0], [ones, ones]) == pytest.approx(0.5 * np.exp(-1.5))
        assert exact_fdd(c2, start, atom_c2, [1.0], [ones, ones], hitting_start=True) == pytest.approx(
            0.5 * np.exp(-1.5))

    @pytest.mark.parametrize("times, count", [([], 1), ([1.0, 0.5], 3), ([1.0], 3)])
    def test_bad_arguments(self, c2, atom_c2, times, count):
        with pytest.raises(BadParameters):
            exact_fdd(c2, atom_c2, atom_c2, times, [ones] * count)


class TestFeller:
    def test_substitute_on_partial_support(self, c2, atom_c2):
        report = substitute_feller_check(c2, atom_c2)
        assert report["c0_ok"] and report["continuity_ok"]
        assert report["off_range_gap"] == pytest.approx(0.5)
        assert report["strong_continuity_fails_off_range"]

    def test_substitute_on_diffusion(self, diffusion, half_atom):
        report = substitute_feller_check(diffusion, half_atom)
        assert report["c0_ok"]
        assert report["strong_continuity_fails_off_range"]

    def test_full_support(self, c5, reference_c5):
        report = feller_full_check(c5, reference_c5)
        assert report["resolvent_ok"]
        assert report["semigroup_error"] < 1e-2
        assert report["generator_residual"] < 1e-12

    def test_full_check_refuses_partial_support(self, c2, atom_c2):
        with pytest.raises(BadParameters):
            feller_full_check(c2, atom_c2)


class TestFamilyCache:
    def test_shared_family(self, c2, atom_c2):
        assert family_for(c2, atom_c2) is family_for(c2, atom_c2)

    def test_cached_exponential_matches_recomputation(self, c5, partial_c5):
        family = family_for(c5, partial_c5)
        first = family.exp_matrix(0.7)
        assert family.exp_matrix(0.7) is first
        assert_allclose(first, linalg.expm(0.7 * family.generator), atol=1e-14)
        fresh = TimeChangedFamily(c5, partial_c5)
        assert_allclose(fresh.exp_matrix(0.7), first, atol=0.0)

    def test_exponential_cache_is_bounded(self, c5, partial_c5, monkeypatch):
        monkeypatch.setattr("config.OPERATOR_CACHE_SIZE", 3)
        family = TimeChangedFamily(c5, partial_c5)
        for t in np.linspace(0.1, 2.0, 10):
            family.exp_matrix(t)
        assert len(family._exp_cache) == 3
        assert 2.0 in family._exp_cache

    def test_diffusion_spectral_path(self, diffusion, leb):
        family = family_for(diffusion, leb)
        h = family.restrict(ones)
        assert_allclose(family.exp_matrix(0.2) @ h, family.exp_action(0.2, h), atol=1e-10)
        assert family.describe()["support_size"] == family.size

    def test_reference_measure_scaling(self, c5):
        doubled = reference_measure(c5, 2.0)
        assert_allclose(trace_generator(c5, doubled).matrix, c5.generator / 2.0, atol=1e-12)
