"""
End-to-end quantitative gates on the test chains and the killed Brownian
motion.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from lab import ExperimentSpec, fit_slope
from lab.runners import run_potential_convergence, run_semigroup_convergence
from measures.kato import is_green_kato
from measures.sequences import make_sequence
from measures.smooth_measure import chain_measure, lebesgue, reference_measure
from models.chain_model import build_chain
from pathsim.estimators import mc_apotential, mc_fdd, mc_resolvent, mc_semigroup
from potential.checks import cmp_check, kernel_range_check, normality_check
from potential.operators import (
    potential_apply,
    resolvent_equation_residual,
    revuz_recovery,
    strong_limit_check,
    timechanged_resolvent,
)
from timechange.semigroups import exact_fdd, integrated_semigroup, laplace_residual, semigroup_apply
from timechange.trace import trace_generator
from tests.conftest import C5_M, C5_Q, ones, random_chain_masses

C5 = build_chain(C5_Q, C5_M, name="C5")
RATES = [0.0, 0.5, 1.0, 2.0, 10.0]
seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


def random_measure(seed: int):
    masses = random_chain_masses(np.random.default_rng(seed), C5.size)
    masses[masses > 0] += 0.1
    return chain_measure(masses, f"random_{seed}")


def assert_resolvent_equation(mu):
    for alpha in RATES:
        for beta in RATES:
            assert resolvent_equation_residual(C5, mu, alpha, beta).residual < 1e-10


class TestResolventFormula:
    def test_c5_partial(self, partial_c5, reference_c5):
        assert_resolvent_equation(partial_c5)
        assert_resolvent_equation(reference_c5)

    @settings(max_examples=20, deadline=None)
    @given(seeds)
    def test_random_measures(self, seed):
        assert_resolvent_equation(random_measure(seed))


class TestStrongLimit:
    def test_c2_error_closed_form(self, c2, atom_c2):
        result = strong_limit_check(c2, atom_c2, [2.0, -1.0])
        alphas = result.table["alpha"].to_numpy()
        assert_allclose(result.table["error"].to_numpy(), 6.0 / (3.0 + 2.0 * alphas), rtol=0.0, atol=1e-12)
        assert result.table["error"].iloc[-1] / 2.0 < 2e-6
        assert result.decreasing and result.within_envelope

    def test_c2_unit_function(self, c2, atom_c2):
        result = strong_limit_check(c2, atom_c2, ones)
        assert result.table["alpha"].iloc[-1] == 1e6
        assert result.table["error"].iloc[-1] < 2e-6


class TestTraceGenerator:
    def test_c2_exact(self, c2, atom_c2):
        assert_allclose(trace_generator(c2, atom_c2).matrix, [[-1.5]], rtol=0.0, atol=1e-12)

    def test_validation_on_test_measures(self, c2, c5, diffusion, atom_c2, partial_c5, reference_c5,
                                         half_atom, leb):
        for model, mu in ((c2, atom_c2), (c5, partial_c5), (c5, reference_c5),
                          (diffusion, half_atom), (diffusion, leb)):
            assert trace_generator(model, mu).residual <= 1e-9


@pytest.mark.slow
class TestMonteCarloGates:
    PATHS = 100_000
    Z = 4.0
    U = [1.0, 0.0, 2.0, 0.0, -1.0]

    @pytest.mark.parametrize("x", [0, 1, 3])
    def test_semigroup(self, c5, partial_c5, x):
        exact = semigroup_apply(c5, partial_c5, 0.7, self.U).values[x]
        estimate = mc_semigroup(c5, partial_c5, 0.7, self.U, x, n_paths=self.PATHS, seed=10 + x)
        assert abs(estimate.z(exact)) <= self.Z

    def test_both_resolvent_estimators(self, c5, partial_c5):
        exact = timechanged_resolvent(c5, partial_c5, 2.0, ones).values[3]
        both = mc_resolvent(c5, partial_c5, 2.0, ones, 3, n_paths=self.PATHS, seed=20)
        assert abs(both.randomized.z(exact)) <= self.Z
        assert abs(both.functional.z(exact)) <= self.Z

    def test_functional_potential(self, c5, partial_c5):
        exact = potential_apply(c5, partial_c5, 1.0, self.U).values[1]
        estimate = mc_apotential(c5, partial_c5, 1.0, self.U, 1, n_paths=self.PATHS, seed=25)
        assert abs(estimate.z(exact)) <= self.Z

    @pytest.mark.parametrize("times", [[1.0], [0.3, 1.0]])
    def test_fdd(self, c5, partial_c5, reference_c5, times):
        functions = [ones, [1.0, 0.0, 1.0, 0.0, 0.0], ones][: len(times) + 1]
        exact = exact_fdd(c5, reference_c5, partial_c5, times, functions, hitting_start=True)
        estimate = mc_fdd(c5, reference_c5, partial_c5, times, functions, n_paths=self.PATHS, seed=30)
        assert abs(estimate.z(exact)) <= self.Z


def test_revuz_recovery(c5, reference_c5):
    table = revuz_recovery(c5, reference_c5, ones, [1.0, 10.0, 1e2, 1e3, 1e4])
    errors = table["rel_error"].to_numpy()
    assert np.all(np.diff(errors) < 0)
    assert errors[-1] < 1e-3


class TestDiffusionPotential:
    def test_lebesgue_closed_form(self, fine_diffusion, leb):
        grid = fine_diffusion.grid
        values = potential_apply(fine_diffusion, leb, 0.0, ones).values
        assert np.max(np.abs(values - grid * (1.0 - grid))) < 1e-5

    def test_kato(self, fine_diffusion, leb, half_atom):
        assert is_green_kato(fine_diffusion, leb).is_kato
        assert is_green_kato(fine_diffusion, half_atom).is_kato


def g_curve(report):
    rows = report.table[(report.table["test_id"] == "ones") & (report.table["param"] == "G")]
    return rows["n"].to_numpy(), rows["sup_error"].to_numpy()


class TestPotentialConvergenceRates:
    def test_shifted_atom(self, fine_diffusion):
        sequence = make_sequence("shifted_atom", {"center": 0.5}, model=fine_diffusion)
        spec = ExperimentSpec("shifted", fine_diffusion, sequence, "potential", test_functions={"ones": ones},
                              alpha_grid=[1.0], n_max=64)
        ns, errors = g_curve(run_potential_convergence(spec))
        assert ns[0] == 3 and ns[-1] == 64
        assert np.all(errors <= 2.0 / ns + 1e-12)
        assert -1.2 <= fit_slope(ns, errors) <= -0.8

    def test_discretized_lebesgue(self, fine_diffusion):
        sequence = make_sequence("discretized_density", {"placement": "uniform"}, lebesgue(), fine_diffusion)
        spec = ExperimentSpec("discretized", fine_diffusion, sequence, "potential",
                              test_functions={"ones": ones}, alpha_grid=[1.0], n_max=64)
        report = run_potential_convergence(spec)
        ns, errors = g_curve(report)
        assert -1.3 <= fit_slope(ns, errors) <= -0.7
        assert any("placement=uniform" in note and "slope -1" in note for note in report.notes)

    def test_discretized_lebesgue_midpoint_is_second_order(self, fine_diffusion):
        sequence = make_sequence("discretized_density", {"placement": "midpoint"}, lebesgue(), fine_diffusion)
        spec = ExperimentSpec("midpoint", fine_diffusion, sequence, "potential",
                              test_functions={"ones": ones}, alpha_grid=[1.0], n_max=64)
        report = run_potential_convergence(spec)
        ns, errors = g_curve(report)
        assert -2.2 <= fit_slope(ns, errors) <= -1.8
        assert any("placement=midpoint" in note for note in report.notes)


class TestSemigroupConvergence:
    T_GRID = np.linspace(0.0, 5.0, 51)

    def test_monotone_family(self, c2):
        sequence = make_sequence("monotone_up", mu_inf=reference_measure(c2), model=c2)
        spec = ExperimentSpec("monotone", c2, sequence, "semigroup", "monotone", t_grid=self.T_GRID, n_max=64)
        report = run_semigroup_convergence(spec)
        for curve in report.curves().values():
            assert np.all(np.diff(curve.to_numpy()) < 0)
            assert curve.iloc[-1] < 1e-2
        assert report.passed

    def test_constant_family(self, c2):
        sequence = make_sequence("constant", mu_inf=reference_measure(c2), model=c2)
        spec = ExperimentSpec("constant", c2, sequence, "semigroup", "monotone", t_grid=self.T_GRID, n_max=16)
        report = run_semigroup_convergence(spec)
        assert (report.table["sup_error"] == 0.0).all()


class TestDegeneracy:
    @pytest.mark.parametrize("alpha, t", [(0.5, 0.0), (2.0, 0.7), (10.0, 5.0)])
    def test_functions_vanishing_on_support(self, c5, partial_c5, alpha, t):
        u = [0.0, 4.0, 0.0, -3.0, 0.0]
        assert np.max(np.abs(timechanged_resolvent(c5, partial_c5, alpha, u).values)) <= 1e-14
        assert np.max(np.abs(semigroup_apply(c5, partial_c5, t, u).values)) <= 1e-14

    @settings(max_examples=20, deadline=None)
    @given(seeds)
    def test_structure_on_random_measures(self, seed):
        mu = random_measure(seed)
        assert kernel_range_check(C5, mu, RATES[1:])["passed"]
        assert normality_check(C5, mu)["consistent"]


class TestIntegratedSemigroup:
    @pytest.mark.parametrize("alpha", [1.0, 2.0, 5.0])
    def test_laplace_identity(self, c2, c5, atom_c2, partial_c5, alpha):
        assert laplace_residual(c2, atom_c2, alpha, [3.0, -5.0]) < 1e-6
        assert laplace_residual(c5, partial_c5, alpha, [1.0, -1.0, 2.0, 0.0, 0.5]) < 1e-6

    def test_lipschitz_in_time(self, c5, partial_c5):
        u = np.array([1.0, -1.0, 2.0, 0.0, 0.5])
        grid = np.linspace(0.0, 5.0, 26)
        values = [integrated_semigroup(c5, partial_c5, t, u).values for t in grid]
        norm = np.max(np.abs(u))
        for i in range(len(grid)):
            for j in range(i + 1, len(grid)):
                gap = np.max(np.abs(values[j] - values[i]))
                assert gap <= (grid[j] - grid[i]) * norm + 1e-12


def test_complete_maximum_principle(c5, partial_c5):
    report = cmp_check(c5, partial_c5, trials=10_000, rng=np.random.default_rng(11), tol=1e-10)
    assert report["violations"] == 0
    assert report["passed"]
