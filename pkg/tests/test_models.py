"""
Tests for the chain and diffusion backends.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import linalg

from models.chain_model import build_chain, dual_model
from models.diffusion_model import DiffusionModel, bm_green, sinh_ratio
from models.functions import FunctionOnX, function_from_spec
from models.loader import load_model
from tests.conftest import C2_M, C2_Q
from utils.errors import NonSubMarkovian, NotIrreducible, NotTransient
from utils.linalg import OperatorCache


class TestChainModel:
    def test_transition_of_constant(self, c2):
        assert_allclose(c2.transition(1.0, [1.0, 1.0]).values, [np.exp(-1.0)] * 2, rtol=1e-13)

    def test_green_kernel(self, c2):
        assert_allclose(c2.kernel(c2.points, c2.points, 0.0), np.array([[2.0, 1.0], [1.0, 2.0]]) / 3.0,
                        atol=1e-14)

    def test_kernel_is_operator_over_m(self, c5):
        resolvent = c5.resolvent_kernel(2.0)
        assert_allclose(resolvent.kernel * c5.reference_weights[np.newaxis, :], resolvent.operator, atol=1e-14)

    def test_structural_residuals(self, c5):
        assert c5.resolvent_identity_residual(0.5, 10.0) < 1e-12
        assert c5.submarkov_excess(2.0) == 0.0
        assert c5.semigroup_residual(0.3, 0.7) < 1e-12

    def test_duality_residual(self, c2):
        assert c2.duality_residual(1.0) < 1e-10

    def test_dual_model(self):
        # m = (1, 1) is excessive here, so the dual is again sub-Markov
        chain = build_chain([[-2.0, 1.0], [0.5, -1.0]], [1.0, 1.0])
        dual = dual_model(chain)
        assert_allclose(dual.generator, [[-2.0, 0.5], [1.0, -1.0]])
        assert chain.duality_residual(0.7) < 1e-12
        assert dual.expected_lifetime().sum() == pytest.approx(chain.expected_lifetime().sum())

    def test_reference_functional(self, c5, diffusion):
        assert c5.reference_functional([1.0, 0.0, 1.0, 0.0, 2.0]) == pytest.approx(5.0)
        # trapezoid rule with the boundary zeros of x(1 - x)
        assert diffusion.reference_functional(lambda x: x * (1.0 - x)) == pytest.approx(1.0 / 6.0, abs=1e-5)

    def test_expected_lifetime(self, c2):
        # (-Q)^{-1} 1 = (1, 1) for C2
        assert_allclose(c2.expected_lifetime(), [1.0, 1.0], atol=1e-14)

    def test_hitting_extension(self, c2):
        assert_allclose(c2.hitting_extension([0], [3.0]), [3.0, 1.5], atol=1e-14)

    def test_hitting_extension_empty_support(self, c5):
        assert not np.any(c5.hitting_extension([], []))

    def test_conservative_generator_is_not_transient(self):
        with pytest.raises(NotTransient):
            build_chain([[-1.0, 1.0], [1.0, -1.0]], [1.0, 1.0])

    def test_negative_rate_rejected(self):
        with pytest.raises(NonSubMarkovian):
            build_chain([[-2.0, -1.0], [1.0, -2.0]], [1.0, 1.0])

    def test_positive_row_sum_rejected(self):
        with pytest.raises(NonSubMarkovian):
            build_chain([[-1.0, 2.0], [1.0, -2.0]], [1.0, 1.0])

    def test_reducible_chain(self):
        Q = [[-1.0, 0.0], [0.0, -1.0]]
        with pytest.raises(NotIrreducible):
            build_chain(Q, [1.0, 1.0])
        assert build_chain(Q, [1.0, 1.0], require_irreducible=False).size == 2

    def test_reference_measure_must_be_positive(self):
        with pytest.raises(ValueError):
            build_chain([[-2.0, 1.0], [1.0, -2.0]], [1.0, 0.0])

    def test_operator_cache_is_bounded(self, monkeypatch):
        monkeypatch.setattr("config.OPERATOR_CACHE_SIZE", 4)
        chain = build_chain(C2_Q, C2_M)
        times = np.linspace(0.1, 3.0, 20)
        for t in times:
            assert_allclose(chain.transition_matrix(t), linalg.expm(t * chain.generator), atol=1e-14)
        for alpha in (0.5, 1.0, 2.0):
            chain.resolvent_kernel(alpha)
        assert len(chain._cache) == 4
        assert ("R", 2.0) in chain._cache and ("P", float(times[0])) not in chain._cache
        assert chain.transition_matrix(1.0) is chain.transition_matrix(1.0)
        assert not chain.transition_matrix(1.0).flags.writeable

    def test_state_labels(self, c5):
        assert c5.states == (1, 2, 3, 4, 5)
        assert c5.index_of("3") == 2


class TestDiffusionModel:
    def test_green_function(self):
        assert_allclose(bm_green(np.array([0.25]), np.array([0.5])), [[0.25]], atol=1e-15)

    def test_green_quadrature_matches_closed_form(self, fine_diffusion):
        assert fine_diffusion.green_quadrature_residual() < 1e-5

    def test_resolvent_kernel_reduces_to_green(self, diffusion):
        assert_allclose(diffusion.resolvent_kernel(0.0), bm_green(diffusion.grid, diffusion.grid), atol=1e-14)

    def test_resolvent_identity_by_trapezoid(self, diffusion):
        assert diffusion.resolvent_identity_residual(1.0, 2.0) < 1e-3

    def test_sine_mode_decays_exactly(self, diffusion):
        grid = diffusion.grid
        moved = diffusion.transition(0.1, np.sin(np.pi * grid)).values
        assert_allclose(moved, np.exp(-0.5 * np.pi ** 2 * 0.1) * np.sin(np.pi * grid), atol=1e-12)

    def test_semigroup_law(self, diffusion):
        assert diffusion.semigroup_residual(0.05, 0.1) < 1e-12

    def test_linear_hitting_extension(self, diffusion):
        x = np.array([0.25, 0.5, 0.75])
        assert_allclose(diffusion.hitting_extension([0.5], [2.0], x), [1.0, 2.0, 1.0], atol=1e-14)

    def test_hyperbolic_hitting_extension(self, diffusion):
        k = np.sqrt(2.0)
        x = np.array([0.2])
        expected = np.sinh(k * 0.2) / np.sinh(k * 0.5)
        assert_allclose(diffusion.hitting_extension([0.5], [1.0], x, alpha=1.0), [expected], rtol=1e-12)
        assert_allclose(sinh_ratio(k, 0.2, 0.5), expected, rtol=1e-14)

    def test_boundary_report(self, diffusion):
        assert diffusion.is_c0(diffusion.grid * (1.0 - diffusion.grid))
        assert not diffusion.is_c0(np.ones(diffusion.grid_size))

    def test_grid_size_validation(self):
        with pytest.raises(ValueError):
            DiffusionModel(2)


class TestFunctionsAndLoader:
    def test_indicator_spec(self, c5):
        assert_allclose(function_from_spec(c5, "indicator:2").values, [0, 1, 0, 0, 0])

    def test_hat_spec_has_evaluator(self, diffusion):
        hat = function_from_spec(diffusion, {"hat": [0.5, 0.25]})
        assert isinstance(hat, FunctionOnX)
        assert_allclose(hat.at(np.array([0.5, 0.625, 0.9])), [1.0, 0.5, 0.0], atol=1e-14)

    def test_unknown_spec(self, c2):
        with pytest.raises(ValueError):
            function_from_spec(c2, "nonsense")

    def test_load_chain(self):
        model = load_model({"backend": "chain", "Q": [[-2, 1], [1, -2]], "m": [1, 1]})
        assert model.backend == "chain" and model.size == 2

    def test_load_diffusion(self):
        assert load_model({"backend": "diffusion", "grid_size": 50}).size == 50

    @pytest.mark.parametrize("block", [
        {"backend": "lattice"},
        {"backend": "chain", "Q": [[-1]]},
        {"backend": "diffusion", "grid": 10},
        [1, 2],
    ])
    def test_bad_model_blocks(self, block):
        with pytest.raises(ValueError):
            load_model(block)


class TestOperatorCache:
    def test_least_recently_used_entry_is_evicted(self):
        cache = OperatorCache(maxsize=2)
        cache.put("a", np.zeros(1))
        cache.put("b", np.ones(1))
        assert cache.get("a") is not None
        cache.put("c", np.full(1, 2.0))
        assert "a" in cache and "c" in cache and "b" not in cache
        assert len(cache) == 2

    def test_first_value_wins(self):
        cache = OperatorCache(maxsize=3)
        first = cache.put("a", np.zeros(1))
        assert cache.put("a", np.ones(1)) is first
        assert cache.get_or_compute("a", lambda: np.ones(1)) is first

    def test_size_must_be_positive(self):
        with pytest.raises(ValueError):
            OperatorCache(maxsize=0)
