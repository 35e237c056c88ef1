"""
Tests for smooth measures, fine supports, the Kato check and measure sequences.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from measures.kato import green_potential_of_one, is_green_kato
from measures.sequences import check_hypothesis, hat_functions, load_sequence, make_sequence, tends_to_zero
from measures.smooth_measure import (
    SmoothMeasure,
    chain_measure,
    dirac,
    fine_support,
    load_measure,
    reference_measure,
)
from tests.conftest import C5_M, C5_Q
from models.chain_model import build_chain
from utils.errors import BadParameters

C5 = build_chain(C5_Q, C5_M, name="C5")


class TestSmoothMeasure:
    def test_chain_nodes(self, c5, partial_c5):
        nodes = partial_c5.nodes(c5)
        assert list(nodes.points) == [0, 2, 4]
        assert_allclose(nodes.weights, [1.0, 2.0, 0.5])
        assert_allclose(partial_c5.masses(c5), [1.0, 0.0, 2.0, 0.0, 0.5])

    def test_density_wrt_reference(self, c5, partial_c5):
        assert_allclose(partial_c5.density_wrt(c5), [1.0, 0.0, 2.0, 0.0, 1.0 / 3.0])

    def test_atom_and_grid_merge(self, diffusion):
        # 0.5 lies on the 199-point grid; the atom weight adds to the trapezoid weight
        mu = SmoothMeasure(((0.5, 1.0),), lambda x: np.ones(np.shape(x)), "diffusion", "mixed")
        nodes = mu.nodes(diffusion)
        assert len(nodes) == diffusion.grid_size
        assert_allclose(nodes.weights.sum(), 1.0 + diffusion.grid_size * diffusion.h, rtol=1e-12)

    def test_scaled(self, c5, partial_c5):
        assert_allclose(partial_c5.scaled(2.0).masses(c5), 2.0 * partial_c5.masses(c5))
        assert partial_c5.scaled(0.0).is_zero()

    def test_total_mass_and_integral(self, c5, partial_c5):
        assert partial_c5.total_mass(c5) == pytest.approx(3.5)
        assert partial_c5.integrate(c5, np.arange(5.0)) == pytest.approx(0.0 + 4.0 + 2.0)

    @pytest.mark.parametrize("atoms", [((0.0, 1.0),), ((0.5, -1.0),), ((1.2, 1.0),)])
    def test_invalid_diffusion_atoms(self, atoms):
        with pytest.raises(BadParameters):
            SmoothMeasure(atoms, None, "diffusion")

    def test_backend_mismatch(self, c5, half_atom):
        with pytest.raises(BadParameters):
            half_atom.nodes(c5)

    def test_load_measure(self, c5, diffusion):
        assert_allclose(load_measure({"masses": [1, 0, 2, 0, 0.5]}, c5).masses(c5), [1, 0, 2, 0, 0.5])
        assert_allclose(load_measure("reference", c5).masses(c5), C5_M)
        leb = load_measure("lebesgue", diffusion)
        assert leb.total_mass(diffusion) == pytest.approx(diffusion.grid_size * diffusion.h)
        assert load_measure({"atoms": [[0.25, 2.0]]}, diffusion).atoms == ((0.25, 2.0),)
        with pytest.raises(BadParameters):
            load_measure({"density": "gaussian"}, diffusion)


class TestFineSupport:
    def test_chain_atom(self, c2, atom_c2):
        F = fine_support(c2, atom_c2)
        assert list(F.points) == [0]
        assert F.labels == (1,)
        assert not F.is_full(c2)

    def test_reference_is_full(self, c5):
        assert fine_support(c5, reference_measure(c5)).is_full(c5)

    def test_diffusion_intervals(self, diffusion):
        mu = SmoothMeasure(((0.9, 1.0),), lambda x: (np.asarray(x) < 0.5).astype(float), "diffusion")
        F = fine_support(diffusion, mu)
        assert F.intervals[0][0] == pytest.approx(diffusion.h)
        assert F.intervals[-1] == (0.9, 0.9)
        assert F.contains(np.array([0.25, 0.9, 0.7])).tolist() == [True, True, False]

    def test_subset(self, c5, partial_c5):
        smaller = chain_measure([1.0, 0.0, 0.0, 0.0, 0.0])
        assert fine_support(c5, smaller).is_subset_of(fine_support(c5, partial_c5))
        assert not fine_support(c5, partial_c5).is_subset_of(fine_support(c5, smaller))


class TestKato:
    def test_chain_potential_of_one(self, c2, atom_c2):
        assert_allclose(green_potential_of_one(c2, atom_c2), [2.0 / 3.0, 1.0 / 3.0], atol=1e-14)
        result = is_green_kato(c2, atom_c2)
        assert result.is_kato and result.sup == pytest.approx(2.0 / 3.0)

    def test_lebesgue_potential_closed_form(self, fine_diffusion, leb):
        grid = fine_diffusion.grid
        assert np.max(np.abs(green_potential_of_one(fine_diffusion, leb) - grid * (1.0 - grid))) < 1e-5

    def test_lebesgue_and_dirac_are_kato(self, fine_diffusion, leb, half_atom):
        assert is_green_kato(fine_diffusion, leb).is_kato
        assert is_green_kato(fine_diffusion, half_atom).is_kato

    def test_dirac_helper(self):
        assert dirac(0.3, 2.0).atoms == ((0.3, 2.0),)


class TestSequences:
    def test_shifted_atom_starts_inside(self):
        seq = make_sequence("shifted_atom", {"center": 0.5, "scale": 1.0})
        assert seq.n_min == 3
        assert seq.measure(4).atoms == ((0.75, 1.0),)
        with pytest.raises(BadParameters):
            seq.measure(2)

    def test_monotone_guarantees(self, c5, partial_c5):
        seq = make_sequence("monotone_up", mu_inf=partial_c5, model=c5)
        assert {"monotone", "subset_support", "potential_convergence"} <= seq.guarantees
        assert "full_support" not in seq.guarantees
        full = make_sequence("monotone_down", mu_inf=reference_measure(c5), model=c5)
        assert "full_support" in full.guarantees
        assert_allclose(full.measure(4).masses(c5), 1.25 * np.asarray(C5_M))

    def test_discretized_density_placements(self):
        midpoint = make_sequence("discretized_density", {})
        uniform = make_sequence("discretized_density", {"placement": "uniform"})
        assert [x for x, _ in midpoint.measure(2).atoms] == [0.25, 0.75]
        assert [x for x, _ in uniform.measure(2).atoms] == pytest.approx([1.0 / 3.0, 2.0 / 3.0])

    def test_unknown_kind(self):
        with pytest.raises(BadParameters):
            make_sequence("spiral", {})

    def test_monotone_needs_limit(self):
        with pytest.raises(BadParameters):
            make_sequence("monotone_up")

    def test_load_sequence(self, c5, partial_c5):
        seq = load_sequence({"kind": "constant", "limit": "partial"}, {"partial": partial_c5}, c5)
        assert seq.measure(7) is partial_c5
        with pytest.raises(BadParameters):
            load_sequence({"kind": "constant", "limit": "missing"}, {}, c5)

    def test_constant_hypothesis_has_zero_errors(self, c5, partial_c5):
        report = check_hypothesis(c5, make_sequence("constant", mu_inf=partial_c5, model=c5), 10)
        assert report.passed
        assert not report.table["potential_error"].any()
        assert not report.table["vague_residual"].any()

    def test_shifted_atom_hypothesis(self, diffusion):
        report = check_hypothesis(diffusion, make_sequence("shifted_atom", {}), 32)
        assert report.passed
        assert "witness" in report.note

    def test_hypothesis_needs_two_indices(self, c5, partial_c5):
        with pytest.raises(BadParameters):
            check_hypothesis(c5, make_sequence("constant", mu_inf=partial_c5), 1)

    def test_hat_family(self, c5, diffusion):
        assert sorted(hat_functions(c5)) == ["1_1", "1_2", "1_3", "1_4", "1_5"]
        hats = hat_functions(diffusion, k=3)
        assert hats["hat_2"](np.array([0.5]))[0] == pytest.approx(1.0)

    @pytest.mark.parametrize("errors, expected", [
        ([0.0, 0.0, 0.0], True),
        ([1.0, 0.5, 0.25, 0.1], True),
        ([1.0, 0.5, 0.6, 0.7], False),
        ([0.1, 0.2, 0.2, 0.2], False),
    ])
    def test_tends_to_zero(self, errors, expected):
        assert tends_to_zero(errors) is expected


masses_strategy = st.lists(st.one_of(st.just(0.0), st.floats(min_value=0.1, max_value=10.0)),
                           min_size=5, max_size=5).filter(any)


@settings(max_examples=40, deadline=None)
@given(masses_strategy)
def test_chain_potential_is_positive_and_supported(masses):
    mu = chain_measure(masses)
    potential = green_potential_of_one(C5, mu)
    assert np.all(potential > 0)
    F = fine_support(C5, mu)
    assert sorted(F.points.tolist()) == [i for i, w in enumerate(masses) if w > 0]
