"""
Measure Sequences
Generators of measure sequences mu_n -> mu_inf for convergence experiments,
the vague test family, and the potential-convergence hypothesis check.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, FrozenSet, List, Optional

import numpy as np
import pandas as pd

import config
from measures.kato import green_potential_of_one, is_green_kato
from measures.smooth_measure import SmoothMeasure, fine_support, lebesgue
from models.base_model import KernelModel
from models.functions import hat_function
from utils.errors import BadParameters
from utils.logger import get_logger

logger = get_logger("tclab.measures")

SEQUENCE_KINDS = ("shifted_atom", "discretized_density", "monotone_up", "monotone_down", "constant")

# observed order of the potential error, by discretized_density placement
PLACEMENT_ORDERS = {"midpoint": 2, "uniform": 1}

GUARANTEES = ("potential_convergence", "monotone", "subset_support", "common_support", "full_support")


@dataclass(frozen=True, eq=False)
class MeasureSequence:
    """
    A sequence (mu_n) together with its limit and the hypotheses it guarantees.

    Attributes:
        kind: Generator kind
        params: Generator parameters
        limit: Limit measure mu_inf
        guarantees: Hypotheses the generator guarantees by construction
        n_min: First admissible index
        generator: n -> mu_n
    """

    kind: str
    params: Dict[str, Any]
    limit: SmoothMeasure
    guarantees: FrozenSet[str]
    n_min: int
    generator: Callable[[int], SmoothMeasure] = field(repr=False)

    def measure(self, n: int) -> SmoothMeasure:
        if n < self.n_min:
            raise BadParameters(f"{self.kind} sequence starts at n={self.n_min}, got n={n}")
        return self.generator(int(n))

    def indices(self, n_max: int, n_min: int = None) -> List[int]:
        start = max(self.n_min, n_min if n_min is not None else config.N_MIN)
        return list(range(start, int(n_max) + 1))

    def guarantees_all(self, required) -> bool:
        return set(required) <= self.guarantees

    def describe(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "params": dict(self.params),
            "limit": self.limit.describe(),
            "guarantees": sorted(self.guarantees),
            "n_min": self.n_min,
        }


def _limit_is_full(model: Optional[KernelModel], limit: SmoothMeasure) -> bool:
    if model is None:
        return False
    return fine_support(model, limit).is_full(model)


def make_sequence(kind: str, params: Dict[str, Any] = None, mu_inf: SmoothMeasure = None,
                  model: KernelModel = None) -> MeasureSequence:
    """
    Build a measure sequence.

    Kinds:
        shifted_atom: ``weight * delta_{center + scale/n}`` -> ``weight * delta_center``
            (diffusion; params center=0.5, scale=1, weight=1)
        discretized_density: n atoms at midpoints ``(k - 1/2)/n`` (placement
            "midpoint") or at ``k/(n + 1)`` (placement "uniform") carrying
            ``density(y_k)/n`` each -> the density (diffusion; Lebesgue by default)
            midpoint atoms are a midpoint rule and converge at O(n^-2); uniform
            atoms leave an O(1/n) mass defect near the boundary
        monotone_up: ``(1 - 1/n) mu_inf``
        monotone_down: ``(1 + 1/n) mu_inf``
        constant: ``mu_inf``

    Args:
        kind: One of SEQUENCE_KINDS
        params: Kind-specific parameters
        mu_inf: Limit measure (required for the monotone and constant kinds)
        model: Backend, used to declare the full_support guarantee

    Returns:
        MeasureSequence

    Raises:
        BadParameters: On unknown kinds or invalid parameters
    """
    params = dict(params or {})

    if kind == "shifted_atom":
        center = float(params.get("center", 0.5))
        scale = float(params.get("scale", 1.0))
        weight = float(params.get("weight", 1.0))
        if not 0.0 < center < 1.0:
            raise BadParameters(f"shifted_atom center {center} must lie in (0, 1)")
        if weight <= 0 or scale == 0:
            raise BadParameters("shifted_atom needs weight > 0 and scale != 0")
        # first n with the atom strictly inside (0, 1)
        room = (1.0 - center) if scale > 0 else center
        n_min = max(1, int(np.floor(abs(scale) / room)) + 1)
        while not 0.0 < center + scale / n_min < 1.0:
            n_min += 1
        limit = SmoothMeasure(((center, weight),), None, "diffusion", f"delta_{center:g}")

        def generator(n):
            x = center + scale / n
            if not 0.0 < x < 1.0:
                raise BadParameters(f"shifted atom at {x} drifted outside (0, 1)")
            return SmoothMeasure(((x, weight),), None, "diffusion", f"delta_{x:g}")

        guarantees = {"potential_convergence"}
        params = {"center": center, "scale": scale, "weight": weight}

    elif kind == "discretized_density":
        placement = params.get("placement", "midpoint")
        if placement not in PLACEMENT_ORDERS:
            raise BadParameters(f"unknown placement {placement!r}")
        limit = mu_inf if mu_inf is not None else lebesgue()
        if limit.backend != "diffusion" or limit.atoms or limit.density is None:
            raise BadParameters("discretized_density needs a diffusion limit given by a density")
        density = limit.density
        n_min = 1

        def generator(n):
            k = np.arange(1, n + 1)
            locations = (k - 0.5) / n if placement == "midpoint" else k / (n + 1.0)
            masses = np.asarray(density(locations), dtype=float) / n
            atoms = tuple((float(x), float(w)) for x, w in zip(locations, masses) if w > 0)
            return SmoothMeasure(atoms, None, "diffusion", f"{limit.label}_{n}")

        guarantees = {"potential_convergence"}
        params = {"placement": placement}

    elif kind in ("monotone_up", "monotone_down", "constant"):
        if mu_inf is None:
            raise BadParameters(f"{kind} sequences need a limit measure")
        limit = mu_inf
        if kind == "monotone_up":
            n_min = 2

            def generator(n):
                return limit.scaled(1.0 - 1.0 / n, f"{limit.label}*(1-1/{n})")

        elif kind == "monotone_down":
            n_min = 1

            def generator(n):
                return limit.scaled(1.0 + 1.0 / n, f"{limit.label}*(1+1/{n})")

        else:
            n_min = 1

            def generator(n):
                return limit

        guarantees = {"potential_convergence", "monotone", "subset_support", "common_support"}
        if _limit_is_full(model, limit):
            guarantees.add("full_support")

    else:
        raise BadParameters(f"unknown sequence kind {kind!r}; expected one of {SEQUENCE_KINDS}")

    if model is not None and model.backend != limit.backend:
        raise BadParameters(f"{kind} sequence lives on the {limit.backend} backend, model is {model.backend}")

    return MeasureSequence(kind, params, limit, frozenset(guarantees), n_min, generator)


def load_sequence(spec: Dict[str, Any], measures: Dict[str, SmoothMeasure], model: KernelModel) -> MeasureSequence:
    """Build a sequence from ``{"kind": ..., "limit": <measure name>, "params": {...}}``."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise BadParameters(f"sequence description needs a 'kind': {spec!r}")
    limit = None
    if spec.get("limit") is not None:
        if spec["limit"] not in measures:
            raise BadParameters(f"sequence limit {spec['limit']!r} is not a defined measure")
        limit = measures[spec["limit"]]
    return make_sequence(spec["kind"], spec.get("params"), limit, model)


def hat_functions(model: KernelModel, k: int = 9) -> Dict[str, Callable]:
    """
    Fixed vague test family.

    Diffusion: k tents centred at ``j/(k+1)`` with half-width ``1/(k+1)``.
    Chain: the indicator of every state (continuous with compact support on a
    finite X).
    """
    if model.backend == "chain":
        family = {}
        for i, state in enumerate(model.states):
            values = np.zeros(model.size)
            values[i] = 1.0
            family[f"1_{state}"] = values
        return family
    width = 1.0 / (k + 1)
    return {f"hat_{j}": hat_function(j * width, width) for j in range(1, k + 1)}


def placement_note(sequence: MeasureSequence) -> Optional[str]:
    """Report note naming the placement of a discretized_density sequence and its error order."""
    if sequence.kind != "discretized_density":
        return None
    placement = sequence.params.get("placement", "midpoint")
    order = PLACEMENT_ORDERS[placement]
    if order == 1:
        return (f"placement={placement}: atoms at k/(n+1), first-order O(1/n) error; "
                "this placement carries the slope -1 rate")
    return (f"placement={placement}: atoms at (k-1/2)/n, a midpoint rule with O(n^-{order}) error; "
            "expect a slope near -2; the slope -1 rate needs placement=uniform")


def tends_to_zero(errors, zero: float = None) -> bool:
    """
    Witness that a residual sequence tends to 0: identically zero, or
    non-increasing over its tail and ending below its first value.
    """
    zero = config.ZERO_ERROR if zero is None else zero
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0 or np.all(errors <= zero):
        return True
    tail = errors[-config.VERDICT_TAIL:]
    return bool(np.all(np.diff(tail) <= zero) and errors[-1] < errors[0])


@dataclass
class HypothesisReport:
    """Outcome of the potential-convergence hypothesis check."""

    table: pd.DataFrame
    vague_ok: bool
    potential_ok: bool
    kato_ok: bool
    note: str = "vague convergence is witnessed on a finite test family, not proven"

    @property
    def passed(self) -> bool:
        return self.vague_ok and self.potential_ok and self.kato_ok

    def summary(self) -> Dict[str, Any]:
        return {"vague_ok": self.vague_ok, "potential_ok": self.potential_ok,
                "kato_ok": self.kato_ok, "passed": self.passed, "note": self.note}


def check_hypothesis(model: KernelModel, seq: MeasureSequence, n_max: int,
                     test_functions: Dict[str, Any] = None, n_min: int = None) -> HypothesisReport:
    """
    Check ``mu_n -> mu_inf`` vaguely and ``G^{mu_n} 1 -> G^{mu_inf} 1`` uniformly.

    Args:
        model: Backend
        seq: Measure sequence
        n_max: Largest index (>= 2)
        test_functions: Vague test family (hat_functions by default)
        n_min: Smallest index (sequence default otherwise)

    Returns:
        HypothesisReport with one row per n: vague residual (max over the
        family), potential sup error and the Kato flag of mu_n
    """
    if n_max < 2:
        raise BadParameters(f"n_max must be >= 2, got {n_max}")
    family = test_functions if test_functions is not None else hat_functions(model)
    limit_integrals = {name: seq.limit.integrate(model, f) for name, f in family.items()}
    limit_potential = green_potential_of_one(model, seq.limit)

    rows = []
    for n in seq.indices(n_max, n_min):
        mu_n = seq.measure(n)
        vague = max((abs(mu_n.integrate(model, f) - limit_integrals[name]) for name, f in family.items()),
                    default=0.0)
        potential = float(np.max(np.abs(green_potential_of_one(model, mu_n) - limit_potential)))
        kato = is_green_kato(model, mu_n).is_kato
        rows.append({"n": n, "vague_residual": vague, "potential_error": potential, "kato": kato})

    table = pd.DataFrame(rows, columns=["n", "vague_residual", "potential_error", "kato"])
    # quadrature of the tents oscillates with n; judge the tail supremum instead
    vague_envelope = np.maximum.accumulate(table["vague_residual"].to_numpy()[::-1])[::-1]
    report = HypothesisReport(
        table=table,
        vague_ok=tends_to_zero(vague_envelope),
        potential_ok=tends_to_zero(table["potential_error"].to_numpy()),
        kato_ok=bool(table["kato"].all()) and is_green_kato(model, seq.limit).is_kato,
    )
    logger.debug(f"Hypothesis check for {seq.kind}: {report.summary()}")
    return report


# Example usage
if __name__ == "__main__":
    from models.diffusion_model import DiffusionModel

    print("=" * 60)
    print("🧪 Measure Sequence Test")
    print("=" * 60)

    model = DiffusionModel(1000)
    seq = make_sequence("shifted_atom", {"center": 0.5}, model=model)
    print(f"\n✅ shifted_atom starts at n={seq.n_min}; mu_10 = {seq.measure(10).atoms}")
    report = check_hypothesis(model, seq, 16)
    print(report.table.tail())
    print(f"📊 {report.summary()}")

    print("\n✅ Measure sequence test completed!")
