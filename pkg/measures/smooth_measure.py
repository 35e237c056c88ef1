"""
Smooth Measures
Atoms-plus-density representation of positive measures on X, their node
discretisation, and fine supports.
"""

from dataclasses import dataclass
from typing import Any, Callable, Dict, NamedTuple, Optional, Tuple

import numpy as np

from models.base_model import KernelModel
from models.functions import hat_function
from utils.errors import BadParameters
from utils.logger import get_logger

logger = get_logger("tclab.measures")


class MeasureNodes(NamedTuple):
    """Finite quadrature of a measure: points y_j carrying weights c_j > 0."""

    points: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return self.points.size


@dataclass(frozen=True, eq=False)
class SmoothMeasure:
    """
    Positive measure given by atoms and an optional density w.r.t. Lebesgue.

    On the chain backend the measure is a vector of masses: every state with
    positive mass is an atom and there is no density.

    Attributes:
        atoms: Pairs (location, weight > 0); chain locations are state indices
        density: Vectorized nonnegative function on (0, 1) (diffusion only)
        backend: "chain" or "diffusion"
        label: Name used in reports
    """

    atoms: Tuple[Tuple[float, float], ...] = ()
    density: Optional[Callable[[np.ndarray], np.ndarray]] = None
    backend: str = "diffusion"
    label: str = "mu"

    def __post_init__(self):
        if self.backend not in ("chain", "diffusion"):
            raise BadParameters(f"unknown backend {self.backend!r}")
        atoms = tuple((float(x), float(w)) for x, w in self.atoms)
        for x, w in atoms:
            if not np.isfinite(w) or w <= 0:
                raise BadParameters(f"atom weights must be positive and finite, got {w} at {x}")
            if self.backend == "diffusion" and not 0.0 < x < 1.0:
                raise BadParameters(f"atom at {x} lies outside (0, 1)")
            if self.backend == "chain" and (x < 0 or x != int(x)):
                raise BadParameters(f"chain atoms must sit on state indices, got {x}")
        if self.backend == "chain" and self.density is not None:
            raise BadParameters("chain measures carry their masses as atoms, not as a density")
        object.__setattr__(self, "atoms", atoms)

    # ------------------------------------------------------------------
    # Discretisation
    # ------------------------------------------------------------------
    def nodes(self, model: KernelModel) -> MeasureNodes:
        """
        Node discretisation on the given model.

        Chain: the charged states with their masses. Diffusion: the atoms,
        exactly, plus the grid points where the density is positive with
        trapezoid weights ``h a(y)``.
        """
        self._check_backend(model)
        if self.backend == "chain":
            if not self.atoms:
                return MeasureNodes(np.zeros(0, dtype=int), np.zeros(0))
            points = np.array([int(x) for x, _ in self.atoms])
            if points.max() >= model.size:
                raise BadParameters(f"measure charges state {points.max()} of a {model.size}-state chain")
            weights = np.array([w for _, w in self.atoms])
            order = np.argsort(points)
            return MeasureNodes(points[order], weights[order])

        points = [x for x, _ in self.atoms]
        weights = [w for _, w in self.atoms]
        if self.density is not None:
            a = self.density_on_grid(model)
            charged = a > 0
            points.extend(model.grid[charged])
            weights.extend(model.h * a[charged])
        if not points:
            return MeasureNodes(np.zeros(0), np.zeros(0))

        points = np.asarray(points, dtype=float)
        weights = np.asarray(weights, dtype=float)
        order = np.argsort(points, kind="stable")
        points, weights = points[order], weights[order]
        # merge atoms that coincide with grid points
        keep = np.r_[True, ~np.isclose(np.diff(points), 0.0, rtol=0.0, atol=1e-14)]
        group = np.cumsum(keep) - 1
        merged = np.zeros(int(keep.sum()))
        np.add.at(merged, group, weights)
        return MeasureNodes(points[keep], merged)

    def density_on_grid(self, model) -> np.ndarray:
        if self.density is None:
            return np.zeros(model.size)
        a = np.broadcast_to(np.asarray(self.density(model.grid), dtype=float), model.grid.shape)
        if np.any(a < 0) or not np.all(np.isfinite(a)):
            raise BadParameters("density must be nonnegative and finite")
        return np.array(a)

    def masses(self, model: KernelModel) -> np.ndarray:
        """Chain: full vector of masses per state."""
        if self.backend != "chain":
            raise BadParameters("masses are only defined on the chain backend")
        nodes = self.nodes(model)
        vector = np.zeros(model.size)
        vector[nodes.points] = nodes.weights
        return vector

    def density_wrt(self, model: KernelModel) -> np.ndarray:
        """Chain: the density a = mu / m that drives the additive functional."""
        return self.masses(model) / model.reference_weights

    def scaled(self, factor: float, label: str = None) -> "SmoothMeasure":
        """The measure ``factor * mu``."""
        if not np.isfinite(factor) or factor < 0:
            raise BadParameters(f"scale factor must be nonnegative, got {factor}")
        label = label or f"{factor:g}*{self.label}"
        if factor == 0:
            return SmoothMeasure((), None, self.backend, label)
        density = None
        if self.density is not None:
            base = self.density

            def density(x):
                return factor * np.asarray(base(x), dtype=float)

        atoms = tuple((x, factor * w) for x, w in self.atoms)
        return SmoothMeasure(atoms, density, self.backend, label)

    # ------------------------------------------------------------------
    # Integrals and potentials
    # ------------------------------------------------------------------
    def potential(self, model: KernelModel, u, alpha: float = 0.0, at=None) -> np.ndarray:
        """
        ``G_alpha^mu u(x) = int G_alpha(x, y) u(y) mu(dy)`` at the given points.

        Atoms are summed exactly; the density part uses the trapezoid rule.
        """
        at = model.points if at is None else at
        nodes = self.nodes(model)
        if len(nodes) == 0:
            return np.zeros(np.asarray(at).reshape(-1).shape)
        weighted = model.evaluate(u, nodes.points) * nodes.weights
        return model.kernel(at, nodes.points, alpha) @ weighted

    def total_mass(self, model: KernelModel) -> float:
        return float(self.nodes(model).weights.sum())

    def integrate(self, model: KernelModel, f) -> float:
        """``int f dmu``; f may be a FunctionOnX, values or a callable."""
        nodes = self.nodes(model)
        if len(nodes) == 0:
            return 0.0
        return float(np.dot(model.evaluate(f, nodes.points), nodes.weights))

    def is_zero(self) -> bool:
        return not self.atoms and self.density is None

    def _check_backend(self, model: KernelModel):
        if model.backend != self.backend:
            raise BadParameters(f"{self.backend} measure used on a {model.backend} model")

    def describe(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "backend": self.backend,
            "atoms": [[x, w] for x, w in self.atoms],
            "density": self.density is not None,
        }

    def __repr__(self) -> str:
        return f"<SmoothMeasure {self.label} [{self.backend}] atoms={len(self.atoms)} density={self.density is not None}>"


# ----------------------------------------------------------------------
# Constructors
# ----------------------------------------------------------------------
def chain_measure(masses, label: str = "mu") -> SmoothMeasure:
    """Chain measure from its vector of masses (zero entries are not charged)."""
    masses = np.asarray(masses, dtype=float).reshape(-1)
    if np.any(masses < 0) or not np.all(np.isfinite(masses)):
        raise BadParameters("chain masses must be nonnegative and finite")
    atoms = tuple((float(i), float(w)) for i, w in enumerate(masses) if w > 0)
    return SmoothMeasure(atoms, None, "chain", label)


def chain_measure_from_density(model: KernelModel, density, label: str = "mu") -> SmoothMeasure:
    """Chain measure ``mu = a * m`` from a density a w.r.t. the reference measure."""
    return chain_measure(np.asarray(density, dtype=float) * model.reference_weights, label)


def reference_measure(model: KernelModel, scale: float = 1.0) -> SmoothMeasure:
    """The reference measure m itself (identity time change when scale = 1)."""
    if model.backend == "chain":
        return chain_measure(scale * model.reference_weights, "m" if scale == 1 else f"{scale:g}*m")
    return lebesgue(scale)


def dirac(x: float, weight: float = 1.0, label: str = None) -> SmoothMeasure:
    return SmoothMeasure(((x, weight),), None, "diffusion", label or f"delta_{x:g}")


def lebesgue(scale: float = 1.0) -> SmoothMeasure:
    def density(x):
        return np.full(np.shape(x), float(scale))

    return SmoothMeasure((), density, "diffusion", "Leb" if scale == 1 else f"{scale:g}*Leb")


def indicator_density(a: float, b: float, height: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    if not 0.0 <= a < b <= 1.0:
        raise BadParameters(f"indicator interval [{a}, {b}] must satisfy 0 <= a < b <= 1")

    def density(x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= a) & (x <= b), float(height), 0.0)

    return density


def total_mass(model: KernelModel, mu: SmoothMeasure) -> float:
    return mu.total_mass(model)


def integrate(model: KernelModel, mu: SmoothMeasure, f) -> float:
    return mu.integrate(model, f)


def load_measure(spec: Any, model: KernelModel, label: str = "mu") -> SmoothMeasure:
    """
    Build a measure from its config description.

    Chain: ``{"masses": [...]}``, ``{"density": [...]}`` (w.r.t. m) or ``"reference"``.
    Diffusion: ``{"atoms": [[x, w], ...], "density": "lebesgue" | {"indicator": [a, b],
    "height": c} | {"hat": [center, width]}}`` or ``"lebesgue"``.

    Raises:
        BadParameters: On malformed descriptions
    """
    if spec == "reference":
        measure = reference_measure(model)
        return SmoothMeasure(measure.atoms, measure.density, measure.backend, label)

    if model.backend == "chain":
        if isinstance(spec, dict) and "masses" in spec:
            return chain_measure(spec["masses"], label)
        if isinstance(spec, dict) and "density" in spec:
            return chain_measure_from_density(model, spec["density"], label)
        if isinstance(spec, (list, tuple)):
            return chain_measure(spec, label)
        raise BadParameters(f"cannot build a chain measure from {spec!r}")

    if spec == "lebesgue":
        return SmoothMeasure((), lebesgue().density, "diffusion", label)
    if not isinstance(spec, dict):
        raise BadParameters(f"cannot build a diffusion measure from {spec!r}")

    atoms = tuple((float(x), float(w)) for x, w in spec.get("atoms", []))
    density_spec = spec.get("density")
    density = None
    if density_spec == "lebesgue":
        density = lebesgue(float(spec.get("scale", 1.0))).density
    elif isinstance(density_spec, dict) and "indicator" in density_spec:
        a, b = density_spec["indicator"]
        density = indicator_density(float(a), float(b), float(density_spec.get("height", 1.0)))
    elif isinstance(density_spec, dict) and "hat" in density_spec:
        center, width = density_spec["hat"]
        density = hat_function(float(center), float(width))
    elif density_spec is not None:
        raise BadParameters(f"unknown density preset {density_spec!r}")
    return SmoothMeasure(atoms, density, "diffusion", label)


# ----------------------------------------------------------------------
# Fine support
# ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class FineSupport:
    """
    Fine support F of a smooth measure.

    Attributes:
        points: Node locations of F (chain indices or points of (0, 1))
        labels: Chain state labels of F (empty on the diffusion backend)
        intervals: Closed intervals making up F on the diffusion backend;
            atoms appear as degenerate intervals
        closed: Whether F is closed in X
        backend: "chain" or "diffusion"
    """

    points: np.ndarray
    labels: Tuple[Any, ...] = ()
    intervals: Tuple[Tuple[float, float], ...] = ()
    closed: bool = True
    backend: str = "chain"

    @property
    def size(self) -> int:
        return int(np.asarray(self.points).size)

    def is_empty(self) -> bool:
        return self.size == 0

    def contains(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.backend == "chain":
            return np.isin(x.astype(int), np.asarray(self.points, dtype=int))
        inside = np.zeros(x.shape, dtype=bool)
        for a, b in self.intervals:
            inside |= (x >= a - 1e-14) & (x <= b + 1e-14)
        return inside

    def is_full(self, model: KernelModel) -> bool:
        return bool(np.all(self.contains(model.points)))

    def is_subset_of(self, other: "FineSupport") -> bool:
        return bool(np.all(other.contains(self.points)))

    def __repr__(self) -> str:
        if self.backend == "chain":
            return f"<FineSupport {set(self.labels)}>"
        return f"<FineSupport intervals={list(self.intervals)} closed={self.closed}>"


def fine_support(model: KernelModel, mu: SmoothMeasure) -> FineSupport:
    """
    Fine support of mu.

    Chain: the states with positive mass. Diffusion: the closure of
    {density > 0} on the grid together with the atoms.
    """
    nodes = mu.nodes(model)
    if model.backend == "chain":
        points = np.asarray(nodes.points, dtype=int)
        labels = tuple(model.states[i] for i in points)
        return FineSupport(points, labels, (), True, "chain")

    intervals = []
    if mu.density is not None:
        charged = mu.density_on_grid(model) > 0
        if charged.any():
            edges = np.diff(np.r_[0, charged.astype(int), 0])
            starts = np.flatnonzero(edges == 1)
            stops = np.flatnonzero(edges == -1) - 1
            for start, stop in zip(starts, stops):
                intervals.append((float(model.grid[start]), float(model.grid[stop])))
    intervals.extend((x, x) for x, _ in mu.atoms)
    intervals.sort()
    return FineSupport(np.asarray(nodes.points, dtype=float), (), tuple(intervals), True, "diffusion")
