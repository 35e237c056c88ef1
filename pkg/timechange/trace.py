"""
Trace Generator
Generator of the time-changed process viewed on its fine support F, and a
family object bundling it with the hitting extension and cached exponentials.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict

import numpy as np
from scipy import linalg

import config
from measures.smooth_measure import FineSupport, MeasureNodes, SmoothMeasure, fine_support
from models.base_model import KernelModel
from potential.operators import resolvent_operator
from utils.errors import ValidationFailed
from utils.linalg import OperatorCache, checked_solve
from utils.logger import get_logger

logger = get_logger("tclab.timechange")

VALIDATION_ALPHAS = (0.5, 1.0, 2.0, 10.0)


@dataclass(frozen=True, eq=False)
class TraceGenerator:
    """
    Attributes:
        support: Fine support F
        nodes: Node points and weights of mu on F
        density: Density driving the clock on F (chain: mu/m; diffusion: node weights)
        matrix: The |F| x |F| generator
        residual: Worst resolvent-consistency residual found by validation
    """

    support: FineSupport
    nodes: MeasureNodes
    density: np.ndarray
    matrix: np.ndarray
    residual: float

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def _chain_trace(model: KernelModel, mu: SmoothMeasure, nodes: MeasureNodes) -> np.ndarray:
    F = np.asarray(nodes.points, dtype=int)
    C = np.setdiff1d(model.points, F)
    Q = model.generator
    schur = Q[np.ix_(F, F)].copy()
    if C.size:
        schur -= Q[np.ix_(F, C)] @ checked_solve(Q[np.ix_(C, C)], Q[np.ix_(C, F)], context="trace Schur complement")
    density = nodes.weights / model.reference_weights[F]
    return schur / density[:, np.newaxis], density


def _conductance_matrix(points: np.ndarray) -> np.ndarray:
    """
    Nearest-neighbour conductances of (1/2) d^2/dx^2 between consecutive
    points, with Dirichlet anchors at 0 and 1.
    """
    gaps = np.diff(np.r_[0.0, points, 1.0])
    conductance = 0.5 / gaps
    S = np.diag(-(conductance[:-1] + conductance[1:]))
    off = conductance[1:-1]
    S += np.diag(off, 1) + np.diag(off, -1)
    return S


def trace_generator(model: KernelModel, mu: SmoothMeasure, validate: bool = True) -> TraceGenerator:
    """
    Trace generator on F.

    Chain: ``diag(a_F)^{-1} (Q_FF - Q_FFc Q_FcFc^{-1} Q_FcF)``. Diffusion: the
    conductance matrix between the nodes of mu scaled by ``diag(1/mu_i)``.
    Validated against ``(alpha I - L)^{-1} = R_alpha`` on F.

    Raises:
        ValidationFailed: If the resolvent consistency residual exceeds config.TRACE_TOL
    """
    support = fine_support(model, mu)
    nodes = mu.nodes(model)
    if len(nodes) == 0:
        return TraceGenerator(support, nodes, np.zeros(0), np.zeros((0, 0)), 0.0)

    if model.backend == "chain":
        L, density = _chain_trace(model, mu, nodes)
    else:
        density = np.asarray(nodes.weights, dtype=float)
        L = _conductance_matrix(np.asarray(nodes.points, dtype=float)) / density[:, np.newaxis]

    residual = 0.0
    if validate:
        identity = np.eye(L.shape[0])
        for alpha in VALIDATION_ALPHAS:
            R = resolvent_operator(model, mu, alpha)
            V = checked_solve(alpha * identity - L, identity, context="trace resolvent")
            scale = max(1.0, float(np.abs(R).max()))
            residual = max(residual, float(np.max(np.abs(V - R))) / scale)
        if residual > config.TRACE_TOL:
            raise ValidationFailed(f"trace generator of {mu.label} disagrees with the resolvent formula "
                                   f"(residual {residual:.3e})")
        logger.debug(f"Trace generator of {mu.label}: |F|={L.shape[0]}, residual {residual:.2e}")

    L.flags.writeable = False
    return TraceGenerator(support, nodes, density, L, residual)


class TimeChangedFamily:
    """
    Operators of the time-changed process for one (model, mu) pair.

    Functions on F are vectors on the node points of mu; ``extend`` maps them
    back to X through the hitting operator. Matrix exponentials are cached per
    t; a cached value is always identical to a recomputation.
    """

    def __init__(self, model: KernelModel, mu: SmoothMeasure, validate: bool = True):
        self.model = model
        self.mu = mu
        self.trace = trace_generator(model, mu, validate)
        self.support = self.trace.support
        self.points = self.trace.nodes.points
        self._exp_cache = OperatorCache()
        self._spectrum = None
        if model.backend == "diffusion" and self.size:
            self._spectrum = self._symmetric_spectrum()

    @property
    def size(self) -> int:
        return self.trace.size

    @property
    def generator(self) -> np.ndarray:
        return self.trace.matrix

    def _symmetric_spectrum(self):
        # D^{1/2} L D^{-1/2} = D^{-1/2} S D^{-1/2} is symmetric tridiagonal
        root = np.sqrt(self.trace.density)
        S = self.trace.matrix * self.trace.density[:, np.newaxis]
        diagonal = np.diag(S) / self.trace.density
        off = np.diag(S, 1) / (root[:-1] * root[1:])
        eigenvalues, vectors = linalg.eigh_tridiagonal(diagonal, off)
        return eigenvalues, vectors, root

    # ------------------------------------------------------------------
    # Functions on F
    # ------------------------------------------------------------------
    def restrict(self, u) -> np.ndarray:
        if not self.size:
            return np.zeros(0)
        return self.model.evaluate(u, self.points)

    def extend(self, values, at=None, alpha: float = 0.0) -> np.ndarray:
        return self.model.hitting_extension(self.points, values, at, alpha)

    def exp_matrix(self, t: float) -> np.ndarray:
        """``exp(t L)`` on F, cached per t."""
        t = float(t)
        if t < 0:
            raise ValueError(f"time must be nonnegative, got {t}")
        cached = self._exp_cache.get(t)
        if cached is not None:
            return cached
        if self._spectrum is not None:
            eigenvalues, vectors, root = self._spectrum
            E = (vectors * np.exp(t * eigenvalues)[np.newaxis, :]) @ vectors.T
            E = E / root[:, np.newaxis] * root[np.newaxis, :]
        else:
            E = linalg.expm(t * self.generator)
        E.flags.writeable = False
        return self._exp_cache.put(t, E)

    def exp_action(self, t: float, h) -> np.ndarray:
        """``exp(t L) h`` on F."""
        h = np.asarray(h, dtype=float)
        if not self.size:
            return np.zeros(0)
        if self._spectrum is not None:
            eigenvalues, vectors, root = self._spectrum
            return (vectors @ (np.exp(t * eigenvalues) * (vectors.T @ (root * h)))) / root
        return self.exp_matrix(t) @ h

    def integrated_action(self, t: float, h) -> np.ndarray:
        """``L^{-1} (exp(t L) - I) h`` on F."""
        h = np.asarray(h, dtype=float)
        if not self.size:
            return np.zeros(0)
        if self._spectrum is not None:
            eigenvalues, vectors, root = self._spectrum
            factor = np.expm1(t * eigenvalues) / eigenvalues
            return (vectors @ (factor * (vectors.T @ (root * h)))) / root
        return checked_solve(self.generator, self.exp_action(t, h) - h, context="integrated semigroup")

    def resolvent_action(self, alpha: float, h) -> np.ndarray:
        """``(alpha I - L)^{-1} h`` on F."""
        h = np.asarray(h, dtype=float)
        if not self.size:
            return np.zeros(0)
        return checked_solve(alpha * np.eye(self.size) - self.generator, h, context="restricted resolvent")

    # ------------------------------------------------------------------
    # Operators on X
    # ------------------------------------------------------------------
    def semigroup(self, t: float, u, at=None) -> np.ndarray:
        """``P_t u`` at the given points; ``P_0`` is the hitting operator P_F."""
        h = self.restrict(u)
        if t > 0:
            h = self.exp_action(t, h)
        return self.extend(h, at)

    def integrated(self, t: float, u, at=None) -> np.ndarray:
        """``S_t u = int_0^t P_s u ds`` at the given points."""
        if t == 0:
            return self.extend(np.zeros(self.size), at)
        return self.extend(self.integrated_action(t, self.restrict(u)), at)

    def describe(self) -> Dict[str, Any]:
        return {"measure": self.mu.label, "support_size": self.size,
                "trace_residual": self.trace.residual}


@lru_cache(maxsize=16)
def family_for(model: KernelModel, mu: SmoothMeasure) -> TimeChangedFamily:
    """Shared TimeChangedFamily for a (model, measure) pair."""
    return TimeChangedFamily(model, mu)
