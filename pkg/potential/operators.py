"""
Potential Operators
The alpha-potential G_alpha^mu, the time-changed resolvent given by
``R_alpha = (1 + alpha G^mu)^{-1} G^mu``, the hitting operator P_F and phi^A.

Every operator works on the node discretisation of the measure: the values
of u on the nodes determine the result, and the result is extended to any
point x through the kernel (Nystrom extension).
"""

from typing import NamedTuple, Sequence

import numpy as np
import pandas as pd

import config
from measures.smooth_measure import FineSupport, MeasureNodes, SmoothMeasure, fine_support
from models.base_model import KernelModel
from models.functions import FunctionOnX
from utils.linalg import checked_solve, operator_norm
from utils.logger import get_logger

logger = get_logger("tclab.potential")


def evaluation_points(model: KernelModel, mu: SmoothMeasure = None) -> np.ndarray:
    """
    Points on which sup norms are taken: the chain states, or the diffusion
    grid together with the nodes of mu.
    """
    if model.backend == "chain" or mu is None:
        return model.points
    return np.union1d(model.points, mu.nodes(model).points)


def _wrap(model: KernelModel, values, evaluator=None, function_class: str = "C0") -> FunctionOnX:
    return FunctionOnX(values, function_class, evaluator if model.backend == "diffusion" else None)


# ----------------------------------------------------------------------
# Potentials
# ----------------------------------------------------------------------
def potential_matrix(model: KernelModel, mu: SmoothMeasure, alpha: float = 0.0, at=None) -> np.ndarray:
    """Matrix mapping u on the nodes of mu to ``G_alpha^mu u`` at the given points."""
    at = model.points if at is None else at
    nodes = mu.nodes(model)
    if len(nodes) == 0:
        return np.zeros((np.asarray(at).reshape(-1).size, 0))
    return model.kernel(at, nodes.points, alpha) * nodes.weights[np.newaxis, :]


def potential_apply(model: KernelModel, mu: SmoothMeasure, alpha: float, u, at=None) -> FunctionOnX:
    """
    ``G_alpha^mu u(x) = int G_alpha(x, y) u(y) mu(dy)``.

    Atoms are summed exactly; a density contributes by the trapezoid rule.

    Args:
        model: Backend
        mu: G-bounded measure
        alpha: Rate >= 0
        u: Bounded function
        at: Evaluation points (model points by default)

    Returns:
        FunctionOnX (C0 class) with an exact evaluator on the diffusion backend
    """
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    nodes = mu.nodes(model)
    weighted = model.evaluate(u, nodes.points) * nodes.weights if len(nodes) else np.zeros(0)

    def evaluator(x):
        x = np.asarray(x, dtype=float).reshape(-1)
        if weighted.size == 0:
            return np.zeros(x.shape)
        return model.kernel(x, nodes.points, alpha) @ weighted

    at = model.points if at is None else at
    if weighted.size == 0:
        return _wrap(model, np.zeros(np.asarray(at).reshape(-1).size), evaluator)
    return _wrap(model, model.kernel(at, nodes.points, alpha) @ weighted, evaluator)


# ----------------------------------------------------------------------
# Time-changed resolvent
# ----------------------------------------------------------------------
def node_potential(model: KernelModel, nodes: MeasureNodes) -> np.ndarray:
    """``K = [G(y_i, y_j) c_j]``: the Green potential restricted to the nodes."""
    if len(nodes) == 0:
        return np.zeros((0, 0))
    return model.kernel(nodes.points, nodes.points, 0.0) * nodes.weights[np.newaxis, :]


def resolvent_operator(model: KernelModel, mu: SmoothMeasure, alpha: float) -> np.ndarray:
    """
    Matrix of R_alpha on the node set of mu: ``(I + alpha K)^{-1} K``.

    A single node is handled by the explicit rank-one formula.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    K = node_potential(model, mu.nodes(model))
    if alpha == 0 or K.size == 0:
        return K
    if K.shape[0] == 1:
        return K / (1.0 + alpha * K[0, 0])
    return checked_solve(np.eye(K.shape[0]) + alpha * K, K, context=f"resolvent formula at alpha={alpha}")


def resolvent_extension(model: KernelModel, mu: SmoothMeasure, alpha: float, at=None) -> np.ndarray:
    """
    Matrix mapping u on the nodes to ``R_alpha u`` at the given points:
    ``[G(x, y_j) c_j] (I + alpha K)^{-1}``.
    """
    nodes = mu.nodes(model)
    B = potential_matrix(model, mu, 0.0, at)
    if len(nodes) == 0 or alpha == 0:
        return B
    K = node_potential(model, nodes)
    if K.shape[0] == 1:
        return B / (1.0 + alpha * K[0, 0])
    A = np.eye(K.shape[0]) + alpha * K
    return checked_solve(A.T, B.T, context=f"resolvent extension at alpha={alpha}").T


def chain_resolvent_matrix(model: KernelModel, mu: SmoothMeasure, alpha: float) -> np.ndarray:
    """N x N matrix of R_alpha acting on functions on the chain."""
    if model.backend != "chain":
        raise TypeError("chain_resolvent_matrix requires the chain backend")
    nodes = mu.nodes(model)
    R = np.zeros((model.size, model.size))
    if len(nodes):
        R[:, nodes.points] = resolvent_extension(model, mu, alpha)
    return R


def timechanged_resolvent(model: KernelModel, mu: SmoothMeasure, alpha: float, u, at=None) -> FunctionOnX:
    """
    ``R_alpha u``: solve ``(I + alpha G^mu) w = G^mu u``.

    Only the values of u on the nodes enter; when they vanish the result is
    exactly 0 and no system is solved.

    Raises:
        SingularSystem: Never expected (I + alpha G^mu is injective); a bug signal
    """
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    nodes = mu.nodes(model)
    at = model.points if at is None else at
    n_at = np.asarray(at).reshape(-1).size
    u_nodes = model.evaluate(u, nodes.points) if len(nodes) else np.zeros(0)

    if not np.any(u_nodes):
        def zero(x):
            return np.zeros(np.asarray(x, dtype=float).reshape(-1).shape)

        return _wrap(model, np.zeros(n_at), zero)

    K = node_potential(model, nodes)
    if alpha == 0:
        z = u_nodes
    elif K.shape[0] == 1:
        z = u_nodes / (1.0 + alpha * K[0, 0])
    else:
        z = checked_solve(np.eye(K.shape[0]) + alpha * K, u_nodes, context=f"resolvent formula at alpha={alpha}")
    weighted = nodes.weights * z

    def evaluator(x):
        return model.kernel(np.asarray(x, dtype=float).reshape(-1), nodes.points, 0.0) @ weighted

    return _wrap(model, model.kernel(at, nodes.points, 0.0) @ weighted, evaluator)


class ResolventEquationResult(NamedTuple):
    residual: float
    alpha_norm: float
    contraction_ok: bool


def _resolvent_for_norms(model: KernelModel, mu: SmoothMeasure, alpha: float) -> np.ndarray:
    if model.backend == "chain":
        return chain_resolvent_matrix(model, mu, alpha)
    return resolvent_operator(model, mu, alpha)


def resolvent_equation_residual(model: KernelModel, mu: SmoothMeasure, alpha: float,
                                beta: float) -> ResolventEquationResult:
    """
    Operator-norm residual of ``R_a - R_b - (b - a) R_a R_b`` together with
    the contraction bound ``||alpha R_alpha|| <= 1``.
    """
    Ra = _resolvent_for_norms(model, mu, alpha)
    Rb = _resolvent_for_norms(model, mu, beta)
    residual = operator_norm(Ra - Rb - (beta - alpha) * Ra @ Rb)
    alpha_norm = operator_norm(alpha * Ra)
    return ResolventEquationResult(residual, alpha_norm, bool(alpha_norm <= 1.0 + 1e-12))


def markov_completion(model: KernelModel, mu: SmoothMeasure, alpha: float, at=None) -> FunctionOnX:
    """
    Mass the resolvent sends to the cemetery, ``1/alpha - R_alpha 1``.

    Nonnegative; it is what makes the extension of R_alpha to X plus the
    cemetery Markovian.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    ones = timechanged_resolvent(model, mu, alpha, lambda x: np.ones(np.shape(x)), at)
    return FunctionOnX(1.0 / alpha - ones.values, "Bb")


# ----------------------------------------------------------------------
# Hitting operator
# ----------------------------------------------------------------------
def hitting_apply(model: KernelModel, F: FineSupport, u, alpha: float = 0.0, at=None) -> FunctionOnX:
    """
    ``P_F^alpha u(x) = E_x[exp(-alpha sigma_F) u(X_{sigma_F})]``.

    Chain: u on F, and ``(alpha I - Q_cc) h = Q_cF u_F`` off F. Diffusion:
    interpolation between neighbouring points of F with zero boundary values
    (linear at alpha = 0, hyperbolic otherwise).

    Raises:
        SingularSystem: If the complement system cannot be solved
    """
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    values = model.evaluate(u, F.points) if F.size else np.zeros(0)

    def evaluator(x):
        return model.hitting_extension(F.points, values, np.asarray(x, dtype=float).reshape(-1), alpha)

    function_class = getattr(u, "function_class", "C0")
    return _wrap(model, model.hitting_extension(F.points, values, at, alpha), evaluator, function_class)


def phi_A(model: KernelModel, mu: SmoothMeasure) -> FunctionOnX:
    """``phi^A = E_x[exp(-tau_0)] = P_F^1 1``; equals 1 exactly on F."""
    F = fine_support(model, mu)
    return hitting_apply(model, F, lambda x: np.ones(np.shape(x)), alpha=1.0)


# ----------------------------------------------------------------------
# Limits in alpha
# ----------------------------------------------------------------------
class StrongLimitResult(NamedTuple):
    table: pd.DataFrame
    decreasing: bool
    within_envelope: bool


def strong_limit_check(model: KernelModel, mu: SmoothMeasure, u,
                       alpha_grid: Sequence[float] = None) -> StrongLimitResult:
    """
    Errors ``||alpha R_alpha u - P_F u||`` along a geometric alpha grid.

    The envelope C/alpha is fitted from the first points; convergence is
    declared when the last error stays within 10 times it.
    """
    alpha_grid = list(config.LIMIT_ALPHA_GRID if alpha_grid is None else alpha_grid)
    at = evaluation_points(model, mu)
    F = fine_support(model, mu)
    target = hitting_apply(model, F, u, 0.0, at).values

    errors = []
    for alpha in alpha_grid:
        scaled = alpha * timechanged_resolvent(model, mu, alpha, u, at).values
        errors.append(float(np.max(np.abs(scaled - target))) if at.size else 0.0)

    errors = np.asarray(errors)
    head = min(3, len(alpha_grid))
    constant = float(np.max(errors[:head] * np.asarray(alpha_grid[:head])))
    envelope = constant / np.asarray(alpha_grid)
    table = pd.DataFrame({"alpha": alpha_grid, "error": errors, "envelope": envelope})
    decreasing = bool(np.all(np.diff(errors) <= 1e-15))
    within = bool(errors[-1] <= 10.0 * envelope[-1] + config.ZERO_ERROR)
    return StrongLimitResult(table, decreasing, within)


def revuz_recovery(model: KernelModel, mu: SmoothMeasure, u, alpha_grid: Sequence[float]) -> pd.DataFrame:
    """
    Revuz-limit curve ``alpha <m, G_alpha^mu u>`` against ``int u dmu``.
    """
    target = mu.integrate(model, u)
    rows = []
    for alpha in alpha_grid:
        potential = potential_apply(model, mu, alpha, u)
        value = alpha * float(np.dot(model.reference_weights, potential.values))
        error = abs(value - target)
        rows.append({"alpha": alpha, "value": value, "target": target, "abs_error": error,
                     "rel_error": error / abs(target) if target else error})
    return pd.DataFrame(rows, columns=["alpha", "value", "target", "abs_error", "rel_error"])
