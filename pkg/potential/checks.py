"""
Structural Checks
Kernel and range of the time-changed resolvent, the range identity, the
complete maximum principle, normality and the Feller-type properties.
"""

from typing import Any, Dict, Sequence

import numpy as np

import config
from measures.smooth_measure import SmoothMeasure, fine_support
from models.base_model import KernelModel
from potential.operators import (
    chain_resolvent_matrix,
    evaluation_points,
    phi_A,
    potential_matrix,
    resolvent_extension,
    timechanged_resolvent,
)
from utils.errors import CounterexampleFound
from utils.linalg import matrix_rank, same_column_space
from utils.logger import get_logger

logger = get_logger("tclab.potential")


def _require_chain(model: KernelModel, name: str):
    if model.backend != "chain":
        raise TypeError(f"{name} requires the chain backend")


def green_potential_matrix(model: KernelModel, mu: SmoothMeasure) -> np.ndarray:
    """N x N matrix of G^mu on the chain: ``G(x, y) mu_y``."""
    _require_chain(model, "green_potential_matrix")
    return model.kernel(model.points, model.points, 0.0) * mu.masses(model)[np.newaxis, :]


def kernel_range_check(model: KernelModel, mu: SmoothMeasure, alpha_list: Sequence[float] = None) -> Dict[str, Any]:
    """
    Kernel and range of R_alpha are alpha-independent.

    Verifies ker(R_alpha) = {u : u|_F = 0} (columns off F vanish exactly and
    the F columns have rank |F|), equal column spaces across alpha_list, and
    injectivity of R_alpha on ran(R_beta).
    """
    _require_chain(model, "kernel_range_check")
    alpha_list = list(config.ALPHA_GRID if alpha_list is None else alpha_list)
    F = fine_support(model, mu)
    off_F = np.setdiff1d(model.points, F.points)

    matrices = [chain_resolvent_matrix(model, mu, a) for a in alpha_list]
    ranks = [matrix_rank(R) for R in matrices]
    off_support_zero = all(not np.any(R[:, off_F]) for R in matrices)
    kernel_ok = off_support_zero and all(r == F.size for r in ranks)
    range_ok = all(same_column_space(matrices[0], R) for R in matrices[1:])
    injective_on_range = all(
        matrix_rank(Ra @ Rb) == matrix_rank(Rb) for Ra in matrices for Rb in matrices
    )
    return {
        "alphas": alpha_list,
        "ranks": ranks,
        "support_size": F.size,
        "kernel_ok": bool(kernel_ok),
        "range_ok": bool(range_ok),
        "injective_on_range": bool(injective_on_range),
        "passed": bool(kernel_ok and range_ok and injective_on_range),
    }


def range_identity_check(model: KernelModel, mu: SmoothMeasure, alpha: float = 1.0) -> Dict[str, Any]:
    """
    Closed ranges of R_alpha, G^mu and P_F coincide, and ``P_F G^mu = G^mu``.
    """
    _require_chain(model, "range_identity_check")
    F = fine_support(model, mu)
    R = chain_resolvent_matrix(model, mu, alpha)
    G = green_potential_matrix(model, mu)
    P = model.hitting_matrix(F.points)
    residual = float(np.max(np.abs(P @ G - G))) if G.size else 0.0
    spaces_equal = same_column_space(R, G) and same_column_space(G, P)
    return {
        "alpha": alpha,
        "rank": matrix_rank(G),
        "spaces_equal": bool(spaces_equal),
        "hitting_fixes_potentials": residual,
        "passed": bool(spaces_equal and residual < 1e-12 * max(1.0, np.abs(G).max())),
    }


def cmp_check(model: KernelModel, mu: SmoothMeasure, trials: int = 10_000, rng=None,
              tol: float = None, raise_on_violation: bool = True) -> Dict[str, Any]:
    """
    Randomized audit of the complete maximum principle for G^mu.

    For random u, v >= 0 and the least admissible c >= 0 (plus a random
    slack) with ``G^mu u <= G^mu v + c`` on {u > 0}, checks the inequality
    everywhere. Also checks ``alpha R_alpha 1 <= 1`` on the alpha grid.

    Raises:
        CounterexampleFound: On a violation (an implementation bug)
    """
    tol = config.CMP_TOL if tol is None else tol
    rng = np.random.default_rng(config.MC_SEED) if rng is None else rng
    nodes = mu.nodes(model)
    at = evaluation_points(model, mu)
    G_at = potential_matrix(model, mu, 0.0, at)
    on_nodes = np.searchsorted(at, nodes.points)

    violations = 0
    worst = 0.0
    k = len(nodes)
    for _ in range(trials if k else 0):
        u = rng.exponential(size=k) * (rng.random(k) < rng.uniform(0.2, 1.0))
        v = rng.exponential(size=k) * (rng.random(k) < rng.uniform(0.2, 1.0))
        gu, gv = G_at @ u, G_at @ v
        positive = u > 0
        if not positive.any():
            continue
        gap = gu[on_nodes[positive]] - gv[on_nodes[positive]]
        c = max(0.0, float(gap.max())) + rng.exponential(0.1) * (rng.random() < 0.5)
        excess = float(np.max(gu - gv - c))
        if excess > tol * max(1.0, float(np.abs(gu).max())):
            violations += 1
            worst = max(worst, excess)

    submarkov = {}
    for alpha in config.ALPHA_GRID:
        values = alpha * timechanged_resolvent(model, mu, alpha, lambda x: np.ones(np.shape(x)), at).values
        submarkov[alpha] = float(values.max()) if values.size else 0.0
    submarkov_ok = all(value <= 1.0 + 1e-12 for value in submarkov.values())

    report = {
        "trials": trials,
        "violations": violations,
        "max_violation": worst,
        "submarkov": submarkov,
        "submarkov_ok": bool(submarkov_ok),
        "passed": bool(violations == 0 and submarkov_ok),
    }
    if violations and raise_on_violation:
        raise CounterexampleFound(f"complete maximum principle violated in {violations} of {trials} trials "
                                  f"(worst excess {worst:.3e})")
    return report


def normality_check(model: KernelModel, mu: SmoothMeasure, alpha: float = 1.0) -> Dict[str, Any]:
    """
    The five equivalent normality statements on the chain:
    F = X, P_F = identity, P_F injective, R_alpha injective, phi^A = 1.
    """
    _require_chain(model, "normality_check")
    F = fine_support(model, mu)
    P = model.hitting_matrix(F.points)
    R = chain_resolvent_matrix(model, mu, alpha)
    phi = phi_A(model, mu).values
    flags = {
        "full_support": F.size == model.size,
        "hitting_identity": bool(np.allclose(P, np.eye(model.size), rtol=0.0, atol=1e-12)),
        "hitting_injective": matrix_rank(P) == model.size,
        "resolvent_injective": matrix_rank(R) == model.size,
        "normal": bool(np.allclose(phi, 1.0, rtol=0.0, atol=config.SUPPORT_TOL)),
    }
    flags = {name: bool(value) for name, value in flags.items()}
    return {**flags, "consistent": len(set(flags.values())) == 1}


def support_consistency(model: KernelModel, mu: SmoothMeasure) -> Dict[str, Any]:
    """
    The fine support of mu agrees with {phi^A = 1}, and G^mu does not see F^c.
    """
    F = fine_support(model, mu)
    at = evaluation_points(model, mu)
    phi = phi_A(model, mu)
    values = phi.values if model.backend == "chain" else phi.at(at)
    recovered = at[np.abs(values - 1.0) <= config.SUPPORT_TOL]
    if model.backend == "chain":
        matches = np.array_equal(np.sort(recovered.astype(int)), np.sort(np.asarray(F.points, dtype=int)))
    else:
        matches = bool(np.all(F.contains(recovered))) and bool(np.all(np.isin(F.points, recovered)))

    outside = ~F.contains(at)
    leakage = 0.0
    if outside.any() and F.size:
        indicator = np.where(outside, 1.0, 0.0)
        G = potential_matrix(model, mu, 0.0, at)
        nodes_at = np.searchsorted(at, mu.nodes(model).points)
        leakage = float(np.max(np.abs(G @ indicator[nodes_at])))
    return {"phi_recovers_support": bool(matches), "potential_leakage": leakage,
            "passed": bool(matches and leakage == 0.0)}


def feller_resolvent_check(model: KernelModel, mu: SmoothMeasure, alpha: float = 1.0, u=None) -> Dict[str, Any]:
    """
    R_alpha maps bounded functions into the C0 class (u = 1 by default).
    """
    u = (lambda x: np.ones(np.shape(x))) if u is None else u
    values = timechanged_resolvent(model, mu, alpha, u).values
    report = model.boundary_report(values)
    report["alpha"] = alpha
    report["passed"] = bool(report["c0"])
    return report


def resolvent_node_norm(model: KernelModel, mu: SmoothMeasure, alpha: float) -> float:
    """Largest value of ``alpha R_alpha 1`` over the evaluation points."""
    at = evaluation_points(model, mu)
    E = resolvent_extension(model, mu, alpha, at)
    return float(alpha * E.sum(axis=1).max()) if E.size else 0.0
