"""
Time-Changed Semigroups
P_t, the restricted semigroup and resolvent on F, the integrated semigroup
S_t, membership in the generator relation, heat and evolution solutions and
exact finite-dimensional distributions.
"""

from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import integrate

import config
from measures.sequences import hat_functions
from measures.smooth_measure import SmoothMeasure
from models.base_model import KernelModel
from models.functions import FunctionOnX
from potential.operators import evaluation_points, strong_limit_check, timechanged_resolvent
from timechange.trace import family_for
from utils.errors import BadParameters, ValidationFailed
from utils.logger import get_logger

logger = get_logger("tclab.timechange")

# P_0 is the hitting operator P_F (the strong limit as t -> 0), not the identity.
ZERO_TIME_IS_HITTING = True


def _function(model: KernelModel, family, values_F: np.ndarray) -> FunctionOnX:
    def evaluator(x):
        return family.extend(values_F, np.asarray(x, dtype=float).reshape(-1))

    return model.wrap(family.extend(values_F), "C0", evaluator if model.backend == "diffusion" else None)


def _check_time(t: float):
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")


# ----------------------------------------------------------------------
# Semigroups on X and on F
# ----------------------------------------------------------------------
def semigroup_apply(model: KernelModel, mu: SmoothMeasure, t: float, u) -> FunctionOnX:
    """
    ``P_t u``: hitting extension of ``exp(t L) (u|_F)``.

    Only u on F enters. At t = 0 the result is ``P_F u`` (see ZERO_TIME_IS_HITTING).
    """
    _check_time(t)
    family = family_for(model, mu)
    h = family.restrict(u)
    return _function(model, family, family.exp_action(t, h) if t > 0 else h)


def restricted_semigroup(model: KernelModel, mu: SmoothMeasure, t: float, h) -> np.ndarray:
    """``T_t h = exp(t L) h`` for h given on the nodes of F."""
    _check_time(t)
    family = family_for(model, mu)
    h = np.asarray(h, dtype=float).reshape(-1)
    if h.size != family.size:
        raise ValueError(f"h has {h.size} values, F has {family.size} points")
    return family.exp_action(t, h) if t > 0 else h.copy()


def restricted_resolvent(model: KernelModel, mu: SmoothMeasure, alpha: float, h) -> np.ndarray:
    """``V_alpha h = (alpha I - L)^{-1} h`` on F."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    family = family_for(model, mu)
    h = np.asarray(h, dtype=float).reshape(-1)
    if h.size != family.size:
        raise ValueError(f"h has {h.size} values, F has {family.size} points")
    return family.resolvent_action(alpha, h)


def integrated_semigroup(model: KernelModel, mu: SmoothMeasure, t: float, u) -> FunctionOnX:
    """``S_t u = int_0^t P_s u ds`` in closed form; ``S_0 = 0``."""
    _check_time(t)
    family = family_for(model, mu)
    if t == 0:
        return _function(model, family, np.zeros(family.size))
    return _function(model, family, family.integrated_action(t, family.restrict(u)))


def semigroup_law_residual(model: KernelModel, mu: SmoothMeasure, t: float, s: float) -> float:
    """``max |exp((t+s) L) - exp(t L) exp(s L)|`` on F."""
    family = family_for(model, mu)
    if not family.size:
        return 0.0
    return float(np.max(np.abs(family.exp_matrix(t + s) - family.exp_matrix(t) @ family.exp_matrix(s))))


def trace_submarkov_excess(model: KernelModel, mu: SmoothMeasure, times: Sequence[float]) -> float:
    """Worst negativity or row-sum excess of ``exp(t L)`` over the given times."""
    family = family_for(model, mu)
    worst = 0.0
    for t in times:
        if not family.size:
            break
        E = family.exp_matrix(t)
        worst = max(worst, -float(E.min()), float(E.sum(axis=1).max()) - 1.0)
    return worst


def laplace_residual(model: KernelModel, mu: SmoothMeasure, alpha: float, u,
                     tol: float = None, raise_on_failure: bool = True) -> float:
    """
    Residual of ``R_alpha u = alpha int_0^inf exp(-alpha t) S_t u dt`` on F.

    The integral is truncated at T with ``exp(-alpha T) = config.LAPLACE_TAIL``.

    Raises:
        ValidationFailed: If the residual exceeds tol (config.LAPLACE_TOL)
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    tol = config.LAPLACE_TOL if tol is None else tol
    family = family_for(model, mu)
    if not family.size:
        return 0.0
    h = family.restrict(u)
    horizon = -np.log(config.LAPLACE_TAIL) / alpha

    def integrand(t):
        return alpha * np.exp(-alpha * t) * family.integrated_action(t, h)

    transform, _ = integrate.quad_vec(integrand, 0.0, horizon, epsabs=1e-13, epsrel=1e-11)
    target = timechanged_resolvent(model, mu, alpha, u, family.points).values
    residual = float(np.max(np.abs(transform - target)))
    logger.debug(f"Laplace residual at alpha={alpha}: {residual:.2e}")
    if raise_on_failure and residual > tol:
        raise ValidationFailed(f"Laplace identity residual {residual:.3e} exceeds {tol:g} at alpha={alpha}")
    return residual


# ----------------------------------------------------------------------
# Generator relation
# ----------------------------------------------------------------------
def relation_residual(model: KernelModel, mu: SmoothMeasure, alpha: float, u, w) -> float:
    """``||R_alpha(w + alpha u) - u||`` over the evaluation points."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    at = evaluation_points(model, mu)

    def shifted(x):
        return model.evaluate(w, x) + alpha * model.evaluate(u, x)

    image = timechanged_resolvent(model, mu, alpha, shifted, at).values
    return float(np.max(np.abs(image - model.evaluate(u, at)))) if at.size else 0.0


def relation_membership(model: KernelModel, mu: SmoothMeasure, alpha: float, u, w, tol: float = None) -> bool:
    """
    Membership of (u, w) in the generator relation: ``R_alpha(w + alpha u) = u``.

    The relation is multivalued when F is not all of X; only this
    resolvent-characterised test is provided.
    """
    tol = config.MEMBERSHIP_TOL if tol is None else tol
    return relation_residual(model, mu, alpha, u, w) <= tol


def _central_difference(f: Callable[[float], np.ndarray], t: float, step: float) -> np.ndarray:
    return (f(t + step) - f(t - step)) / (2.0 * step)


def _richardson(f: Callable[[float], np.ndarray], t: float, step: float) -> np.ndarray:
    coarse = _central_difference(f, t, step)
    fine = _central_difference(f, t, step / 2.0)
    return (4.0 * fine - coarse) / 3.0


def evolution_membership_check(model: KernelModel, mu: SmoothMeasure, v, times: Sequence[float],
                               alpha: float = 1.0, step: float = None, tol: float = None) -> pd.DataFrame:
    """
    ``u(t) = S_t v`` against ``v - d/dt S_t v`` in the generator relation.

    The derivative is a central difference; a Richardson step is taken when
    the plain difference misses the tolerance. Times must exceed the step.

    Returns:
        DataFrame with columns t, residual, method, member
    """
    step = config.FD_STEP if step is None else step
    tol = config.FD_TOL if tol is None else tol
    family = family_for(model, mu)
    rows = []
    for t in times:
        if t <= step:
            raise BadParameters(f"evolution check needs t > {step}, got {t}")
        u_t = integrated_semigroup(model, mu, t, v)

        def path(s, x):
            return family.integrated(s, v, x)

        def make_w(differentiate):
            def w(x):
                x = np.asarray(x).reshape(-1)
                return model.evaluate(v, x) - differentiate(lambda s: path(s, x), t, step)
            return w

        residual = relation_residual(model, mu, alpha, u_t, make_w(_central_difference))
        method = "central"
        if residual > tol:
            residual = relation_residual(model, mu, alpha, u_t, make_w(_richardson))
            method = "richardson"
        rows.append({"t": float(t), "residual": residual, "method": method, "member": residual <= tol})
    return pd.DataFrame(rows, columns=["t", "residual", "method", "member"])


# ----------------------------------------------------------------------
# Heat and evolution equations
# ----------------------------------------------------------------------
def heat_solution(model: KernelModel, mu: SmoothMeasure, v, t: float) -> FunctionOnX:
    """``u(t) = P_t v``; ``u(0+) = P_F v``."""
    return semigroup_apply(model, mu, t, v)


def evolution_solution(model: KernelModel, mu: SmoothMeasure, v, t: float) -> FunctionOnX:
    """``u(t) = S_t v`` with ``u(0) = 0``."""
    return integrated_semigroup(model, mu, t, v)


def solution_diagnostics(model: KernelModel, mu: SmoothMeasure, v, times: Sequence[float],
                         kind: str = "heat", step: float = None, tol: float = None) -> pd.DataFrame:
    """
    Finite-difference residual of the heat (``u' = L u``) or evolution
    (``u' = L u + v``) equation on F at the given times.

    Returns:
        DataFrame with columns t, residual, method
    """
    if kind not in ("heat", "evolution"):
        raise BadParameters(f"kind must be 'heat' or 'evolution', got {kind!r}")
    step = config.FD_STEP if step is None else step
    tol = config.FD_TOL if tol is None else tol
    family = family_for(model, mu)
    h = family.restrict(v)
    L = family.generator
    if kind == "heat":
        def path(s):
            return family.exp_action(s, h)

        def rhs(s):
            return L @ path(s)
    else:
        def path(s):
            return family.integrated_action(s, h)

        def rhs(s):
            return L @ path(s) + h

    rows = []
    for t in times:
        if t <= step:
            raise BadParameters(f"diagnostics need t > {step}, got {t}")
        if not family.size:
            rows.append({"t": float(t), "residual": 0.0, "method": "central"})
            continue
        residual = float(np.max(np.abs(_central_difference(path, t, step) - rhs(t))))
        method = "central"
        if residual > tol:
            residual = float(np.max(np.abs(_richardson(path, t, step) - rhs(t))))
            method = "richardson"
        rows.append({"t": float(t), "residual": residual, "method": method})
    return pd.DataFrame(rows, columns=["t", "residual", "method"])


def mild_solution(model: KernelModel, mu: SmoothMeasure, v_F, t: float,
                  forcing: Optional[Callable[[float], np.ndarray]] = None) -> np.ndarray:
    """
    Mild solution of ``u' = L u + f`` on F with ``u(0) = v_F``:
    ``T_t v_F + int_0^t T_{t-s} f(s) ds``.
    """
    _check_time(t)
    family = family_for(model, mu)
    v_F = np.asarray(v_F, dtype=float).reshape(-1)
    if v_F.size != family.size:
        raise ValueError(f"v_F has {v_F.size} values, F has {family.size} points")
    result = family.exp_action(t, v_F) if t > 0 else v_F.copy()
    if forcing is None or t == 0 or not family.size:
        return result

    def integrand(s):
        return family.exp_action(t - s, np.asarray(forcing(s), dtype=float))

    duhamel, _ = integrate.quad_vec(integrand, 0.0, t, epsabs=1e-13, epsrel=1e-11)
    return result + duhamel


# ----------------------------------------------------------------------
# Finite-dimensional distributions
# ----------------------------------------------------------------------
def exact_fdd(model: KernelModel, mu_init: SmoothMeasure, mu: SmoothMeasure, times: Sequence[float],
              functions: Sequence[Any], hitting_start: bool = False) -> float:
    """
    ``int u_0 P_{t_1}(u_1 P_{t_2 - t_1}(... u_{k-1} P_{t_k - t_{k-1}} u_k)) dmu_init``.

    With ``hitting_start`` the integrand is first mapped through P_F, which
    is the law of the time-changed process started from X at its first
    visit to F (the Monte Carlo convention).

    Args:
        model: Backend
        mu_init: Initial measure (a point mass gives the value at a point)
        mu: Time-change measure
        times: Increasing times t_1 < ... < t_k
        functions: u_0, ..., u_k
        hitting_start: Apply P_F before integrating against mu_init
    """
    times = [float(t) for t in times]
    if not times:
        raise BadParameters("exact_fdd needs at least one time")
    if len(functions) != len(times) + 1:
        raise BadParameters(f"need {len(times) + 1} functions for {len(times)} times, got {len(functions)}")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise BadParameters(f"times must be nonnegative and strictly increasing: {times}")

    family = family_for(model, mu)
    previous = [0.0] + times[:-1]
    last = functions[-1]

    def current(x):
        return model.evaluate(last, x)

    for j in range(len(times), 0, -1):
        dt = times[j - 1] - previous[j - 1]
        h = current(family.points) if family.size else np.zeros(0)
        values_F = family.exp_action(dt, h) if dt > 0 else h
        current = _product(model, family, functions[j - 1], values_F)

    if hitting_start:
        anchored = current(family.points) if family.size else np.zeros(0)

        def current(x):  # noqa: F811
            return family.extend(anchored, x)

    return float(mu_init.integrate(model, current))


def _product(model: KernelModel, family, u, values_F: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    def g(x):
        return model.evaluate(u, x) * family.extend(values_F, x)

    return g


# ----------------------------------------------------------------------
# Feller-type properties
# ----------------------------------------------------------------------
def _basis(model: KernelModel, basis) -> Dict[str, Any]:
    return dict(hat_functions(model) if basis is None else basis)


def substitute_feller_check(model: KernelModel, mu: SmoothMeasure, t_grid: Sequence[float] = None,
                            basis: Dict[str, Any] = None, off_range=None) -> Dict[str, Any]:
    """
    C0 -> C0 mapping, strong continuity on ``P_F(C0)`` and its failure off it.

    Strong continuity is measured by ``sup_u ||P_t P_F u - P_F u||`` over the
    basis as t decreases, with the log-log slope of the last points. For
    ``off_range`` (1 by default), ``||P_t u - u||`` tends to
    ``||P_F u - u||``, which is positive when u is not in ``P_F(C0)``.
    """
    t_grid = sorted((10.0 ** -k for k in range(1, 7)) if t_grid is None else t_grid, reverse=True)
    basis = _basis(model, basis)
    family = family_for(model, mu)
    at = evaluation_points(model, mu)

    c0_ok = True
    errors = []
    for t in t_grid:
        worst = 0.0
        for u in basis.values():
            moved = semigroup_apply(model, mu, t, u)
            c0_ok = c0_ok and model.is_c0(moved.values)
            start = family.extend(family.restrict(u), at)
            worst = max(worst, float(np.max(np.abs(family.semigroup(t, u, at) - start))) if at.size else 0.0)
        errors.append(worst)

    errors = np.asarray(errors)
    positive = errors > 0
    slope = float("nan")
    if positive.sum() >= 2:
        slope = float(np.polyfit(np.log(np.asarray(t_grid)[positive]), np.log(errors[positive]), 1)[0])
    continuity_ok = bool(errors[-1] < errors[0] or np.all(errors <= config.ZERO_ERROR))

    u = (lambda x: np.ones(np.shape(x))) if off_range is None else off_range
    target = model.evaluate(u, at)
    gap = float(np.max(np.abs(family.extend(family.restrict(u), at) - target))) if at.size else 0.0
    distance = float(np.max(np.abs(family.semigroup(t_grid[-1], u, at) - target))) if at.size else 0.0

    return {
        "c0_ok": bool(c0_ok),
        "continuity": pd.DataFrame({"t": t_grid, "error": errors}),
        "continuity_ok": continuity_ok,
        "rate": slope,
        "near_linear": bool(np.isfinite(slope) and 0.8 <= slope <= 1.2),
        "off_range_gap": gap,
        "off_range_distance": distance,
        "strong_continuity_fails_off_range": bool(gap > config.SUPPORT_TOL and distance > 0.5 * gap),
    }


def feller_full_check(model: KernelModel, mu: SmoothMeasure, t: float = 1e-4,
                      basis: Dict[str, Any] = None) -> Dict[str, Any]:
    """
    Feller property when F = X: ``alpha R_alpha u -> u`` uniformly along
    the limit alpha grid and ``P_t u -> u`` as t -> 0. On the chain the
    trace generator is also compared with ``diag(m/mu) Q``.

    Raises:
        BadParameters: If mu does not have full fine support
    """
    family = family_for(model, mu)
    if not family.support.is_full(model):
        raise BadParameters(f"{mu.label} does not charge all of X")
    basis = _basis(model, basis)
    at = evaluation_points(model, mu)

    resolvent_ok = True
    semigroup_error = 0.0
    for u in basis.values():
        limit = strong_limit_check(model, mu, u)
        resolvent_ok = resolvent_ok and limit.decreasing and limit.within_envelope
        semigroup_error = max(semigroup_error,
                              float(np.max(np.abs(family.semigroup(t, u, at) - model.evaluate(u, at)))))

    report = {"resolvent_ok": bool(resolvent_ok), "semigroup_error": semigroup_error, "t": t}
    if model.backend == "chain":
        scaled = model.generator / family.trace.density[:, np.newaxis]
        report["generator_residual"] = float(np.max(np.abs(family.generator - scaled)))
    return report


def holomorphy_note(model: KernelModel) -> str:
    """Holomorphy of the semigroups is automatic for finite-dimensional generators."""
    return f"satisfied-by-backend ({model.backend}: matrix semigroup on F)"


def describe_family(model: KernelModel, mu: SmoothMeasure) -> Dict[str, Any]:
    family = family_for(model, mu)
    info = family.describe()
    info["zero_time_is_hitting"] = ZERO_TIME_IS_HITTING
    info["holomorphy"] = holomorphy_note(model)
    return info


def laplace_table(model: KernelModel, mu: SmoothMeasure, u, alphas: Sequence[float] = None) -> pd.DataFrame:
    """Laplace residual per alpha (no exception; for reports)."""
    alphas = list(config.ALPHA_GRID if alphas is None else alphas)
    rows: List[Dict[str, float]] = []
    for alpha in alphas:
        rows.append({"alpha": alpha, "residual": laplace_residual(model, mu, alpha, u, raise_on_failure=False)})
    return pd.DataFrame(rows, columns=["alpha", "residual"])
