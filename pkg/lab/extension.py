"""
Extension of functions given on a fine support F to all of X, and restriction back.
"""

import numpy as np

from measures.smooth_measure import FineSupport
from models.base_model import KernelModel
from models.functions import FunctionOnX
from utils.errors import ExtensionFailed
from utils.linalg import checked_solve

EXTENSION_METHODS = ("linear", "hitting", "perturbed")


def _distance_to(points: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.min(np.abs(x[:, np.newaxis] - points[np.newaxis, :]), axis=1)


def extend(model: KernelModel, F: FineSupport, values, method: str = "linear") -> FunctionOnX:
    """
    C0-class extension of u given on the points of F.

    Methods:
        linear: chain: 0 off F; diffusion: piecewise-linear through the
            values of F, pinned to 0 at 0 and 1
        hitting: the hitting extension P_F u
        perturbed: "linear" plus a C0 bump vanishing exactly on F (a second,
            different extension)

    Raises:
        ExtensionFailed: If values do not match F or are not finite
    """
    if method not in EXTENSION_METHODS:
        raise ExtensionFailed(f"unknown extension method {method!r}; expected one of {EXTENSION_METHODS}")
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.size != F.size:
        raise ExtensionFailed(f"{values.size} values given for a support of {F.size} points")
    if not np.all(np.isfinite(values)):
        raise ExtensionFailed("values on F must be finite")

    if model.backend == "chain":
        full = np.zeros(model.size)
        if method == "hitting":
            full = model.hitting_extension(F.points, values)
        else:
            full[np.asarray(F.points, dtype=int)] = values
            if method == "perturbed":
                off = ~F.contains(model.points)
                full[off] = 1.0 + 0.5 * np.arange(off.sum())
        return FunctionOnX(full, "C0")

    points = np.asarray(F.points, dtype=float)

    def evaluator(x):
        x = np.asarray(x, dtype=float).reshape(-1)
        base = model.hitting_extension(points, values, x)
        if method == "perturbed" and points.size:
            base = base + np.sin(np.pi * x) * _distance_to(points, x)
        return base

    return FunctionOnX(evaluator(model.points), "C0", evaluator)


def restrict(model: KernelModel, F: FineSupport, u) -> np.ndarray:
    """Values of u on the points of F."""
    if F.is_empty():
        return np.zeros(0)
    return model.evaluate(u, F.points)


def hitting_projection(model: KernelModel, F: FineSupport, u, at) -> np.ndarray:
    """
    ``(P_F u)`` at the points ``at``, read from the values of u on all of X
    rather than from its restriction to F.

    Chain: ``u_D + (-Q_DD)^{-1} (Q u)_D`` on the complement D of F (the
    off-F values of u cancel). Diffusion: interpolation through u at the
    points of F and at the killing boundary 0, 1.
    """
    if model.backend == "chain":
        at = np.asarray(at, dtype=int).reshape(-1)
        full = np.array(model.evaluate(u, model.points), dtype=float)
        D = np.flatnonzero(~F.contains(model.points))
        if D.size:
            Q = model.generator
            full[D] += checked_solve(-Q[np.ix_(D, D)], (Q @ full)[D], context="hitting projection")
        return full[at]
    at = np.asarray(at, dtype=float).reshape(-1)
    knots = np.r_[0.0, np.sort(np.asarray(F.points, dtype=float)), 1.0]
    return np.interp(at, knots, model.evaluate(u, knots))
