"""
G-Kato membership.

A measure is G-bounded when ``G^mu 1`` is bounded and G-Kato when, in
addition, ``G^mu 1`` lies in C0(X). On a finite chain the C0 condition is
vacuous; on the diffusion backend it is checked through boundary decay and a
continuity modulus on the grid.
"""

from typing import Any, Dict, NamedTuple

import numpy as np

import config
from measures.smooth_measure import SmoothMeasure
from models.base_model import KernelModel
from utils.errors import QuadratureFailure
from utils.logger import get_logger

logger = get_logger("tclab.measures")


class KatoResult(NamedTuple):
    is_kato: bool
    sup: float
    report: Dict[str, Any]


def green_potential_of_one(model: KernelModel, mu: SmoothMeasure) -> np.ndarray:
    """``G^mu 1`` on the model points."""
    values = mu.potential(model, lambda x: np.ones(np.shape(x)), 0.0)
    if not np.all(np.isfinite(values)):
        raise QuadratureFailure(f"G^mu 1 is not finite for {mu.label}")
    return values


def is_green_kato(model: KernelModel, mu: SmoothMeasure, tol: float = None) -> KatoResult:
    """
    Check G-boundedness and the G-Kato condition.

    Args:
        model: Backend
        mu: Measure to test
        tol: Boundary decay tolerance relative to sup G^mu 1
            (config.KATO_DECAY_TOL by default)

    Returns:
        KatoResult(is_kato, sup G^mu 1, report)

    Raises:
        QuadratureFailure: If the potential is not finite
    """
    tol = config.KATO_DECAY_TOL if tol is None else tol
    g = green_potential_of_one(model, mu)
    sup = float(np.max(np.abs(g))) if g.size else 0.0

    if model.backend == "chain":
        report = {"bounded": True, "c0": True, "continuous": True, "sup": sup}
        return KatoResult(True, sup, report)

    report = model.boundary_report(g)
    report["c0"] = bool(report["left_decay"] <= tol and report["right_decay"] <= tol)
    report["bounded"] = bool(np.isfinite(sup))
    is_kato = report["bounded"] and report["c0"] and report["continuous"]

    logger.debug(f"Kato check {mu.label}: sup={sup:.4g} left={report['left_decay']:.2e} "
                 f"right={report['right_decay']:.2e} jump={report['max_jump']:.2e}")
    return KatoResult(bool(is_kato), sup, report)
