"""
Convergence Reports
Error tables per n, log-log slopes and convergence verdicts.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence

import numpy as np
import pandas as pd

import config

REPORT_COLUMNS = ["n", "theorem", "test_id", "param", "sup_error", "hypothesis_ok"]


def fit_slope(ns: Sequence[float], errors: Sequence[float]) -> float:
    """
    Least-squares slope of log(error) against log(n).

    Zero errors are dropped; NaN when fewer than config.SLOPE_MIN_POINTS remain.
    """
    ns = np.asarray(ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    keep = errors > config.ZERO_ERROR
    if keep.sum() < config.SLOPE_MIN_POINTS:
        return float("nan")
    return float(np.polyfit(np.log(ns[keep]), np.log(errors[keep]), 1)[0])


def verdict(errors: Sequence[float]) -> bool:
    """
    Converged when the curve is identically zero, or its last value is below
    config.VERDICT_RATIO times its first and it does not increase over the
    last config.VERDICT_TAIL values.
    """
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0 or np.all(errors <= config.ZERO_ERROR):
        return True
    tail = errors[-config.VERDICT_TAIL:]
    return bool(errors[-1] < config.VERDICT_RATIO * errors[0] and np.all(np.diff(tail) <= config.ZERO_ERROR))


def best_subsequence(ns: Sequence[int], errors: Sequence[float]) -> List[int]:
    """Indices n at which the error reaches a new running minimum."""
    best = []
    record = float("inf")
    for n, error in zip(ns, errors):
        if error < record:
            best.append(int(n))
            record = error
    return best


@dataclass
class ConvergenceReport:
    """
    Outcome of one convergence experiment.

    Attributes:
        theorem: Experiment name
        mode: Experiment variant
        table: Rows (n, theorem, test_id, param, sup_error, hypothesis_ok)
        hypothesis: Summary of the hypothesis audit
        audit: Extra per-n checks (triangle bounds, extension independence, ...)
        subsequence_only: The result only guarantees a convergent subsequence
        notes: Free-form remarks carried into the summary
        extras: Cross-checks outside the per-n table (Monte Carlo agreement)
    """

    theorem: str
    mode: str
    table: pd.DataFrame
    hypothesis: Dict[str, Any]
    audit: pd.DataFrame = field(default_factory=pd.DataFrame)
    subsequence_only: bool = False
    notes: List[str] = field(default_factory=list)
    extras: Dict[str, Any] = field(default_factory=dict)

    def curves(self) -> Dict[str, pd.Series]:
        """Error per n for every (test_id, param) pair, keyed ``test_id|param``."""
        curves = {}
        for (test_id, param), group in self.table.groupby(["test_id", "param"], sort=False):
            curves[f"{test_id}|{param}"] = group.set_index("n")["sup_error"].sort_index()
        return curves

    def worst_curve(self) -> pd.Series:
        if self.table.empty:
            return pd.Series(dtype=float)
        return self.table.groupby("n")["sup_error"].max().sort_index()

    @property
    def hypothesis_ok(self) -> bool:
        rows_ok = bool(self.table["hypothesis_ok"].all()) if not self.table.empty else True
        return rows_ok and bool(self.hypothesis.get("passed", True))

    @property
    def converged(self) -> bool:
        if self.subsequence_only:
            return False
        return all(verdict(curve.to_numpy()) for curve in self.curves().values())

    @property
    def audit_ok(self) -> bool:
        flags = [column for column in self.audit.columns if column.endswith("_ok")]
        extras_ok = all(bool(check.get("ok", True)) for check in self.extras.values() if isinstance(check, dict))
        return extras_ok and all(bool(self.audit[column].all()) for column in flags)

    @property
    def passed(self) -> bool:
        if self.subsequence_only:
            return self.hypothesis_ok and self.audit_ok and self.subsequence_converges
        return self.hypothesis_ok and self.audit_ok and self.converged

    @property
    def subsequence_converges(self) -> bool:
        for curve in self.curves().values():
            best = best_subsequence(curve.index, curve.to_numpy())
            errors = curve.loc[best].to_numpy()
            if not (np.all(errors <= config.ZERO_ERROR) or errors[-1] < config.VERDICT_RATIO * errors[0]):
                return False
        return True

    def slopes(self) -> Dict[str, float]:
        return {key: fit_slope(curve.index, curve.to_numpy()) for key, curve in self.curves().items()}

    def summary(self) -> Dict[str, Any]:
        curves = self.curves()
        slopes = self.slopes()
        primary = next(iter(slopes.values()), float("nan"))
        summary = {
            "theorem": self.theorem,
            "mode": self.mode,
            "slope": None if np.isnan(primary) else primary,
            "slopes": {k: (None if np.isnan(v) else v) for k, v in slopes.items()},
            "verdicts": {k: verdict(c.to_numpy()) for k, c in curves.items()},
            "final_errors": {k: float(c.iloc[-1]) for k, c in curves.items() if len(c)},
            "hypothesis": self.hypothesis,
            "hypothesis_ok": self.hypothesis_ok,
            "audit_ok": self.audit_ok,
            "converged": self.converged,
            "subsequence_only": self.subsequence_only,
            "passed": self.passed,
            "notes": list(self.notes),
            "extras": dict(self.extras),
        }
        if self.subsequence_only:
            summary["best_subsequence"] = {
                k: best_subsequence(c.index, c.to_numpy()) for k, c in curves.items()
            }
        return summary


def failed_report(theorem: str, mode: str, n_values: Sequence[int], reason: str) -> ConvergenceReport:
    """Report for an experiment whose hypotheses failed: one failed row per n."""
    rows = [{"n": n, "theorem": theorem, "test_id": "hypothesis", "param": mode,
             "sup_error": float("nan"), "hypothesis_ok": False} for n in n_values]
    return ConvergenceReport(theorem, mode, pd.DataFrame(rows, columns=REPORT_COLUMNS),
                             {"passed": False, "reason": reason}, notes=[reason])
