"""
Commands
The three lab commands. Each builds the objects of a RunConfig, calls the
library operations, writes its reports under ``<out>/<command>/`` and
returns the exit code (failures raise LabError subclasses carrying theirs).
"""

from typing import Any, Dict, List

import numpy as np
import pandas as pd

import config
from lab.experiment import ExperimentSpec, default_t_grid
from lab.report import ConvergenceReport, failed_report
from lab.runners import annotate_family, run_experiment
from measures.kato import is_green_kato
from measures.smooth_measure import SmoothMeasure, chain_measure, reference_measure
from models.base_model import KernelModel
from models.functions import function_from_spec
from pathsim.estimators import mc_apotential, mc_fdd, mc_lifetime, mc_resolvent, mc_semigroup, mc_transition
from potential.checks import (
    cmp_check,
    feller_resolvent_check,
    kernel_range_check,
    normality_check,
    range_identity_check,
    resolvent_node_norm,
    support_consistency,
)
from potential.operators import potential_apply, resolvent_equation_residual, strong_limit_check, timechanged_resolvent
from reporting.writer import ReportWriter
from timechange.semigroups import describe_family, exact_fdd, laplace_table, semigroup_apply, substitute_feller_check
from timechange.trace import trace_generator
from utils.config_loader import RunConfig
from utils.errors import (
    BadParameters,
    CheckFailed,
    ConfigError,
    HypothesisFailed,
    LabError,
    ModeMismatch,
    ToleranceExceeded,
    ValidationFailed,
)
from utils.logger import LabLogger, get_logger

logger = get_logger("tclab.reporting")
lab_logger = LabLogger("tclab.reporting")

CHECK_COLUMNS = ["measure", "check", "passed", "residual"]
SIMULATE_COLUMNS = ["name", "quantity", "exact", "estimate", "stderr", "z", "n_paths", "truncated"]


def _ones(x):
    return np.ones(np.shape(x))


def _writer(cfg: RunConfig, command: str) -> ReportWriter:
    writer = ReportWriter(cfg.output_dir, command)
    writer.write_resolved_config(cfg.to_dict())
    return writer


# ----------------------------------------------------------------------
# check
# ----------------------------------------------------------------------
def _random_chain_measures(model: KernelModel, count: int, seed: int) -> Dict[str, SmoothMeasure]:
    """Random nonnegative chain measures, about a third of the masses zero."""
    rng = np.random.default_rng(seed)
    measures = {}
    for i in range(count):
        masses = rng.exponential(size=model.size) * (rng.random(model.size) > 1.0 / 3.0)
        if not masses.any():
            masses[rng.integers(model.size)] = 1.0
        measures[f"random_{i}"] = chain_measure(masses, f"random_{i}")
    return measures


def _structural_rows(model: KernelModel, name: str, mu: SmoothMeasure, cfg: RunConfig,
                     full: bool = True) -> List[Dict[str, Any]]:
    checks = cfg.checks
    alphas = [0.0] + list(checks.get("alphas", cfg.grids["alpha"]))
    rows = []

    def add(check: str, passed: bool, residual: float = None):
        lab_logger.log_check(f"{name}/{check}", bool(passed), residual)
        rows.append({"measure": name, "check": check, "passed": bool(passed),
                     "residual": float("nan") if residual is None else float(residual)})

    worst, contraction = 0.0, True
    for alpha in alphas:
        for beta in alphas:
            if beta <= alpha:
                continue
            result = resolvent_equation_residual(model, mu, alpha, beta)
            worst = max(worst, result.residual)
            contraction = contraction and (alpha == 0 or result.contraction_ok)
    add("resolvent_equation", worst < config.RESOLVENT_TOL, worst)
    node_norm = max(resolvent_node_norm(model, mu, alpha) for alpha in alphas if alpha > 0)
    add("alpha_resolvent_contraction", contraction and node_norm <= 1.0 + 1e-12, node_norm)

    if model.backend == "chain":
        add("kernel_range", kernel_range_check(model, mu, alphas[1:])["passed"])
        normality = normality_check(model, mu)
        add("normality_consistent", normality["consistent"])
        if full:
            identity = range_identity_check(model, mu)
            add("range_identity", identity["passed"], identity["hitting_fixes_potentials"])
    if not full:
        return rows

    kato = is_green_kato(model, mu)
    add("kato", kato.is_kato, kato.sup)
    cmp = cmp_check(model, mu, int(checks.get("cmp_trials", 10_000)), np.random.default_rng(cfg.seed),
                    raise_on_violation=False)
    add("complete_maximum_principle", cmp["passed"], cmp["max_violation"])
    support = support_consistency(model, mu)
    add("support_consistency", support["passed"], support["potential_leakage"])
    add("feller_resolvent", feller_resolvent_check(model, mu)["passed"])
    limit = strong_limit_check(model, mu, _ones)
    add("strong_limit", limit.decreasing and limit.within_envelope, float(limit.table["error"].iloc[-1]))

    try:
        trace = trace_generator(model, mu)
        add("trace_generator", True, trace.residual)
    except ValidationFailed as exc:
        logger.warning(f"{name}: {exc}")
        add("trace_generator", False)
        return rows

    laplace = laplace_table(model, mu, _ones, checks.get("laplace_alphas", [1.0, 2.0, 5.0]))
    worst_laplace = float(laplace["residual"].max()) if len(laplace) else 0.0
    add("laplace_identity", worst_laplace <= config.LAPLACE_TOL, worst_laplace)
    feller = substitute_feller_check(model, mu)
    add("substitute_feller", feller["c0_ok"] and feller["continuity_ok"], feller["rate"])
    return rows


def _families(model: KernelModel, measures: Dict[str, SmoothMeasure]) -> Dict[str, Any]:
    """Time-changed family per measure, with its holomorphy and time-zero flags."""
    families = {}
    for name, mu in measures.items():
        try:
            families[name] = describe_family(model, mu)
        except LabError as exc:
            families[name] = {"error": str(exc)}
    return families


def cmd_check(cfg: RunConfig) -> int:
    """
    Structural checks on every configured measure (all measures by default,
    the reference measure when none is configured) plus resolvent, kernel/range
    and normality audits on ``checks.random_measures`` random chain measures.

    Raises:
        ConfigError: On an invalid model or measure
        CheckFailed: If any check fails (after the report is written)
    """
    model = cfg.build_model()
    measures = cfg.build_measures(model) or {"reference": reference_measure(model)}
    selected = cfg.checks.get("measures", list(measures))
    missing = [name for name in selected if name not in measures]
    if missing:
        raise ConfigError(f"checks refer to unknown measures {missing}")
    writer = _writer(cfg, "check")

    rows = []
    for name in selected:
        logger.info(f"Checking {name} on {model.name}")
        rows.extend(_structural_rows(model, name, measures[name], cfg))
    count = int(cfg.checks.get("random_measures", 0))
    if count and model.backend == "chain":
        for name, mu in _random_chain_measures(model, count, cfg.seed).items():
            rows.extend(_structural_rows(model, name, mu, cfg, full=False))

    table = pd.DataFrame(rows, columns=CHECK_COLUMNS)
    failed = table.loc[~table["passed"], ["measure", "check"]].to_dict(orient="records")
    writer.write_csv("checks", table)
    writer.write_json("summary", {"model": model.describe(), "checks": len(table),
                                  "failed": failed, "passed": not failed,
                                  "families": _families(model, {name: measures[name] for name in selected})})
    if failed:
        raise CheckFailed(f"{len(failed)} structural checks failed: {failed}")
    logger.info(f"All {len(table)} checks passed")
    return 0


# ----------------------------------------------------------------------
# converge
# ----------------------------------------------------------------------
def _experiment_defaults(cfg: RunConfig) -> Dict[str, Any]:
    grids = cfg.grids
    return {
        "n_min": grids["n_min"],
        "n_max": grids["n_max"],
        "alpha_grid": grids["alpha"],
        "t_grid": default_t_grid(grids["t_max"], grids["t_points"]),
    }


def cmd_converge(cfg: RunConfig) -> int:
    """
    Run every configured experiment; one CSV of error rows per experiment,
    an audit CSV where the runner audits, and a JSON summary with slopes and
    verdicts. Failed hypotheses become failed rows, not errors.

    converge reports and never gates: it returns 0 even when experiments
    fail; read the per-experiment ``passed`` verdicts in summary.json.

    Raises:
        ConfigError: On invalid model, measures, sequences or experiment blocks
    """
    model = cfg.build_model()
    measures = cfg.build_measures(model)
    sequences = cfg.build_sequences(model, measures)
    if not cfg.experiments:
        raise ConfigError("converge needs at least one experiment")
    writer = _writer(cfg, "converge")
    defaults = _experiment_defaults(cfg)

    summary = {}
    for i, block in enumerate(cfg.experiments):
        try:
            spec = ExperimentSpec.from_config(block, model, sequences, defaults)
        except (BadParameters, ValueError) as exc:
            raise ConfigError(f"experiments[{i}]: {exc}") from exc
        if spec.mc is not None:
            spec.mc = {"paths": cfg.paths, "seed": cfg.seed, "workers": cfg.workers, **spec.mc}

        try:
            report: ConvergenceReport = run_experiment(spec)
        except (HypothesisFailed, ModeMismatch) as exc:
            lab_logger.log_error(exc, spec.name)
            n_values = spec.sequence.indices(spec.n_max, spec.n_min)
            report = failed_report(spec.theorem, spec.mode, n_values, str(exc))
            annotate_family(report, model, spec.sequence.limit)

        writer.write_csv(spec.name, report.table)
        if not report.audit.empty:
            writer.write_csv(f"{spec.name}_audit", report.audit)
        summary[spec.name] = {**report.summary(), "experiment": spec.describe()}
        logger.info(f"{spec.name}: passed={report.passed} slope={summary[spec.name]['slope']}")

    writer.write_json("summary", summary)
    failed = [name for name, entry in summary.items() if not entry["passed"]]
    if failed:
        logger.warning(f"{len(failed)} experiments did not pass: {failed}")
    return 0


# ----------------------------------------------------------------------
# simulate
# ----------------------------------------------------------------------
def _case_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _state(model: KernelModel, x) -> int:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return int(x)
    return model.index_of(x)


def _row(name: str, quantity: str, exact: float, estimate) -> Dict[str, Any]:
    z = estimate.z(exact)
    lab_logger.log_estimate(f"{name}/{quantity}", exact, estimate.estimate, estimate.stderr)
    return {"name": name, "quantity": quantity, "exact": float(exact), "estimate": estimate.estimate,
            "stderr": estimate.stderr, "z": z, "n_paths": estimate.n_paths, "truncated": estimate.truncated}


def _simulate_case(model: KernelModel, measures: Dict[str, SmoothMeasure], case: Dict[str, Any],
                   cfg: RunConfig, seed: int) -> List[Dict[str, Any]]:
    quantity = case["quantity"]
    name = case.get("name", quantity)
    paths = int(case.get("paths", cfg.paths))
    mc = {"n_paths": paths, "seed": seed, "workers": cfg.workers}

    def measure(key: str, default: str = None) -> SmoothMeasure:
        label = case.get(key, default)
        if label not in measures:
            raise ConfigError(f"simulate case {name!r} refers to unknown measure {label!r}")
        return measures[label]

    first = next(iter(measures), None)
    u = function_from_spec(model, case.get("u", "ones"))
    x = _state(model, case.get("x", 0))

    if quantity == "semigroup":
        mu, t = measure("measure", first), float(case.get("t", 1.0))
        exact = semigroup_apply(model, mu, t, u).values[x]
        return [_row(name, quantity, exact, mc_semigroup(model, mu, t, u, x, **mc))]
    if quantity == "resolvent":
        mu, alpha = measure("measure", first), float(case.get("alpha", 1.0))
        exact = timechanged_resolvent(model, mu, alpha, u).values[x]
        estimates = mc_resolvent(model, mu, alpha, u, x, **mc)
        return [_row(name, "resolvent/randomized", exact, estimates.randomized),
                _row(name, "resolvent/functional", exact, estimates.functional)]
    if quantity == "apotential":
        mu, alpha = measure("measure", first), float(case.get("alpha", 1.0))
        exact = potential_apply(model, mu, alpha, u).values[x]
        return [_row(name, quantity, exact, mc_apotential(model, mu, alpha, u, x, **mc))]
    if quantity == "fdd":
        mu = measure("measure", first)
        initial = measure("initial", case.get("measure", first))
        times = [float(t) for t in case.get("times", [1.0])]
        functions = [function_from_spec(model, f) for f in case.get("functions", ["ones"] * (len(times) + 1))]
        exact = exact_fdd(model, initial, mu, times, functions, hitting_start=True)
        return [_row(name, quantity, exact, mc_fdd(model, initial, mu, times, functions, **mc))]
    if quantity == "lifetime":
        exact = model.expected_lifetime()[x]
        return [_row(name, quantity, exact, mc_lifetime(model, x, **mc))]
    t = float(case.get("t", 1.0))
    exact = model.transition(t, u).values[x]
    return [_row(name, quantity, exact, mc_transition(model, t, u, x, **mc))]


def cmd_simulate(cfg: RunConfig) -> int:
    """
    Monte Carlo estimates against exact values, one row per estimator with
    its z-score.

    Raises:
        ConfigError: On a non-chain model or malformed cases
        ToleranceExceeded: If any ``|z|`` exceeds config.MC_Z_GATE (after the report is written)
    """
    model = cfg.build_model()
    if model.backend != "chain":
        raise ConfigError("simulate runs on the chain backend only")
    measures = cfg.build_measures(model)
    if not cfg.simulate:
        raise ConfigError("simulate needs at least one case")
    writer = _writer(cfg, "simulate")

    rows = []
    for i, case in enumerate(cfg.simulate):
        try:
            rows.extend(_simulate_case(model, measures, case, cfg, _case_seed(cfg.seed, i)))
        except (BadParameters, KeyError, ValueError) as exc:
            raise ConfigError(f"simulate[{i}]: {exc}") from exc

    table = pd.DataFrame(rows, columns=SIMULATE_COLUMNS)
    outside = table.loc[table["z"].abs() > config.MC_Z_GATE, ["name", "quantity", "z"]].to_dict(orient="records")
    writer.write_csv("estimates", table)
    writer.write_json("summary", {"cases": len(table), "z_gate": config.MC_Z_GATE,
                                  "outside_gate": outside, "passed": not outside})
    if outside:
        raise ToleranceExceeded(f"{len(outside)} estimates outside |z| <= {config.MC_Z_GATE:g}: {outside}")
    logger.info(f"All {len(table)} estimates within |z| <= {config.MC_Z_GATE:g}")
    return 0


COMMANDS = {"check": cmd_check, "converge": cmd_converge, "simulate": cmd_simulate}
