"""
Configuration Loader Module
Loads JSON run configurations, fills in defaults from config.settings,
applies command-line overrides and builds the objects a run needs.
"""

import json
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import config
from measures.sequences import MeasureSequence, load_sequence
from measures.smooth_measure import SmoothMeasure, load_measure
from models.base_model import KernelModel
from models.loader import load_model
from utils.errors import ConfigError, LabError

RUN_KEYS = {"model", "measures", "sequences", "experiments", "simulate", "checks",
            "seed", "paths", "workers", "grids", "output_dir"}
GRID_KEYS = {"t_max", "t_points", "alpha", "n_min", "n_max"}
CHECK_KEYS = {"measures", "alphas", "cmp_trials", "laplace_alphas", "random_measures"}
SIMULATE_KEYS = {"name", "quantity", "measure", "initial", "x", "t", "alpha", "u", "times", "functions", "paths"}
SIMULATE_QUANTITIES = ("semigroup", "resolvent", "apotential", "fdd", "lifetime", "transition")


def default_grids() -> Dict[str, Any]:
    return {
        "t_max": config.T_MAX,
        "t_points": config.T_POINTS,
        "alpha": list(config.ALPHA_GRID),
        "n_min": config.N_MIN,
        "n_max": config.N_MAX,
    }


@dataclass
class RunConfig:
    """
    A resolved run configuration.

    Attributes:
        model: Backend block (see models.loader.load_model)
        measures: name -> measure description
        sequences: name -> {"kind", "limit", "params"}
        experiments: Experiment blocks for the converge command
        simulate: Monte Carlo cases for the simulate command
        checks: Settings of the check command
        seed: Master seed of every random stream
        paths: Monte Carlo paths per estimate
        workers: Monte Carlo worker processes
        grids: t_max, t_points, alpha, n_min, n_max
        output_dir: Root of the report tree
    """

    model: Dict[str, Any]
    measures: Dict[str, Any] = field(default_factory=dict)
    sequences: Dict[str, Any] = field(default_factory=dict)
    experiments: List[Dict[str, Any]] = field(default_factory=list)
    simulate: List[Dict[str, Any]] = field(default_factory=list)
    checks: Dict[str, Any] = field(default_factory=dict)
    seed: int = config.MC_SEED
    paths: int = config.MC_PATHS
    workers: int = config.MC_WORKERS
    grids: Dict[str, Any] = field(default_factory=default_grids)
    output_dir: str = config.OUTPUT_DIRECTORY

    def to_dict(self) -> Dict[str, Any]:
        """Fully resolved configuration, embedded in every output."""
        return asdict(self)

    def build_model(self) -> KernelModel:
        """
        Raises:
            ConfigError: If the model block is malformed or the model is invalid
        """
        try:
            return load_model(self.model)
        except LabError as exc:
            raise ConfigError(f"invalid model ({type(exc).__name__}): {exc}") from exc
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid model block: {exc}") from exc

    def build_measures(self, model: KernelModel) -> Dict[str, SmoothMeasure]:
        try:
            return {name: load_measure(spec, model, name) for name, spec in self.measures.items()}
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid measure: {exc}") from exc

    def build_sequences(self, model: KernelModel, measures: Dict[str, SmoothMeasure]) -> Dict[str, MeasureSequence]:
        try:
            return {name: load_sequence(spec, measures, model) for name, spec in self.sequences.items()}
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid sequence: {exc}") from exc


def _check_keys(block: Any, allowed: set, where: str):
    if not isinstance(block, dict):
        raise ConfigError(f"{where} must be an object, got {type(block).__name__}")
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _positive_int(value: Any, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value or value < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def validate_run_config(raw: Dict[str, Any]) -> RunConfig:
    """
    Validate a raw configuration dictionary and fill in defaults.

    Args:
        raw: Parsed JSON object

    Returns:
        RunConfig

    Raises:
        ConfigError: On unknown keys, wrong types or out-of-range values
    """
    _check_keys(raw, RUN_KEYS, "run config")
    if "model" not in raw:
        raise ConfigError("run config needs a 'model' block")

    grids = default_grids()
    if "grids" in raw:
        _check_keys(raw["grids"], GRID_KEYS, "grids")
        grids.update(raw["grids"])
    if not float(grids["t_max"]) > 0:
        raise ConfigError(f"grids.t_max must be positive, got {grids['t_max']!r}")
    grids["t_max"] = float(grids["t_max"])
    grids["t_points"] = _positive_int(grids["t_points"], "grids.t_points", 2)
    grids["n_min"] = _positive_int(grids["n_min"], "grids.n_min")
    grids["n_max"] = _positive_int(grids["n_max"], "grids.n_max", 2)
    try:
        grids["alpha"] = [float(a) for a in grids["alpha"]]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"grids.alpha must be a list of numbers, got {grids['alpha']!r}") from exc
    if any(a <= 0 for a in grids["alpha"]):
        raise ConfigError("grids.alpha entries must be positive")

    checks = raw.get("checks", {})
    _check_keys(checks, CHECK_KEYS, "checks")

    for key in ("measures", "sequences"):
        if not isinstance(raw.get(key, {}), dict):
            raise ConfigError(f"'{key}' must be an object mapping names to descriptions")
    for key in ("experiments", "simulate"):
        if not isinstance(raw.get(key, []), list):
            raise ConfigError(f"'{key}' must be a list")
    for i, case in enumerate(raw.get("simulate", [])):
        _check_keys(case, SIMULATE_KEYS, f"simulate[{i}]")
        if case.get("quantity") not in SIMULATE_QUANTITIES:
            raise ConfigError(f"simulate[{i}].quantity must be one of {SIMULATE_QUANTITIES}")

    return RunConfig(
        model=raw["model"],
        measures=dict(raw.get("measures", {})),
        sequences=dict(raw.get("sequences", {})),
        experiments=list(raw.get("experiments", [])),
        simulate=list(raw.get("simulate", [])),
        checks=dict(checks),
        seed=_positive_int(raw.get("seed", config.MC_SEED), "seed", 0),
        paths=_positive_int(raw.get("paths", config.MC_PATHS), "paths"),
        workers=_positive_int(raw.get("workers", config.MC_WORKERS), "workers"),
        grids=grids,
        output_dir=str(raw.get("output_dir", config.OUTPUT_DIRECTORY)),
    )


def apply_overrides(raw: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """
    Merge command-line overrides into a raw configuration.

    Recognised overrides: seed, workers, paths, output_dir, n_max, t_max,
    t_points, alpha. None values are ignored.
    """
    merged = dict(raw)
    grids = dict(merged.get("grids", {}))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key in ("seed", "workers", "paths", "output_dir"):
            merged[key] = value
        elif key in GRID_KEYS:
            grids[key] = value
        else:
            raise ConfigError(f"unknown override {key!r}")
    if grids:
        merged["grids"] = grids
    return merged


def load_run_config(path: str, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Load a run configuration from a JSON file.

    Args:
        path: JSON file
        overrides: Command-line values taking precedence over the file

    Returns:
        Validated RunConfig

    Raises:
        ConfigError: If the file is missing, not JSON, or invalid
    """
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return validate_run_config(apply_overrides(raw, overrides))


def validate_config() -> bool:
    """
    Validate the environment-level defaults.

    Raises:
        ConfigError: If config.settings holds unusable values
    """
    try:
        return config.validate_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
