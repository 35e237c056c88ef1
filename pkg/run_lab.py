"""
Time-Change Lab launcher.

Usage:
    python run_lab.py check --config configs/c2.json
    python run_lab.py converge --config configs/diffusion.json --n-max 32 --grid-t 5:50
    python run_lab.py simulate --config configs/c2.json --seed 7 --workers 4

Exit codes: 0 pass, 2 configuration error, 3 check or tolerance failure.
converge reports without gating: it exits 0 even when experiments fail.
"""

import argparse
import sys

from lab.experiment import t_grid_from_text
from reporting.commands import COMMANDS
from utils.config_loader import load_run_config, validate_config
from utils.errors import BadParameters, ConfigError, LabError
from utils.logger import setup_logger


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="run_lab", description="Numerical lab for time-changed Markov processes")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", help="report root directory")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--workers", type=int, help="Monte Carlo worker processes")
    parser.add_argument("--paths", type=int, help="Monte Carlo paths per estimate")
    parser.add_argument("--n-max", type=int, help="largest sequence index")
    parser.add_argument("--grid-t", help="time grid as T:points")
    parser.add_argument("--grid-alpha", help="comma-separated resolvent rates")
    parser.add_argument("--log-level", type=str.upper, choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return parser


def overrides_from_args(args: argparse.Namespace) -> dict:
    """
    Raises:
        ConfigError: On malformed grid flags
    """
    overrides = {"seed": args.seed, "workers": args.workers, "paths": args.paths,
                 "output_dir": args.out, "n_max": args.n_max}
    if args.grid_t:
        try:
            grid = t_grid_from_text(args.grid_t)
        except BadParameters as exc:
            raise ConfigError(str(exc)) from exc
        overrides["t_max"], overrides["t_points"] = float(grid[-1]), len(grid)
    if args.grid_alpha:
        try:
            overrides["alpha"] = [float(a) for a in args.grid_alpha.split(",")]
        except ValueError as exc:
            raise ConfigError(f"--grid-alpha must be comma-separated numbers, got {args.grid_alpha!r}") from exc
    return overrides


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logger = setup_logger("tclab", level=args.log_level)
    try:
        validate_config()
        cfg = load_run_config(args.config, overrides_from_args(args))
        return COMMANDS[args.command](cfg)
    except LabError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
