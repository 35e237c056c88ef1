"""
Report Writer
Serialises report tables to CSV and summaries to JSON under
``<out>/<command>/``. Output carries no timestamps, so identical runs give
byte-identical files.
"""

import json
import math
import os
from typing import Any, Dict

import numpy as np
import pandas as pd

import config
from utils.logger import get_logger

logger = get_logger("tclab.reporting")


def to_jsonable(value: Any) -> Any:
    """Plain-Python copy of nested report data (numpy scalars, arrays, frames, NaN -> None)."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value, key=str) if isinstance(value, (set, frozenset)) else value
        return [to_jsonable(v) for v in items]
    if isinstance(value, pd.DataFrame):
        return to_jsonable(value.to_dict(orient="records"))
    if isinstance(value, pd.Series):
        return to_jsonable(value.tolist())
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return None if math.isnan(value) else value
    if value is None or isinstance(value, (bool, int, str)):
        return value
    if callable(value):
        return getattr(value, "__name__", "function")
    return str(value)


class ReportWriter:
    """
    Writes the files of one command run.

    Args:
        out_dir: Report root (config.OUTPUT_DIRECTORY by default)
        command: Sub-directory name (check, converge, simulate)
    """

    def __init__(self, out_dir: str = None, command: str = "run"):
        self.directory = os.path.join(out_dir or config.OUTPUT_DIRECTORY, command)
        os.makedirs(self.directory, exist_ok=True)

    def path(self, filename: str) -> str:
        return os.path.join(self.directory, filename)

    def write_csv(self, name: str, table: pd.DataFrame) -> str:
        path = self.path(f"{name}.csv")
        table.to_csv(path, index=False, float_format=config.CSV_FLOAT_FORMAT, lineterminator="\n")
        logger.debug(f"Wrote {len(table)} rows to {path}")
        return path

    def write_json(self, name: str, payload: Dict[str, Any]) -> str:
        path = self.path(f"{name}.json")
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            json.dump(to_jsonable(payload), handle, indent=2, sort_keys=True, allow_nan=False)
            handle.write("\n")
        logger.debug(f"Wrote {path}")
        return path

    def write_resolved_config(self, resolved: Dict[str, Any]) -> str:
        return self.write_json("resolved_config", resolved)
