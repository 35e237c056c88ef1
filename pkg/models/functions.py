"""
Functions on the state space.

A ``FunctionOnX`` carries the values of a bounded function on the evaluation
points of a backend (chain states, or interior grid points of the diffusion
backend), a class tag and, optionally, an exact evaluator for off-grid points.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

FUNCTION_CLASSES = ("Bb", "C0")


@dataclass(frozen=True, eq=False)
class FunctionOnX:
    """
    Bounded function on X, stored by its values on the backend points.

    Attributes:
        values: Values on the backend evaluation points
        function_class: "Bb" (bounded Borel) or "C0" (vanishing at infinity)
        evaluator: Optional exact evaluator x -> values for arbitrary points
    """

    values: np.ndarray
    function_class: str = "Bb"
    evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise ValueError("FunctionOnX values must be finite")
        if self.function_class not in FUNCTION_CLASSES:
            raise ValueError(f"function_class must be one of {FUNCTION_CLASSES}, got {self.function_class!r}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values.copy()
        return self.values.astype(dtype)

    def __len__(self) -> int:
        return self.values.size

    def sup_norm(self) -> float:
        """Sup norm over the stored points."""
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def at(self, points) -> np.ndarray:
        """Exact values at arbitrary points (requires an evaluator)."""
        if self.evaluator is None:
            raise ValueError("this function has no evaluator; use KernelModel.evaluate")
        return np.asarray(self.evaluator(np.asarray(points, dtype=float)), dtype=float)

    def with_class(self, function_class: str) -> "FunctionOnX":
        return FunctionOnX(self.values, function_class, self.evaluator)

    def __repr__(self) -> str:
        return f"<FunctionOnX[{self.function_class}] n={self.values.size} sup={self.sup_norm():.4g}>"


def as_values(u) -> np.ndarray:
    """Plain float vector behind a FunctionOnX or array-like."""
    if isinstance(u, FunctionOnX):
        return u.values
    return np.asarray(u, dtype=float).reshape(-1)


def hat_function(center: float, half_width: float) -> Callable[[np.ndarray], np.ndarray]:
    """Continuous tent with compact support [center - half_width, center + half_width]."""
    if half_width <= 0:
        raise ValueError("half_width must be positive")

    def hat(x):
        x = np.asarray(x, dtype=float)
        return np.clip(1.0 - np.abs(x - center) / half_width, 0.0, None)

    return hat


def function_from_spec(model, spec: Any) -> FunctionOnX:
    """
    Build a test function from its config description.

    Accepted forms:
        "ones"                      constant 1 (Bb; C0 on the chain)
        "zeros"                     constant 0
        "indicator:<label>"         indicator of one chain state
        [v1, v2, ...]               explicit values on the backend points
        {"hat": [center, width]}    continuous tent (C0)
        {"sine": k}                 sin(k*pi*x) on the diffusion backend (C0)
        {"values": [...], "class": "C0"}

    Args:
        model: KernelModel the function lives on
        spec: Description from the run config

    Returns:
        FunctionOnX on the model points
    """
    points = model.points

    if isinstance(spec, str):
        if spec == "ones":
            if model.backend == "chain":
                return FunctionOnX(np.ones(model.size), "C0")
            return FunctionOnX(np.ones(model.size), "Bb", lambda x: np.ones_like(np.asarray(x, dtype=float)))
        if spec == "zeros":
            return FunctionOnX(np.zeros(model.size), "C0", lambda x: np.zeros_like(np.asarray(x, dtype=float)))
        if spec.startswith("indicator:"):
            if model.backend != "chain":
                raise ValueError("indicator test functions are only defined on the chain backend")
            index = model.index_of(spec.split(":", 1)[1])
            values = np.zeros(model.size)
            values[index] = 1.0
            return FunctionOnX(values, "C0")
        raise ValueError(f"unknown test function {spec!r}")

    if isinstance(spec, dict):
        if "hat" in spec:
            center, width = spec["hat"]
            hat = hat_function(float(center), float(width))
            return FunctionOnX(hat(points), "C0", hat)
        if "sine" in spec:
            k = int(spec["sine"])

            def sine(x):
                return np.sin(k * np.pi * np.asarray(x, dtype=float))

            return FunctionOnX(sine(points), "C0", sine)
        if "values" in spec:
            return FunctionOnX(np.asarray(spec["values"], dtype=float), spec.get("class", "Bb"))
        raise ValueError(f"unknown test function {spec!r}")

    values = np.asarray(spec, dtype=float)
    if values.size != model.size:
        raise ValueError(f"test function has {values.size} values, model has {model.size} points")
    return FunctionOnX(values, "C0" if model.backend == "chain" else "Bb")
