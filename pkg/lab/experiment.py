"""
Experiment Specifications
Which theorem to exercise, on which sequence, with which test functions and grids.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

import config
from measures.sequences import MeasureSequence, hat_functions
from models.base_model import KernelModel
from models.functions import function_from_spec
from utils.errors import BadParameters, ModeMismatch

SEMIGROUP_MODES = ("range", "hitting_composed", "subset", "monotone", "full_support", "subsequence")

# guarantees a sequence generator must declare, per (theorem, mode)
REQUIREMENTS: Dict[str, Dict[str, frozenset]] = {
    "potential": {"default": frozenset({"potential_convergence"})},
    "integrated": {"default": frozenset({"potential_convergence"})},
    "semigroup": {
        "range": frozenset({"potential_convergence"}),
        "hitting_composed": frozenset({"potential_convergence"}),
        "subset": frozenset({"potential_convergence", "subset_support"}),
        "monotone": frozenset({"potential_convergence", "monotone"}),
        "full_support": frozenset({"potential_convergence", "full_support"}),
        "subsequence": frozenset({"potential_convergence"}),
    },
    "hitting": {"default": frozenset()},
    "approximation": {"default": frozenset({"potential_convergence"})},
    "evolution": {"default": frozenset({"potential_convergence"})},
    "fdd": {"default": frozenset({"potential_convergence"})},
}

THEOREMS = tuple(REQUIREMENTS)


def default_t_grid(t_max: float = None, points: int = None) -> np.ndarray:
    return np.linspace(0.0, config.T_MAX if t_max is None else t_max,
                       config.T_POINTS if points is None else points)


def default_test_functions(model: KernelModel) -> Dict[str, Any]:
    """The constant 1 and a few tents (chain: state indicators)."""
    family = {"ones": lambda x: np.ones(np.shape(x))}
    hats = hat_functions(model, k=3)
    if model.backend == "chain":
        hats = dict(list(hats.items())[:3])
    family.update(hats)
    return family


@dataclass
class ExperimentSpec:
    """
    One convergence experiment.

    Attributes:
        name: Experiment name used for output files
        model: Backend
        sequence: Measure sequence mu_n -> mu_inf
        theorem: One of THEOREMS
        mode: Variant (semigroup modes; "default" otherwise)
        test_functions: name -> bounded function
        alpha_grid: Resolvent rates
        t_grid: Times; sup over this grid stands in for locally uniform in t
        n_min / n_max: Index range
        times / functions: fdd times and functions u_0..u_k
        v_scale: n -> factor c_n of the evolution data v_n = c_n v
        mc: Monte Carlo cross-check settings for fdd (paths, seed, workers) or None
    """

    name: str
    model: KernelModel
    sequence: MeasureSequence
    theorem: str
    mode: str = "default"
    test_functions: Dict[str, Any] = field(default_factory=dict)
    alpha_grid: List[float] = field(default_factory=lambda: list(config.ALPHA_GRID))
    t_grid: np.ndarray = field(default_factory=default_t_grid)
    n_min: Optional[int] = None
    n_max: int = config.N_MAX
    times: List[float] = field(default_factory=lambda: [1.0])
    functions: Optional[List[Any]] = None
    v_scale: Callable[[int], float] = field(default=lambda n: 1.0 + 1.0 / n, repr=False)
    mc: Optional[Dict[str, Any]] = None

    def __post_init__(self):
        if not self.test_functions:
            self.test_functions = default_test_functions(self.model)
        if self.functions is None:
            self.functions = [lambda x: np.ones(np.shape(x))] * (len(self.times) + 1)
        self.t_grid = np.asarray(self.t_grid, dtype=float)

    @property
    def n_values(self) -> List[int]:
        return self.sequence.indices(self.n_max, self.n_min)

    @property
    def required(self) -> frozenset:
        return REQUIREMENTS[self.theorem].get(self.mode, frozenset())

    def validate(self):
        """
        Raises:
            BadParameters: On unknown theorems, modes or empty ranges
            ModeMismatch: If the sequence does not declare the mode's hypotheses
        """
        if self.theorem not in REQUIREMENTS:
            raise BadParameters(f"unknown theorem {self.theorem!r}; expected one of {THEOREMS}")
        modes = REQUIREMENTS[self.theorem]
        if self.mode not in modes:
            raise BadParameters(f"theorem {self.theorem!r} has no mode {self.mode!r}; expected one of {sorted(modes)}")
        if len(self.n_values) < 2:
            raise BadParameters(f"need at least two indices, got {self.n_values}")
        if np.any(self.t_grid < 0):
            raise BadParameters("t grid must be nonnegative")
        if any(alpha <= 0 for alpha in self.alpha_grid):
            raise BadParameters("alpha grid must be positive")
        missing = self.required - self.sequence.guarantees
        if missing:
            raise ModeMismatch(f"{self.theorem}/{self.mode} needs a sequence guaranteeing {sorted(missing)}; "
                               f"{self.sequence.kind} guarantees {sorted(self.sequence.guarantees)}")

    @classmethod
    def from_config(cls, block: Dict[str, Any], model: KernelModel, sequences: Dict[str, MeasureSequence],
                    defaults: Dict[str, Any] = None) -> "ExperimentSpec":
        """
        Build from an ``experiments`` entry::

            {"name": ..., "theorem": "semigroup", "mode": "monotone", "sequence": <name>,
             "test_functions": {"ones": "ones", "bump": {"hat": [0.5, 0.25]}},
             "times": [1.0], "functions": ["ones", "ones"], "mc": {"paths": 100000}}

        ``defaults`` carries run-level settings (n_max, alpha_grid, t_grid).
        """
        defaults = dict(defaults or {})
        allowed = {"name", "theorem", "mode", "sequence", "test_functions", "alpha_grid", "t_grid",
                   "n_min", "n_max", "times", "functions", "v_scale", "mc"}
        unknown = set(block) - allowed
        if unknown:
            raise BadParameters(f"unknown experiment keys {sorted(unknown)}")
        if block.get("sequence") not in sequences:
            raise BadParameters(f"experiment refers to unknown sequence {block.get('sequence')!r}")

        tests = {name: function_from_spec(model, spec) for name, spec in block.get("test_functions", {}).items()}
        times = [float(t) for t in block.get("times", [1.0])]
        functions = block.get("functions")
        if functions is not None:
            functions = [function_from_spec(model, spec) for spec in functions]
        scale = block.get("v_scale", "1+1/n")
        if scale not in ("1+1/n", "1"):
            raise BadParameters(f"v_scale must be '1+1/n' or '1', got {scale!r}")

        return cls(
            name=block.get("name", f"{block['theorem']}_{block.get('mode', 'default')}"),
            model=model,
            sequence=sequences[block["sequence"]],
            theorem=block["theorem"],
            mode=block.get("mode", "default"),
            test_functions=tests,
            alpha_grid=[float(a) for a in block.get("alpha_grid", defaults.get("alpha_grid", config.ALPHA_GRID))],
            t_grid=np.asarray(block.get("t_grid", defaults.get("t_grid", default_t_grid())), dtype=float),
            n_min=block.get("n_min", defaults.get("n_min")),
            n_max=int(block.get("n_max", defaults.get("n_max", config.N_MAX))),
            times=times,
            functions=functions,
            v_scale=(lambda n: 1.0 + 1.0 / n) if scale == "1+1/n" else (lambda n: 1.0),
            mc=block.get("mc"),
        )

    def describe(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "theorem": self.theorem,
            "mode": self.mode,
            "sequence": self.sequence.describe(),
            "test_functions": sorted(self.test_functions),
            "alpha_grid": list(self.alpha_grid),
            "t_grid": {"max": float(self.t_grid.max()), "points": int(self.t_grid.size)},
            "n_range": [self.n_values[0], self.n_values[-1]],
        }


def t_grid_from_text(text: str) -> Sequence[float]:
    """``"T:points"`` -> linspace(0, T, points)."""
    try:
        t_max, points = text.split(":")
        return default_t_grid(float(t_max), int(points))
    except ValueError as exc:
        raise BadParameters(f"t grid must look like 'T:points', got {text!r}") from exc
