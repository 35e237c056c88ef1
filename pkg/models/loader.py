"""
Build a backend from the ``model`` block of a run config.
"""

from typing import Any, Dict

from models.base_model import KernelModel
from models.chain_model import build_chain
from models.diffusion_model import DiffusionModel

MODEL_KEYS = {
    "chain": {"backend", "Q", "m", "states", "name", "require_irreducible"},
    "diffusion": {"backend", "grid_size", "name"},
}


def load_model(spec: Dict[str, Any]) -> KernelModel:
    """
    Model block forms::

        {"backend": "chain", "Q": [[...]], "m": [...], "states": [...]}
        {"backend": "diffusion", "grid_size": 1000}

    Raises:
        ValueError: On unknown backends or keys (model validation errors propagate)
    """
    if not isinstance(spec, dict):
        raise ValueError(f"model block must be an object, got {type(spec).__name__}")
    backend = spec.get("backend")
    if backend not in MODEL_KEYS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {sorted(MODEL_KEYS)}")
    unknown = set(spec) - MODEL_KEYS[backend]
    if unknown:
        raise ValueError(f"unknown keys in {backend} model block: {sorted(unknown)}")

    if backend == "chain":
        if "Q" not in spec or "m" not in spec:
            raise ValueError("chain model block needs 'Q' and 'm'")
        return build_chain(spec["Q"], spec["m"], spec.get("states"), spec.get("name", "chain"),
                           bool(spec.get("require_irreducible", True)))
    return DiffusionModel(spec.get("grid_size"), spec.get("name", "diffusion"))
