"""
Base Kernel Model
Defines the interface that both backends (finite chain, killed Brownian
motion) implement.
"""

from abc import ABC, abstractmethod
from typing import Any, Dict

import numpy as np

from models.functions import FunctionOnX


class KernelModel(ABC):
    """
    Abstract transient sub-Markovian backend.

    A model exposes its evaluation points, the reference measure on them and
    the alpha-order Green kernel ``G_alpha(x, y)`` taken with respect to the
    reference measure. Models are immutable after construction.
    """

    backend: str = "abstract"

    def __init__(self, name: str):
        self.name = name

    @property
    @abstractmethod
    def points(self) -> np.ndarray:
        """Evaluation points (chain state indices or interior grid)."""

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    @abstractmethod
    def reference_weights(self) -> np.ndarray:
        """Weights of the reference measure m on the evaluation points."""

    @abstractmethod
    def kernel(self, x, y, alpha: float = 0.0) -> np.ndarray:
        """
        Matrix of ``G_alpha(x_i, y_j)``.

        Args:
            x: Row points
            y: Column points
            alpha: Rate >= 0

        Returns:
            Array of shape (len(x), len(y))
        """

    @abstractmethod
    def evaluate(self, u, at) -> np.ndarray:
        """Values of a function u at the given points."""

    @abstractmethod
    def hitting_extension(self, support, values, at=None, alpha: float = 0.0) -> np.ndarray:
        """
        Values at ``at`` of ``E_x[exp(-alpha sigma_F) u(X_{sigma_F})]``.

        Args:
            support: Points of the closed set F (sorted)
            values: Values of u on those points
            at: Evaluation points (model points by default)
            alpha: Rate >= 0

        Returns:
            Array of extension values
        """

    @abstractmethod
    def boundary_report(self, values) -> Dict[str, Any]:
        """Decay and continuity diagnostics for the C0 class."""

    def is_c0(self, values) -> bool:
        return bool(self.boundary_report(values)["c0"])

    def reference_functional(self, u) -> float:
        """``<m, u>`` for a function given by its values on the points."""
        values = self.evaluate(u, self.points)
        return float(np.dot(self.reference_weights, values))

    def wrap(self, values, function_class: str = "Bb", evaluator=None) -> FunctionOnX:
        return FunctionOnX(np.asarray(values, dtype=float), function_class, evaluator)

    def describe(self) -> Dict[str, Any]:
        """Serializable description used in reports."""
        return {"backend": self.backend, "name": self.name, "size": self.size}

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__}: {self.name} ({self.size} points)>"
