"""
Linear Algebra Helpers
Checked dense solves and norms shared by every backend.
"""

import threading
from collections import OrderedDict
from typing import Callable, Hashable, Optional

import numpy as np
from scipy import linalg

import config
from utils.errors import SingularSystem
from utils.logger import get_logger

logger = get_logger("tclab.linalg")


def sup_norm(values) -> float:
    """Sup norm of a vector (0 for empty input)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0
    return float(np.max(np.abs(values)))


def operator_norm(matrix) -> float:
    """Operator norm induced by the sup norm (max absolute row sum)."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.size == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(matrix), axis=1)))


def checked_solve(A, b, tol: float = None, context: str = "linear system") -> np.ndarray:
    """
    Solve ``A x = b`` by LU factorization with a residual check.

    The residual is compared against ``tol * ||b||``; when exceeded, one step
    of iterative refinement is applied.

    Args:
        A: Square matrix
        b: Right-hand side (vector or matrix)
        tol: Relative residual tolerance (config.SOLVE_RESIDUAL_TOL by default)
        context: Label used in error messages

    Returns:
        Solution array with the shape of ``b``

    Raises:
        SingularSystem: If the matrix is singular or the solution is not finite
    """
    tol = config.SOLVE_RESIDUAL_TOL if tol is None else tol
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)

    if A.shape[0] == 0:
        return np.zeros_like(b)

    try:
        lu, piv = linalg.lu_factor(A, check_finite=True)
    except (linalg.LinAlgError, ValueError) as e:
        raise SingularSystem(f"{context}: factorization failed ({e})") from e

    pivots = np.abs(np.diag(lu))
    if pivots.min() <= np.finfo(float).eps * max(pivots.max(), 1.0):
        raise SingularSystem(f"{context}: matrix is numerically singular")

    x = linalg.lu_solve((lu, piv), b)
    scale = max(sup_norm(b), np.finfo(float).tiny)
    residual = sup_norm(A @ x - b)

    if residual > tol * scale:
        x = x + linalg.lu_solve((lu, piv), b - A @ x)
        residual = sup_norm(A @ x - b)
        if residual > tol * scale:
            logger.debug(f"{context}: residual {residual:.2e} above {tol:.0e}·‖b‖ after refinement")

    if not np.all(np.isfinite(x)):
        raise SingularSystem(f"{context}: solution is not finite")

    return x


def matrix_rank(matrix, tol: float = None) -> int:
    """Numerical rank with a relative singular-value cutoff."""
    tol = config.RANK_TOL if tol is None else tol
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.size == 0:
        return 0
    s = linalg.svdvals(matrix)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def column_space(matrix, tol: float = None) -> np.ndarray:
    """Orthonormal basis of the column space (possibly with zero columns)."""
    tol = config.RANK_TOL if tol is None else tol
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    u, s, _ = linalg.svd(matrix)
    if s.size == 0 or s[0] == 0:
        return np.zeros((matrix.shape[0], 0))
    rank = int(np.sum(s > tol * s[0]))
    return u[:, :rank]


def same_column_space(a, b, tol: float = None) -> bool:
    """True when the two matrices span the same column space."""
    tol = config.RANK_TOL if tol is None else tol
    qa, qb = column_space(a, tol), column_space(b, tol)
    if qa.shape[1] != qb.shape[1]:
        return False
    if qa.shape[1] == 0:
        return True
    proj_a = qa @ qa.T
    proj_b = qb @ qb.T
    return bool(np.max(np.abs(proj_a - proj_b)) <= max(tol * 1e3, 1e-8))


class OperatorCache:
    """
    Least-recently-used store of read-only matrices, keyed by parameter.

    Args:
        maxsize: Entries kept (config.OPERATOR_CACHE_SIZE by default)
    """

    def __init__(self, maxsize: int = None):
        self.maxsize = int(config.OPERATOR_CACHE_SIZE if maxsize is None else maxsize)
        if self.maxsize < 1:
            raise ValueError(f"cache size must be >= 1, got {self.maxsize}")
        self._entries: "OrderedDict[Hashable, np.ndarray]" = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key: Hashable) -> Optional[np.ndarray]:
        with self._lock:
            value = self._entries.get(key)
            if value is not None:
                self._entries.move_to_end(key)
            return value

    def put(self, key: Hashable, value: np.ndarray) -> np.ndarray:
        """Store value unless key is present; returns the stored entry."""
        with self._lock:
            if key in self._entries:
                self._entries.move_to_end(key)
                return self._entries[key]
            self._entries[key] = value
            if len(self._entries) > self.maxsize:
                self._entries.popitem(last=False)
            return value

    def get_or_compute(self, key: Hashable, compute: Callable[[], np.ndarray]) -> np.ndarray:
        cached = self.get(key)
        if cached is not None:
            return cached
        return self.put(key, compute())

    def __getstate__(self):
        # locks cannot be pickled (multiprocessing workers); recreate on load
        state = self.__dict__.copy()
        del state["_lock"]
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: Hashable) -> bool:
        return key in self._entries
