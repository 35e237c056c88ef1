"""
Monte Carlo Estimators
Path-level estimates of the time-changed semigroup and resolvent, the
alpha-potential of the additive functional and finite-dimensional
distributions, each with its standard error.

Paths are split into one contiguous chunk per worker. Worker w draws from a
Philox stream seeded by the w-th child of SeedSequence(seed) and samples its
chunk in batches of config.MC_BATCH_SIZE; chunks are concatenated in worker
order, so results depend only on (seed, paths, workers).
"""

import multiprocessing
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, NamedTuple, Sequence, Tuple, Union

import numpy as np

import config
from measures.smooth_measure import SmoothMeasure
from models.chain_model import ChainModel
from pathsim.paths import PathBatch, lifetime_cap, sample_batch, state_density
from utils.errors import BadParameters
from utils.logger import get_logger

logger = get_logger("tclab.pathsim")


class McEstimate(NamedTuple):
    estimate: float
    stderr: float
    n_paths: int
    truncated: int
    mass_factor: float = 1.0

    def z(self, exact: float) -> float:
        """Standardised distance to an exact value."""
        if self.stderr == 0:
            return 0.0 if np.isclose(self.estimate, exact, rtol=0.0, atol=1e-14) else float("inf")
        return float((self.estimate - exact) / self.stderr)


class ResolventEstimates(NamedTuple):
    randomized: McEstimate
    functional: McEstimate

    def agreement_z(self) -> float:
        """Difference of the two estimators over their combined standard error."""
        combined = np.hypot(self.randomized.stderr, self.functional.stderr)
        gap = self.randomized.estimate - self.functional.estimate
        if combined == 0:
            return 0.0 if abs(gap) <= 1e-14 else float("inf")
        return float(gap / combined)


@dataclass(frozen=True, eq=False)
class SimulationTask:
    """Everything a worker needs; plain data so it pickles."""

    model: ChainModel
    start: Union[int, np.ndarray]
    statistic: Callable[[PathBatch, np.random.Generator, Dict[str, Any]], np.ndarray]
    params: Dict[str, Any] = field(default_factory=dict)
    cap: float = float("inf")

    def starts(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if np.ndim(self.start) == 0:
            return np.full(size, int(self.start))
        return rng.choice(self.model.size, size=size, p=self.start)


def _run_chunk(task: SimulationTask, seed: np.random.SeedSequence, n: int) -> Tuple[np.ndarray, int]:
    rng = np.random.Generator(np.random.Philox(seed))
    samples, truncated = [], 0
    for size in _batch_sizes(n):
        batch = sample_batch(task.model, task.starts(rng, size), rng, task.cap)
        samples.append(task.statistic(batch, rng, task.params))
        truncated += int(batch.truncated.sum())
    return (np.concatenate(samples) if samples else np.zeros(0)), truncated


def _batch_sizes(n: int):
    full, rest = divmod(n, config.MC_BATCH_SIZE)
    return [config.MC_BATCH_SIZE] * full + ([rest] if rest else [])


def simulate(task: SimulationTask, n_paths: int, seed: int, workers: int) -> Tuple[np.ndarray, int]:
    """
    Per-path samples of task.statistic over n_paths paths.

    Returns:
        (samples in worker order, number of truncated paths)
    """
    if n_paths < config.MC_MIN_PATHS:
        raise BadParameters(f"need at least {config.MC_MIN_PATHS} paths, got {n_paths}")
    if workers < 1:
        raise BadParameters(f"workers must be >= 1, got {workers}")
    children = np.random.SeedSequence(seed).spawn(workers)
    chunks = [len(part) for part in np.array_split(np.arange(n_paths), workers)]
    jobs = [(task, child, size) for child, size in zip(children, chunks)]

    if workers == 1:
        results = [_run_chunk(*job) for job in jobs]
    else:
        with multiprocessing.Pool(processes=workers) as pool:
            results = pool.starmap(_run_chunk, jobs)

    samples = np.concatenate([r[0] for r in results])
    truncated = sum(r[1] for r in results)
    return samples, truncated


def _estimate(samples: np.ndarray, truncated: int, factor: float = 1.0) -> McEstimate:
    n = samples.size
    stderr = float(samples.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return McEstimate(factor * float(samples.mean()), factor * stderr, n, truncated, factor)


def _defaults(n_paths, seed, workers):
    return (config.MC_PATHS if n_paths is None else int(n_paths),
            config.MC_SEED if seed is None else int(seed),
            config.MC_WORKERS if workers is None else int(workers))


def _extended(model: ChainModel, u) -> np.ndarray:
    """Values on the states with u(cemetery) = 0 appended."""
    return np.r_[model.evaluate(u, model.points), 0.0]


def _start_index(model: ChainModel, x) -> int:
    x = int(x)
    if not 0 <= x < model.size:
        raise BadParameters(f"starting state {x} is not a state index")
    return x


# ----------------------------------------------------------------------
# Per-path statistics (module level so worker processes can import them)
# ----------------------------------------------------------------------
def _semigroup_statistic(batch: PathBatch, rng, params) -> np.ndarray:
    _, values = batch.functional(params["density"])
    return params["u"][batch.timechanged_state(values, params["t"])]


def _randomized_resolvent_statistic(batch: PathBatch, rng, params) -> np.ndarray:
    alpha = params["alpha"]
    _, values = batch.functional(params["density"])
    if alpha == 0:
        return _functional_integral(batch, values, params["u"], 0.0)
    clock = rng.exponential(1.0 / alpha, size=batch.size)
    return params["u"][batch.timechanged_state(values, clock)] / alpha


def _functional_integral(batch: PathBatch, values: np.ndarray, u: np.ndarray, alpha: float) -> np.ndarray:
    # int exp(-alpha A_s) u(X_s) dA_s, exact on each holding interval
    if alpha == 0:
        weights = np.diff(values, axis=1)
    else:
        weights = -np.diff(np.exp(-alpha * values), axis=1) / alpha
    return (u[batch.states] * weights).sum(axis=1)


def _functional_resolvent_statistic(batch: PathBatch, rng, params) -> np.ndarray:
    _, values = batch.functional(params["density"])
    return _functional_integral(batch, values, params["u"], params["alpha"])


def _apotential_statistic(batch: PathBatch, rng, params) -> np.ndarray:
    alpha = params["alpha"]
    slopes, _ = batch.functional(params["density"])
    if alpha == 0:
        durations = np.diff(batch.times, axis=1)
    else:
        durations = -np.diff(np.exp(-alpha * batch.times), axis=1) / alpha
    return (params["u"][batch.states] * slopes * durations).sum(axis=1)


def _fdd_statistic(batch: PathBatch, rng, params) -> np.ndarray:
    _, values = batch.functional(params["density"])
    product = np.ones(batch.size)
    for t, u in zip(params["times"], params["functions"]):
        product *= u[batch.timechanged_state(values, t)]
    return product


def _lifetime_statistic(batch: PathBatch, rng, params) -> np.ndarray:
    return batch.lifetimes.copy()


def _transition_statistic(batch: PathBatch, rng, params) -> np.ndarray:
    return params["u"][batch.state_at(params["t"])]


# ----------------------------------------------------------------------
# Estimators
# ----------------------------------------------------------------------
def _run(model: ChainModel, start, statistic, params, n_paths, seed, workers, factor: float = 1.0) -> McEstimate:
    n_paths, seed, workers = _defaults(n_paths, seed, workers)
    task = SimulationTask(model, start, statistic, params, lifetime_cap(model))
    samples, truncated = simulate(task, n_paths, seed, workers)
    estimate = _estimate(samples, truncated, factor)
    logger.debug(f"{statistic.__name__}: {estimate.estimate:.6g} +- {estimate.stderr:.2g} "
                 f"({n_paths} paths, {workers} workers, {truncated} truncated)")
    return estimate


def _zero(n_paths, factor: float = 1.0) -> McEstimate:
    n_paths, _, _ = _defaults(n_paths, None, None)
    return McEstimate(0.0, 0.0, n_paths, 0, factor)


def mc_semigroup(model: ChainModel, mu: SmoothMeasure, t: float, u, x: int,
                 n_paths: int = None, seed: int = None, workers: int = None) -> McEstimate:
    """Estimate of ``P_t u(x) = E_x[u(X_{tau_t})]``."""
    if t < 0:
        raise BadParameters(f"t must be nonnegative, got {t}")
    u_ext = _extended(model, u)
    if not np.any(u_ext):
        return _zero(n_paths)
    params = {"density": state_density(model, mu), "t": float(t), "u": u_ext}
    return _run(model, _start_index(model, x), _semigroup_statistic, params, n_paths, seed, workers)


def mc_resolvent(model: ChainModel, mu: SmoothMeasure, alpha: float, u, x: int,
                 n_paths: int = None, seed: int = None, workers: int = None) -> ResolventEstimates:
    """
    Two estimates of ``R_alpha u(x)``: ``u(X_{tau_T}) / alpha`` with an
    independent ``T ~ Exp(alpha)``, and the exact per-path integral
    ``int exp(-alpha A_s) u(X_s) dA_s``. Both use the same paths.
    """
    if alpha < 0:
        raise BadParameters(f"alpha must be nonnegative, got {alpha}")
    u_ext = _extended(model, u)
    if not np.any(u_ext):
        return ResolventEstimates(_zero(n_paths), _zero(n_paths))
    params = {"density": state_density(model, mu), "alpha": float(alpha), "u": u_ext}
    start = _start_index(model, x)
    randomized = _run(model, start, _randomized_resolvent_statistic, params, n_paths, seed, workers)
    functional = _run(model, start, _functional_resolvent_statistic, params, n_paths, seed, workers)
    return ResolventEstimates(randomized, functional)


def mc_apotential(model: ChainModel, mu: SmoothMeasure, alpha: float, u, x: int,
                  n_paths: int = None, seed: int = None, workers: int = None) -> McEstimate:
    """Estimate of ``U_alpha^A u(x) = E_x[int exp(-alpha t) u(X_t) dA_t]``."""
    if alpha < 0:
        raise BadParameters(f"alpha must be nonnegative, got {alpha}")
    u_ext = _extended(model, u)
    density = state_density(model, mu)
    if not np.any(u_ext[:-1] * density):
        return _zero(n_paths)
    params = {"density": density, "alpha": float(alpha), "u": u_ext}
    return _run(model, _start_index(model, x), _apotential_statistic, params, n_paths, seed, workers)


def mc_fdd(model: ChainModel, mu_init: SmoothMeasure, mu: SmoothMeasure, times: Sequence[float],
           functions: Sequence[Any], n_paths: int = None, seed: int = None, workers: int = None) -> McEstimate:
    """
    Estimate of ``E^{mu_init}[u_0(X_{tau_0}) u_1(X_{tau_{t_1}}) ... u_k(X_{tau_{t_k}})]``.

    mu_init is normalised to a probability; its total mass is reported as
    the mass factor and multiplies the estimate.
    """
    times = [float(t) for t in times]
    if len(functions) != len(times) + 1:
        raise BadParameters(f"need {len(times) + 1} functions for {len(times)} times, got {len(functions)}")
    masses = mu_init.masses(model)
    total = float(masses.sum())
    if total <= 0:
        raise BadParameters("initial measure has zero mass")
    params = {
        "density": state_density(model, mu),
        "times": [0.0] + times,
        "functions": [_extended(model, u) for u in functions],
    }
    if any(not np.any(u) for u in params["functions"]):
        return _zero(n_paths, total)
    return _run(model, masses / total, _fdd_statistic, params, n_paths, seed, workers, total)


def mc_lifetime(model: ChainModel, x: int, n_paths: int = None, seed: int = None,
                workers: int = None) -> McEstimate:
    """Estimate of ``E_x[zeta]``."""
    return _run(model, _start_index(model, x), _lifetime_statistic, {}, n_paths, seed, workers)


def mc_transition(model: ChainModel, t: float, u, x: int, n_paths: int = None, seed: int = None,
                  workers: int = None) -> McEstimate:
    """Estimate of ``P_t u(x) = E_x[u(X_t)]`` for the untime-changed chain."""
    u_ext = _extended(model, u)
    if not np.any(u_ext):
        return _zero(n_paths)
    return _run(model, _start_index(model, x), _transition_statistic, {"t": float(t), "u": u_ext},
                n_paths, seed, workers)
