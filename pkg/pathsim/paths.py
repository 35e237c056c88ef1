"""
Chain Paths
Exact event-driven sampling of killed chain trajectories, the additive
functional A_t = int_0^t a(X_s) ds of a measure and its right-continuous
inverse tau_t = inf{s : A_s > t}.

Single paths (ChainPath / PcafPath) are used for inspection and the exact
path-level identities; PathBatch holds many padded paths for Monte Carlo.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

import config
from measures.smooth_measure import SmoothMeasure
from models.chain_model import ChainModel
from utils.logger import get_logger

logger = get_logger("tclab.pathsim")

CEMETERY = -1


@dataclass(frozen=True, eq=False)
class ChainPath:
    """
    Attributes:
        jump_times: 0 = s_0 < s_1 < ... < s_J
        states: x_0, ..., x_{J-1}; x_j is held on [s_j, s_{j+1})
        lifetime: s_J when killed; the cap otherwise
        killed: Whether the path reached the cemetery
    """

    jump_times: np.ndarray
    states: np.ndarray
    lifetime: float
    killed: bool

    def state_at(self, time: float) -> int:
        """State at the given time (CEMETERY at or after the lifetime)."""
        if not np.isfinite(time) or time >= self.lifetime:
            return CEMETERY
        return int(self.states[np.searchsorted(self.jump_times, time, side="right") - 1])


@dataclass(frozen=True, eq=False)
class PcafPath:
    """
    Piecewise-linear A on the breakpoints of a path.

    Attributes:
        times: Breakpoints s_0, ..., s_J
        values: A(s_0) = 0, ..., A(s_J) = A_inf
        slopes: a(x_j) on [s_j, s_{j+1})
    """

    times: np.ndarray
    values: np.ndarray
    slopes: np.ndarray

    @property
    def total(self) -> float:
        return float(self.values[-1])

    def at(self, time: float) -> float:
        if time >= self.times[-1]:
            return self.total
        j = int(np.searchsorted(self.times, time, side="right") - 1)
        return float(self.values[j] + self.slopes[j] * (time - self.times[j]))


def _jump_table(model: ChainModel) -> Tuple[np.ndarray, np.ndarray]:
    """Holding rates and cumulative jump probabilities; the last column is killing."""
    Q = model.generator
    rates = -np.diag(Q)
    jumps = Q / rates[:, np.newaxis]
    np.fill_diagonal(jumps, 0.0)
    killing = np.clip(1.0 - jumps.sum(axis=1), 0.0, None)
    cumulative = np.cumsum(np.column_stack([jumps, killing]), axis=1)
    cumulative[:, -1] = 1.0
    return rates, cumulative


def lifetime_cap(model: ChainModel) -> float:
    """``config.MC_LIFETIME_CAP`` expected lifetimes of the longest-lived state."""
    return float(config.MC_LIFETIME_CAP * np.max(model.expected_lifetime()))


def sample_path(model: ChainModel, x0: int, horizon: float = None, seed=None) -> ChainPath:
    """
    Sample one path from state index x0 until killing (or the horizon).

    Args:
        model: Chain backend
        x0: Starting state index
        horizon: Stop time (lifetime_cap by default)
        seed: Seed or numpy Generator

    Returns:
        ChainPath
    """
    if not 0 <= int(x0) < model.size:
        raise ValueError(f"starting state {x0} is not a state index")
    horizon = lifetime_cap(model) if horizon is None else float(horizon)
    if horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    rates, cumulative = _jump_table(model)

    times, states = [0.0], []
    state, now = int(x0), 0.0
    while True:
        states.append(state)
        now += rng.exponential(1.0 / rates[state])
        if now >= horizon:
            times.append(horizon)
            return ChainPath(np.asarray(times), np.asarray(states, dtype=int), horizon, False)
        times.append(now)
        target = int(np.searchsorted(cumulative[state], rng.random(), side="right"))
        if target >= model.size:
            return ChainPath(np.asarray(times), np.asarray(states, dtype=int), now, True)
        state = target


def state_density(model: ChainModel, mu: SmoothMeasure) -> np.ndarray:
    """``a = mu / m`` per state."""
    return mu.masses(model) / model.reference_weights


def pcaf(path: ChainPath, mu_density) -> PcafPath:
    """
    Additive functional of a measure along a path.

    Args:
        path: Sampled path
        mu_density: a = mu/m per state (see state_density)
    """
    slopes = np.asarray(mu_density, dtype=float)[path.states]
    values = np.r_[0.0, np.cumsum(slopes * np.diff(path.jump_times))]
    return PcafPath(path.jump_times, values, slopes)


def inverse_pcaf(functional: PcafPath, t: float) -> float:
    """
    ``tau_t = inf{s : A_s > t}``; +inf when ``A_inf <= t``.

    Flat stretches of A become jumps of tau.
    """
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    i = int(np.searchsorted(functional.values, t, side="right"))
    if i >= functional.values.size:
        return float("inf")
    j = i - 1
    return float(functional.times[j] + (t - functional.values[j]) / functional.slopes[j])


def timechanged_state(path: ChainPath, functional: PcafPath, t: float) -> int:
    """State of the time-changed path at new time t."""
    return path.state_at(inverse_pcaf(functional, t))


def timechanged_segments(path: ChainPath, functional: PcafPath) -> List[Tuple[float, float, int]]:
    """The time-changed path as (start, end, state) on the new clock; flat stretches vanish."""
    segments = []
    for j, slope in enumerate(functional.slopes):
        if slope > 0:
            segments.append((float(functional.values[j]), float(functional.values[j + 1]), int(path.states[j])))
    return segments


def inverse_identity_residuals(functional: PcafPath, t_values, s_values) -> dict:
    """
    Generalized-inverse identities: ``A(tau_t) = t`` for t below A_inf and
    ``tau(A_s) >= s``. Returns the worst violations.
    """
    worst_forward = 0.0
    for t in t_values:
        tau = inverse_pcaf(functional, t)
        if np.isfinite(tau):
            worst_forward = max(worst_forward, abs(functional.at(tau) - t))
    worst_backward = 0.0
    for s in s_values:
        tau = inverse_pcaf(functional, functional.at(s))
        if np.isfinite(tau):
            worst_backward = max(worst_backward, s - tau)
    return {"forward": worst_forward, "backward": worst_backward}


# ----------------------------------------------------------------------
# Batches
# ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class PathBatch:
    """
    Padded batch of paths.

    Attributes:
        times: (n, J + 1) breakpoints, padded with the lifetime
        states: (n, J) states, CEMETERY after killing
        lifetimes: (n,) lifetimes
        truncated: (n,) paths stopped at the cap
    """

    times: np.ndarray
    states: np.ndarray
    lifetimes: np.ndarray
    truncated: np.ndarray

    @property
    def size(self) -> int:
        return self.lifetimes.size

    def functional(self, density: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Slopes (n, J) and breakpoint values (n, J + 1) of A; zero slope at the cemetery."""
        extended = np.r_[np.asarray(density, dtype=float), 0.0]
        slopes = extended[self.states]
        values = np.zeros(self.times.shape)
        values[:, 1:] = np.cumsum(slopes * np.diff(self.times, axis=1), axis=1)
        return slopes, values

    def state_at(self, time: float) -> np.ndarray:
        """State of every path at a fixed original time."""
        if self.states.shape[1] == 0:
            return np.full(self.size, CEMETERY)
        index = np.clip((self.times <= time).sum(axis=1) - 1, 0, self.states.shape[1] - 1)
        states = self.states[np.arange(self.size), index]
        return np.where(time < self.lifetimes, states, CEMETERY)

    def timechanged_state(self, values: np.ndarray, t) -> np.ndarray:
        """
        ``X_{tau_t}`` for every path: the state of the first segment where A
        exceeds t (per-path t allowed); CEMETERY when ``A_inf <= t``.
        """
        t = np.broadcast_to(np.asarray(t, dtype=float), (self.size,))
        count = (values <= t[:, np.newaxis]).sum(axis=1)
        alive = count < values.shape[1]
        segment = np.clip(count - 1, 0, max(self.states.shape[1] - 1, 0))
        states = np.full(self.size, CEMETERY)
        if self.states.shape[1]:
            states[alive] = self.states[np.arange(self.size), segment][alive]
        return states


def sample_batch(model: ChainModel, starts: np.ndarray, rng: np.random.Generator,
                 cap: Optional[float] = None) -> PathBatch:
    """Sample len(starts) independent paths step by step."""
    starts = np.asarray(starts, dtype=int)
    n = starts.size
    cap = lifetime_cap(model) if cap is None else cap
    rates, cumulative = _jump_table(model)

    state = starts.copy()
    now = np.zeros(n)
    alive = np.ones(n, dtype=bool)
    truncated = np.zeros(n, dtype=bool)
    time_columns = [now.copy()]
    state_columns = []

    while alive.any():
        current = np.where(alive, state, CEMETERY)
        state_columns.append(current)
        active = np.flatnonzero(alive)
        hold = rng.exponential(1.0 / rates[state[active]])
        now[active] += hold
        over = now[active] >= cap
        if over.any():
            stopped = active[over]
            now[stopped] = cap
            truncated[stopped] = True
            alive[stopped] = False
            active = active[~over]
        draws = rng.random(active.size)
        targets = (draws[:, np.newaxis] >= cumulative[state[active]]).sum(axis=1)
        killed = targets >= model.size
        alive[active[killed]] = False
        state[active[~killed]] = targets[~killed]
        time_columns.append(now.copy())

    times = np.column_stack(time_columns) if n else np.zeros((0, 1))
    states = np.column_stack(state_columns) if state_columns else np.zeros((n, 0), dtype=int)
    if truncated.any():
        logger.warning(f"{int(truncated.sum())} of {n} paths hit the lifetime cap {cap:.3g}")
    return PathBatch(times, states, now.copy(), truncated)
