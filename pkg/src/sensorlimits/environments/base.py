"""Model containers shared by the benchmark environments."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = ["DiscretePOMDP", "LinearGaussianSystem", "SampledEnvironment"]

_TOL = 1e-12


@dataclass(frozen=True)
class DiscretePOMDP:
    """Finite POMDP with state-observation sensor and per-step rewards in [0, 1].

    ``transition[a, s, s']`` is P(s' | s, a); ``sensor[s, o]`` is the
    probability of observing ``o`` in state ``s``; ``reward[s, a]`` is the
    per-step reward.  The observation at step t is of the state at step t,
    and is seen before the action at step t is chosen.
    """

    transition: np.ndarray
    sensor: np.ndarray
    reward: np.ndarray
    init: np.ndarray
    horizon: int
    name: str = "pomdp"

    def __post_init__(self):
        t = np.array(self.transition, dtype=float)
        o = np.array(self.sensor, dtype=float)
        r = np.array(self.reward, dtype=float)
        p0 = np.array(self.init, dtype=float)
        if t.ndim != 3 or t.shape[1] != t.shape[2]:
            raise ValueError("transition must have shape (A, S, S)")
        n_actions, n_states, _ = t.shape
        if o.ndim != 2 or o.shape[0] != n_states:
            raise ValueError("sensor must have shape (S, O)")
        if r.shape != (n_states, n_actions):
            raise ValueError("reward must have shape (S, A)")
        if p0.shape != (n_states,):
            raise ValueError("init must have shape (S,)")
        for name, arr in (("transition", t), ("sensor", o), ("init", p0)):
            if np.any(arr < 0):
                raise ValueError(f"{name} has negative entries")
        if np.any(np.abs(t.sum(axis=2) - 1.0) > _TOL):
            raise ValueError("transition rows must sum to 1")
        if np.any(np.abs(o.sum(axis=1) - 1.0) > _TOL):
            raise ValueError("sensor rows must sum to 1")
        if abs(p0.sum() - 1.0) > _TOL:
            raise ValueError("init must sum to 1")
        if np.any(r < 0) or np.any(r > 1):
            raise ValueError("rewards must lie in [0, 1]")
        if int(self.horizon) < 1:
            raise ValueError("horizon must be positive")
        for arr in (t, o, r, p0):
            arr.flags.writeable = False
        object.__setattr__(self, "transition", t)
        object.__setattr__(self, "sensor", o)
        object.__setattr__(self, "reward", r)
        object.__setattr__(self, "init", p0)
        object.__setattr__(self, "horizon", int(self.horizon))

    @property
    def n_states(self) -> int:
        return self.transition.shape[1]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[0]

    @property
    def n_obs(self) -> int:
        return self.sensor.shape[1]

    def with_horizon(self, horizon: int) -> "DiscretePOMDP":
        return DiscretePOMDP(self.transition, self.sensor, self.reward, self.init, horizon, self.name)

    def with_sensor(self, sensor) -> "DiscretePOMDP":
        return DiscretePOMDP(self.transition, sensor, self.reward, self.init, self.horizon, self.name)


@dataclass(frozen=True)
class LinearGaussianSystem:
    """Affine dynamics with a linear-Gaussian sensor and finite action set.

    s' = A s + B a + drift (+ N(0, process_cov)),  o = C s + N(0, sensor_cov).

    ``expected_reward(means, cov, action)`` returns E[r(s, action)] for each
    row of ``means`` under s ~ N(mean, cov); ``reward(states, action)``
    evaluates the reward at concrete states.
    """

    A: np.ndarray
    B: np.ndarray
    drift: np.ndarray
    C: np.ndarray
    sensor_cov: np.ndarray
    init_mean: np.ndarray
    init_cov: np.ndarray
    actions: tuple
    expected_reward: Callable = field(repr=False)
    reward: Callable = field(repr=False)
    horizon: int = 5
    process_cov: np.ndarray | None = None
    name: str = "linear-gaussian"

    def __post_init__(self):
        if len(self.actions) == 0:
            raise ValueError("action set must be nonempty")
        for label in ("init_cov", "sensor_cov"):
            m = np.asarray(getattr(self, label), dtype=float)
            if not np.allclose(m, m.T) or np.min(np.linalg.eigvalsh(m)) < -1e-12:
                raise ValueError(f"{label} must be symmetric PSD")

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    def action_vector(self, index: int) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.actions[index], dtype=float))

    def predict(self, mean, cov, action_index: int):
        """One open-loop propagation step of a Gaussian belief."""
        a = self.action_vector(action_index)
        mean = self.A @ mean + self.B @ a + self.drift
        cov = self.A @ cov @ self.A.T
        if self.process_cov is not None:
            cov = cov + self.process_cov
        return mean, cov


class SampledEnvironment(ABC):
    """Black-box environment: samplers plus an evaluable sensor log-density.

    Samplers receive an explicit ``numpy.random.Generator`` so concurrent
    use with distinct substreams is race-free.
    """

    horizon: int = 1
    actions: Sequence

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @abstractmethod
    def sample_states(self, prefix_actions, n: int, rng: np.random.Generator) -> np.ndarray:
        """States at step len(prefix_actions) under the open-loop prefix."""

    @abstractmethod
    def sample_observations(self, states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        ...

    @abstractmethod
    def log_density_pairwise(self, obs: np.ndarray, states: np.ndarray) -> np.ndarray:
        """Matrix ``L[i, j] = log sigma(obs[i] | states[j])``."""

    @abstractmethod
    def rewards(self, states: np.ndarray) -> np.ndarray:
        """Reward of every action at every state, shape (n, n_actions), in [0, 1]."""
