"""Adapters exposing each environment type through a common task interface.

A task describes, for every open-loop action prefix, the expected per-step
reward of each next action and the informativity of the next observation.
Prefixes of length ``t`` are indexed lexicographically: the child of
prefix ``i`` under action ``a`` has index ``i * n_actions + a``.
"""

from __future__ import annotations

import math
from typing import Protocol, runtime_checkable

import numpy as np

from .divergence import FGenerator
from .environments.base import DiscretePOMDP, LinearGaussianSystem, SampledEnvironment
from .informativity import (
    budget_split,
    clamp_loo,
    discrete_informativity_many,
    gaussian_informativity,
    leave_one_out_mi_bound,
    loo_informativity_upper,
    mean_upper_bound,
)
from .rng import substream

__all__ = [
    "TaskInterface",
    "DiscreteTask",
    "GaussianTask",
    "SampledTask",
    "ResourceCapError",
    "prefix_count",
    "prefix_actions",
]

DEFAULT_PREFIX_CAP = 10**6


class ResourceCapError(RuntimeError):
    """Raised when exhaustive prefix enumeration would exceed the configured cap."""


@runtime_checkable
class TaskInterface(Protocol):
    horizon: int
    n_actions: int
    confidence: float

    def expected_rewards(self, t: int) -> np.ndarray:
        """(n_actions**t, n_actions) expected reward at step t for every prefix and action."""

    def informativity(self, t: int, f: FGenerator) -> np.ndarray:
        """(n_actions**t,) informativity of the step-t observation for every prefix."""


def prefix_count(n_actions: int, t: int) -> int:
    return n_actions**t


def prefix_actions(index: int, n_actions: int, t: int) -> tuple[int, ...]:
    """Decode a level-t prefix index into its action tuple."""
    out = []
    for _ in range(t):
        index, a = divmod(index, n_actions)
        out.append(a)
    return tuple(reversed(out))


def check_prefix_cap(n_actions: int, horizon: int, cap: int = DEFAULT_PREFIX_CAP) -> None:
    # the deepest level dominates: n_actions**(T-1) prefixes times n_actions choices
    needed = n_actions**horizon
    if needed > cap:
        raise ResourceCapError(
            f"{n_actions}^{horizon} = {needed} action sequences exceed the cap of {cap}; "
            "lower the horizon or the number of actions, or raise the cap")


def _require_kl(f: FGenerator, route: str) -> None:
    if f.name != "kl":
        raise ValueError(f"{route} informativity is only available for the KL generator, got {f.name!r}")


class DiscreteTask:
    """Exact open-loop beliefs, rewards and informativities of a DiscretePOMDP."""

    confidence = 1.0

    def __init__(self, model: DiscretePOMDP, horizon: int | None = None, prefix_cap: int = DEFAULT_PREFIX_CAP):
        self.model = model
        self.horizon = int(horizon if horizon is not None else model.horizon)
        self.n_actions = model.n_actions
        check_prefix_cap(self.n_actions, self.horizon, prefix_cap)
        self._beliefs = [model.init[None, :].copy()]

    def beliefs(self, t: int) -> np.ndarray:
        while len(self._beliefs) <= t:
            prev = self._beliefs[-1]
            nxt = np.einsum("ps,ast->pat", prev, self.model.transition)
            self._beliefs.append(nxt.reshape(-1, self.model.n_states))
        return self._beliefs[t]

    def expected_rewards(self, t: int) -> np.ndarray:
        return np.clip(self.beliefs(t) @ self.model.reward, 0.0, 1.0)

    def informativity(self, t: int, f: FGenerator) -> np.ndarray:
        return discrete_informativity_many(f, self.beliefs(t), self.model.sensor)


class GaussianTask:
    """Closed-form open-loop Gaussian propagation of a LinearGaussianSystem.

    Open-loop beliefs share one covariance per level because the dynamics
    are affine and no observation is conditioned on.
    """

    confidence = 1.0

    def __init__(self, system: LinearGaussianSystem, horizon: int | None = None,
                 prefix_cap: int = DEFAULT_PREFIX_CAP):
        self.system = system
        self.horizon = int(horizon if horizon is not None else system.horizon)
        self.n_actions = system.n_actions
        check_prefix_cap(self.n_actions, self.horizon, prefix_cap)
        self._means = [np.asarray(system.init_mean, dtype=float)[None, :]]
        self._covs = [np.asarray(system.init_cov, dtype=float)]
        self._rewards: dict[int, np.ndarray] = {}
        shifts = np.stack([system.B @ system.action_vector(a) + system.drift for a in range(self.n_actions)])
        self._shifts = shifts  # (A, d)

    def _extend(self, t: int) -> None:
        s = self.system
        while len(self._means) <= t:
            prev = self._means[-1]
            nxt = (prev @ s.A.T)[:, None, :] + self._shifts[None, :, :]
            self._means.append(nxt.reshape(-1, s.state_dim))
            cov = s.A @ self._covs[-1] @ s.A.T
            if s.process_cov is not None:
                cov = cov + s.process_cov
            self._covs.append(cov)

    def means(self, t: int) -> np.ndarray:
        self._extend(t)
        return self._means[t]

    def covariance(self, t: int) -> np.ndarray:
        self._extend(t)
        return self._covs[t]

    def expected_rewards(self, t: int) -> np.ndarray:
        if t not in self._rewards:
            m, c = self.means(t), self.covariance(t)
            cols = [self.system.expected_reward(m, c, a) for a in range(self.n_actions)]
            self._rewards[t] = np.clip(np.stack(cols, axis=1), 0.0, 1.0)
        return self._rewards[t]

    def informativity(self, t: int, f: FGenerator) -> np.ndarray:
        _require_kl(f, "linear-Gaussian")
        value = gaussian_informativity(self.system, self.covariance(t))
        return np.full(prefix_count(self.n_actions, t), value)


class SampledTask:
    """High-confidence task quantities for a black-box SampledEnvironment.

    Every reward mean uses the tighter of the Hoeffding and Chernoff-Hoeffding
    bounds and every informativity wraps leave-one-out batch estimates with
    Hoeffding's inequality.  The total failure probability ``delta`` is split
    evenly over all of these applications.
    """

    def __init__(self, env: SampledEnvironment, delta: float = 0.05, reward_samples: int = 2000,
                 batch_size: int = 200, num_batches: int = 2000, rng_seed: int = 0,
                 horizon: int | None = None, prefix_cap: int = DEFAULT_PREFIX_CAP):
        self.env = env
        self.horizon = int(horizon if horizon is not None else env.horizon)
        self.n_actions = env.n_actions
        check_prefix_cap(self.n_actions, self.horizon, prefix_cap)
        self.reward_samples = int(reward_samples)
        self.batch_size = int(batch_size)
        self.num_batches = int(num_batches)
        self.seed = int(rng_seed)
        labels = []
        for t in range(self.horizon):
            for p in range(prefix_count(self.n_actions, t)):
                labels.extend(f"reward/t{t}/p{p}/a{a}" for a in range(self.n_actions))
                labels.append(f"mi/t{t}/p{p}")
        self.budget = budget_split(delta, labels)
        self.confidence = self.budget.confidence
        self.diagnostics: dict[str, float] = {}
        self._rewards: dict[int, np.ndarray] = {}
        self._mi: dict[int, np.ndarray] = {}
        self._level_offset = [sum(prefix_count(self.n_actions, s) for s in range(t)) for t in range(self.horizon + 1)]

    def _prefix_id(self, t: int, p: int) -> int:
        return self._level_offset[t] + p

    def expected_rewards(self, t: int) -> np.ndarray:
        if t in self._rewards:
            return self._rewards[t]
        n_prefix = prefix_count(self.n_actions, t)
        out = np.empty((n_prefix, self.n_actions))
        for p in range(n_prefix):
            # reward substreams live far above the batch substreams
            rng = substream(self.seed, 2**48 + self._prefix_id(t, p))
            states = self.env.sample_states(prefix_actions(p, self.n_actions, t), self.reward_samples, rng)
            r = self.env.rewards(states)
            for a in range(self.n_actions):
                out[p, a] = mean_upper_bound(r[:, a], self.budget[f"reward/t{t}/p{p}/a{a}"])
        self._rewards[t] = out
        return out

    def informativity(self, t: int, f: FGenerator) -> np.ndarray:
        _require_kl(f, "sampled")
        if t in self._mi:
            return self._mi[t]
        n_prefix = prefix_count(self.n_actions, t)
        out = np.empty(n_prefix)
        cap = math.log(self.batch_size)
        for p in range(n_prefix):
            est = leave_one_out_mi_bound(self.env, prefix_actions(p, self.n_actions, t), self.batch_size,
                                         self.num_batches, self.seed,
                                         batch_offset=self._prefix_id(t, p) * self.num_batches)
            out[p] = loo_informativity_upper(est, self.batch_size, self.budget[f"mi/t{t}/p{p}"])
            key = f"t{t}/p{p}"
            self.diagnostics[f"loo_mean/{key}"] = float(np.mean(est))
            self.diagnostics[f"loo_clamped_top/{key}"] = float(np.mean(est > cap))
            self.diagnostics[f"loo_clamped_bottom/{key}"] = float(np.mean(est < 0.0))
            self.diagnostics[f"loo_clamped_mean/{key}"] = float(np.mean(clamp_loo(est, self.batch_size)))
        self._mi[t] = out
        return out
