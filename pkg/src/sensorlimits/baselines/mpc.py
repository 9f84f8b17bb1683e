"""Kalman filtering plus exhaustive model-predictive control."""

from __future__ import annotations

import numpy as np

from ..environments.base import LinearGaussianSystem
from ..rng import substream

__all__ = ["mpc_kalman_rollout", "kalman_update", "plan_open_loop"]


def kalman_update(mean, cov, obs, C, R):
    """Measurement update; a pseudo-inverse handles singular innovation covariances."""
    s = C @ cov @ C.T + R
    gain = cov @ C.T @ np.linalg.pinv(s)
    mean = mean + gain @ (obs - C @ mean)
    ikc = np.eye(len(mean)) - gain @ C
    cov = ikc @ cov @ ikc.T + gain @ R @ gain.T
    return mean, 0.5 * (cov + cov.T)


def plan_open_loop(system: LinearGaussianSystem, mean, cov, steps: int) -> tuple[int, float]:
    """Best first action over all action sequences of length ``steps``.

    Sequences are scored by the summed belief-expected reward of each
    visited state and chosen action, starting with the current step.  Under
    open-loop propagation the covariance does not depend on the actions, so
    the search is a max over a tree of predicted means.  Ties go to the
    lowest action index.
    """
    n_a = system.n_actions
    shifts = np.stack([system.B @ system.action_vector(a) + system.drift for a in range(n_a)])
    means = [np.asarray(mean, dtype=float)[None, :]]
    covs = [np.asarray(cov, dtype=float)]
    for _ in range(steps - 1):
        nxt = (means[-1] @ system.A.T)[:, None, :] + shifts[None, :, :]
        means.append(nxt.reshape(-1, system.state_dim))
        c = system.A @ covs[-1] @ system.A.T
        if system.process_cov is not None:
            c = c + system.process_cov
        covs.append(c)
    value = np.zeros(n_a**steps)
    q = None
    for k in range(steps - 1, -1, -1):
        rewards = np.stack([system.expected_reward(means[k], covs[k], a) for a in range(n_a)], axis=1)
        q = rewards + value.reshape(-1, n_a)
        value = q.max(axis=1)
    return int(np.argmax(q[0])), float(value[0])


def mpc_kalman_rollout(system: LinearGaussianSystem, n_episodes: int, rng_seed: int,
                       horizon: int | None = None) -> tuple[float, float]:
    """Mean cumulative reward and its standard error over ``n_episodes`` rollouts.

    Episode ``e`` draws its initial state, sensor noise and any process
    noise from RNG substream ``e``.
    """
    h = int(system.horizon if horizon is None else horizon)
    C = np.asarray(system.C, dtype=float)
    R = np.asarray(system.sensor_cov, dtype=float)
    d = system.state_dim
    totals = np.empty(n_episodes)
    for e in range(n_episodes):
        rng = substream(rng_seed, e)
        state = rng.multivariate_normal(system.init_mean, system.init_cov)
        mean = np.asarray(system.init_mean, dtype=float).copy()
        cov = np.asarray(system.init_cov, dtype=float).copy()
        total = 0.0
        for t in range(h):
            noise = rng.multivariate_normal(np.zeros(C.shape[0]), R) if np.any(R) else np.zeros(C.shape[0])
            mean, cov = kalman_update(mean, cov, C @ state + noise, C, R)
            action, _ = plan_open_loop(system, mean, cov, h - t)
            total += float(system.reward(state[None, :], action)[0])
            state = system.A @ state + system.B @ system.action_vector(action) + system.drift
            if system.process_cov is not None:
                state = state + rng.multivariate_normal(np.zeros(d), system.process_cov)
            mean, cov = system.predict(mean, cov, action)
        totals[e] = total
    stderr = float(np.std(totals, ddof=1) / np.sqrt(n_episodes)) if n_episodes > 1 else 0.0
    return float(np.mean(totals)), stderr
