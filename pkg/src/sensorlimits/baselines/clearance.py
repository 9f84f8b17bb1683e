"""Heuristic planner for the obstacle world: pick the primitive with most clearance."""

from __future__ import annotations

import numpy as np

from ..environments.obstacles import ObstacleWorld, point_to_arc_distance
from ..rng import substream

__all__ = ["heuristic_clearance_policy", "choose_primitive", "hit_points", "obstacle_proxies"]


def hit_points(env: ObstacleWorld, obs: np.ndarray, wall_margin: float | None = None) -> np.ndarray:
    """Observed ray endpoints that look like obstacles, shape (k, 2).

    Readings at max range carry no hit.  Readings within ``wall_margin``
    (default ``eta``) of the known wall distance are attributed to the wall.
    """
    obs = np.asarray(obs, dtype=float)
    mask = _hit_mask(env, obs, wall_margin)
    return obs[mask, None] * env.ray_dirs[mask]


def obstacle_proxies(env: ObstacleWorld, obs: np.ndarray) -> np.ndarray:
    """Estimated obstacle centers: each hit point pushed one radius further along its ray."""
    obs = np.asarray(obs, dtype=float)
    mask = _hit_mask(env, obs, None)
    return (obs[mask, None] + env.radius) * env.ray_dirs[mask]


def _hit_mask(env: ObstacleWorld, obs: np.ndarray, wall_margin: float | None) -> np.ndarray:
    margin = env.eta if wall_margin is None else wall_margin
    return obs < np.minimum(env.max_range, env.wall_distance - margin)


def choose_primitive(env: ObstacleWorld, obs: np.ndarray) -> int:
    points = obstacle_proxies(env, obs)
    if len(points) == 0:
        clearance = np.full(len(env.primitives), np.inf)
    else:
        clearance = np.array([point_to_arc_distance(points, prim).min() for prim in env.primitives])
    # argmax returns the first index on ties
    return int(np.argmax(clearance))


def heuristic_clearance_policy(env: ObstacleWorld, n_episodes: int, rng_seed: int) -> tuple[float, float]:
    """Success rate and its standard error; episode ``e`` uses RNG substream ``e``."""
    wins = np.empty(n_episodes)
    for e in range(n_episodes):
        rng = substream(rng_seed, e)
        state = env.sample_states((), 1, rng)
        obs = env.sample_observations(state, rng)[0]
        wins[e] = env.rewards(state)[0, choose_primitive(env, obs)]
    stderr = float(np.std(wins, ddof=1) / np.sqrt(n_episodes)) if n_episodes > 1 else 0.0
    return float(np.mean(wins)), stderr
