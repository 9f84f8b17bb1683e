"""One-step obstacle avoidance with a noisy planar depth sensor.

Six circular obstacles are dropped uniformly in a band in front of a robot
at the origin facing +y.  The robot reads ``n_rays`` depth values spread
over a 90 degree field of view, then commits to one of ten arc-shaped
motion primitives.  Reward is 1 for a collision-free primitive and 0
otherwise.

Per-ray sensor model: with probability ``p_miss`` the ray reports
``max_range``; otherwise it reports the true distance plus N(0, eta^2)
noise.  Noisy readings beyond ``max_range`` are reported as ``max_range``
and readings below zero as zero, so each ray's law is a density on
(0, max_range) plus point masses at both ends.  ``log_density_pairwise``
evaluates that law with respect to Lebesgue measure plus the two atoms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr
from scipy.stats import norm

from .base import SampledEnvironment

__all__ = ["ObstacleWorld", "obstacle_world", "MotionPrimitive", "point_to_arc_distance"]

WORKSPACE_X = (-1.0, 1.0)
WORKSPACE_Y = (-0.1, 1.2)
CENTER_X = (-1.0, 1.0)
CENTER_Y = (0.9, 1.1)


@dataclass(frozen=True)
class MotionPrimitive:
    """Constant-curvature arc from the origin, initially heading +y.

    ``turn`` is the total heading change in radians; positive turns toward +x.
    """

    turn: float
    length: float

    @property
    def curvature(self) -> float:
        return self.turn / self.length

    def points(self, n: int) -> np.ndarray:
        s = np.linspace(0.0, self.length, n)
        k = self.curvature
        if abs(k) < 1e-12:
            return np.stack([np.zeros_like(s), s], axis=1)
        return np.stack([(1.0 - np.cos(k * s)) / k, np.sin(k * s) / k], axis=1)

    def end(self) -> np.ndarray:
        return self.points(2)[-1]


def point_to_arc_distance(points: np.ndarray, prim: MotionPrimitive) -> np.ndarray:
    """Exact Euclidean distance from each point (..., 2) to the primitive's path."""
    p = np.asarray(points, dtype=float)
    k = prim.curvature
    start = np.zeros(2)
    end = prim.end()
    if abs(k) < 1e-12:
        # straight segment from start to end
        d = end - start
        t = np.clip((p @ d) / (d @ d), 0.0, 1.0)
        proj = t[..., None] * d
        return np.linalg.norm(p - proj, axis=-1)
    radius = 1.0 / abs(k)
    center = np.array([1.0 / k, 0.0])
    rel = p - center
    ang = np.arctan2(rel[..., 1], rel[..., 0])
    start_ang = math.atan2(-center[1], -center[0])
    # turning toward +x (k > 0) sweeps clockwise around the center
    sweep = -abs(prim.turn) if k > 0 else abs(prim.turn)
    offset = np.mod((ang - start_ang) * np.sign(sweep), 2.0 * np.pi)
    on_span = offset <= abs(sweep)
    radial = np.abs(np.linalg.norm(rel, axis=-1) - radius)
    ends = np.minimum(np.linalg.norm(p - start, axis=-1), np.linalg.norm(p - end, axis=-1))
    return np.where(on_span, radial, ends)


class ObstacleWorld(SampledEnvironment):
    horizon = 1

    def __init__(self, n_rays: int = 10, eta: float = 0.3, p_miss: float = 0.1, max_range: float = 1.5,
                 rng_seed: int = 0, n_obstacles: int = 6, radius: float = 0.25, fov_deg: float = 90.0,
                 n_primitives: int = 10, primitive_length: float = 1.3, primitive_spread_deg: float = 45.0):
        if n_rays < 1:
            raise ValueError("n_rays must be at least 1")
        if not eta > 0:
            raise ValueError("eta must be positive")
        if not (0.0 <= p_miss < 1.0):
            raise ValueError("p_miss must lie in [0, 1)")
        if not max_range > 0:
            raise ValueError("max_range must be positive")
        if radius <= 0 or n_obstacles < 1 or n_primitives < 1 or primitive_length <= 0:
            raise ValueError("invalid obstacle or primitive geometry")
        self.n_rays = int(n_rays)
        self.eta = float(eta)
        self.p_miss = float(p_miss)
        self.max_range = float(max_range)
        self.seed = int(rng_seed)
        self.n_obstacles = int(n_obstacles)
        self.radius = float(radius)
        half = math.radians(fov_deg) / 2.0
        self.ray_angles = np.linspace(-half, half, self.n_rays) if self.n_rays > 1 else np.zeros(1)
        # angle measured from +y toward +x
        self.ray_dirs = np.stack([np.sin(self.ray_angles), np.cos(self.ray_angles)], axis=1)
        self.wall_distance = self._wall_distance()
        spread = math.radians(primitive_spread_deg)
        turns = np.linspace(-spread, spread, n_primitives) if n_primitives > 1 else np.zeros(1)
        self.primitives = tuple(MotionPrimitive(float(t), float(primitive_length)) for t in turns)
        self.actions = self.primitives

    def __repr__(self):
        return (f"ObstacleWorld(n_rays={self.n_rays}, eta={self.eta}, p_miss={self.p_miss}, "
                f"max_range={self.max_range}, radius={self.radius})")

    def _wall_distance(self) -> np.ndarray:
        ux, uy = self.ray_dirs[:, 0], self.ray_dirs[:, 1]
        dist = np.full(self.n_rays, np.inf)
        with np.errstate(divide="ignore"):
            top = np.where(uy > 0, WORKSPACE_Y[1] / uy, np.inf)
            bottom = np.where(uy < 0, WORKSPACE_Y[0] / uy, np.inf)
            right = np.where(ux > 0, WORKSPACE_X[1] / ux, np.inf)
            left = np.where(ux < 0, WORKSPACE_X[0] / ux, np.inf)
        for d in (top, bottom, right, left):
            dist = np.minimum(dist, d)
        return dist

    # -- sampling ---------------------------------------------------------

    def sample_states(self, prefix_actions, n: int, rng: np.random.Generator) -> np.ndarray:
        if prefix_actions is not None and len(prefix_actions) > 0:
            raise ValueError("obstacle world is a one-step problem")
        xs = rng.uniform(*CENTER_X, size=(n, self.n_obstacles))
        ys = rng.uniform(*CENTER_Y, size=(n, self.n_obstacles))
        return np.stack([xs, ys], axis=2).reshape(n, 2 * self.n_obstacles)

    def centers(self, states: np.ndarray) -> np.ndarray:
        return np.asarray(states, dtype=float).reshape(len(states), -1, 2)

    def true_distances(self, states: np.ndarray) -> np.ndarray:
        """Noise-free ray lengths, shape (n, n_rays), in [0, max_range]."""
        c = self.centers(states)  # (n, m, 2)
        proj = np.einsum("nmk,rk->nrm", c, self.ray_dirs)  # (n, R, m)
        sq = np.sum(c * c, axis=2)[:, None, :]
        disc = proj**2 - sq + self.radius**2
        with np.errstate(invalid="ignore"):
            t = proj - np.sqrt(disc)
        hit = (disc >= 0) & (t >= 0)
        inside = sq < self.radius**2
        t = np.where(hit, t, np.inf)
        t = np.where(np.broadcast_to(inside, t.shape), 0.0, t)
        d = np.min(t, axis=2)
        d = np.minimum(d, self.wall_distance[None, :])
        return np.minimum(d, self.max_range)

    def sample_observations(self, states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        d = self.true_distances(states)
        miss = rng.random(d.shape) < self.p_miss
        noisy = d + self.eta * rng.standard_normal(d.shape)
        obs = np.where(miss, self.max_range, noisy)
        return np.clip(obs, 0.0, self.max_range)

    # -- sensor density -----------------------------------------------------

    def ray_log_density(self, obs: np.ndarray, dist: np.ndarray) -> np.ndarray:
        """Per-ray log-density of readings ``obs`` given true distances ``dist`` (broadcasting)."""
        o, d = np.broadcast_arrays(np.asarray(obs, dtype=float), np.asarray(dist, dtype=float))
        log_hit = math.log1p(-self.p_miss)
        log_miss = math.log(self.p_miss) if self.p_miss > 0 else -np.inf
        at_max = o >= self.max_range
        at_zero = o <= 0.0
        z = (o - d) / self.eta
        out = (log_hit - 0.5 * math.log(2.0 * math.pi) - math.log(self.eta)) - 0.5 * z * z
        if np.any(at_max):
            tail = log_ndtr((d[at_max] - self.max_range) / self.eta)
            out[at_max] = np.logaddexp(log_miss, log_hit + tail)
        if np.any(at_zero):
            out[at_zero] = log_hit + log_ndtr(-d[at_zero] / self.eta)
        return out

    def atom_probability(self, dist) -> np.ndarray:
        """Probability that a ray with true distance ``dist`` reports ``max_range``."""
        d = np.asarray(dist, dtype=float)
        return self.p_miss + (1.0 - self.p_miss) * norm.sf((self.max_range - d) / self.eta)

    def log_density_pairwise(self, obs: np.ndarray, states: np.ndarray) -> np.ndarray:
        d = self.true_distances(states)  # (M, R)
        obs = np.asarray(obs, dtype=float)  # (K, R)
        return self.ray_log_density(obs[:, None, :], d[None, :, :]).sum(axis=2)

    # -- rewards --------------------------------------------------------------

    def collisions(self, states: np.ndarray) -> np.ndarray:
        """Boolean (n, n_primitives): True where the primitive hits an obstacle."""
        c = self.centers(states)
        out = np.empty((c.shape[0], len(self.primitives)), dtype=bool)
        for i, prim in enumerate(self.primitives):
            dist = point_to_arc_distance(c, prim)  # (n, m)
            out[:, i] = np.any(dist <= self.radius, axis=1)
        return out

    def rewards(self, states: np.ndarray) -> np.ndarray:
        return (~self.collisions(states)).astype(float)


def obstacle_world(n_rays: int, eta: float, p_miss: float, max_range: float = 1.5, rng_seed: int = 0,
                   **geometry) -> ObstacleWorld:
    return ObstacleWorld(n_rays=n_rays, eta=eta, p_miss=p_miss, max_range=max_range, rng_seed=rng_seed,
                         **geometry)
