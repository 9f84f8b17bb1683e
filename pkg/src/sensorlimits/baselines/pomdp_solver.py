"""Exact finite-horizon solvers for small discrete POMDPs.

Timing follows DiscretePOMDP: at step t the agent observes o_t drawn from
the sensor row of s_t, then picks a_t and earns r(s_t, a_t).  Alpha vectors
at step t are therefore linear functions of the posterior over s_t, and the
optimal value sums the best vector over the first observation::

    V* = sum_o max_alpha < p0 * sensor[:, o], alpha >
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from ..environments.base import DiscretePOMDP
from ..tasks import ResourceCapError

__all__ = [
    "AlphaVectorSet",
    "solve_pomdp_exact",
    "enumerate_policies_exact",
    "evaluate_policy",
    "mdp_optimal_value",
    "open_loop_optimal_value",
    "DEFAULT_MAX_VECTORS",
]

DEFAULT_MAX_VECTORS = 50_000
DEFAULT_MAX_POLICIES = 2**20
_LP_MARGIN = 1e-10


@dataclass(frozen=True)
class AlphaVectorSet:
    """``vectors[t]`` is (n_t, S); ``actions[t]`` is the matching (n_t,) action labels."""

    vectors: tuple
    actions: tuple

    @property
    def horizon(self) -> int:
        return len(self.vectors)

    def value(self, t: int, belief) -> float:
        return float(np.max(self.vectors[t] @ np.asarray(belief, dtype=float)))

    def best_action(self, t: int, belief) -> int:
        return int(self.actions[t][int(np.argmax(self.vectors[t] @ np.asarray(belief, dtype=float)))])


def _dedupe(vectors: np.ndarray, actions: np.ndarray):
    _, idx = np.unique(np.round(vectors, 13), axis=0, return_index=True)
    idx = np.sort(idx)
    return vectors[idx], actions[idx]


def _pointwise_prune(vectors: np.ndarray, actions: np.ndarray):
    n = len(vectors)
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if not keep[i]:
            continue
        others = keep.copy()
        others[i] = False
        dominated = np.all(vectors[others] >= vectors[i], axis=1)
        if np.any(dominated):
            keep[i] = False
    return vectors[keep], actions[keep]


def _lp_prune(vectors: np.ndarray, actions: np.ndarray):
    """Drop vectors that are nowhere strictly best on the belief simplex."""
    n, s = vectors.shape
    if n <= 1:
        return vectors, actions
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        others = np.flatnonzero(keep & (np.arange(n) != i))
        if len(others) == 0:
            continue
        # variables [b_1..b_S, d]; maximize d subject to b.(alpha_j - alpha_i) + d <= 0
        c = np.zeros(s + 1)
        c[-1] = -1.0
        a_ub = np.hstack([vectors[others] - vectors[i], np.ones((len(others), 1))])
        b_ub = np.zeros(len(others))
        a_eq = np.hstack([np.ones((1, s)), np.zeros((1, 1))])
        bounds = [(0.0, None)] * s + [(None, None)]
        res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0], bounds=bounds, method="highs")
        if res.status == 0 and -res.fun <= _LP_MARGIN:
            keep[i] = False
    return vectors[keep], actions[keep]


def _prune(vectors, actions):
    vectors, actions = _dedupe(vectors, actions)
    vectors, actions = _pointwise_prune(vectors, actions)
    return _lp_prune(vectors, actions)


def solve_pomdp_exact(model: DiscretePOMDP, horizon: int | None = None,
                      max_vectors: int = DEFAULT_MAX_VECTORS) -> tuple[AlphaVectorSet, float]:
    """Exact alpha-vector value iteration with incremental pruning.

    Pruning only removes vectors that are pointwise dominated or nowhere
    better than the rest by more than 1e-10, so the represented maximum is
    exact up to that margin.
    """
    h = int(model.horizon if horizon is None else horizon)
    s_count, n_obs, n_act = model.n_states, model.n_obs, model.n_actions
    if s_count * n_obs * n_act > max_vectors:
        raise ResourceCapError("model too large for exact alpha-vector backup")
    next_vecs = np.zeros((1, s_count))
    all_vecs, all_acts = [None] * h, [None] * h
    for t in range(h - 1, -1, -1):
        cand_v, cand_a = [], []
        for a in range(n_act):
            # cross-sum over next observations, pruning after each term
            acc = model.reward[:, a][None, :].copy()
            for o in range(n_obs):
                proj = (next_vecs * model.sensor[:, o][None, :]) @ model.transition[a].T  # (n, S)
                summed = (acc[:, None, :] + proj[None, :, :]).reshape(-1, s_count)
                if len(summed) > max_vectors:
                    raise ResourceCapError(f"cross-sum produced {len(summed)} vectors (cap {max_vectors})")
                acc, _ = _prune(summed, np.full(len(summed), a))
            cand_v.append(acc)
            cand_a.append(np.full(len(acc), a))
        vecs, acts = _prune(np.vstack(cand_v), np.concatenate(cand_a))
        all_vecs[t], all_acts[t] = vecs, acts
        next_vecs = vecs
    alphas = AlphaVectorSet(tuple(all_vecs), tuple(all_acts))
    joint = model.init[:, None] * model.sensor  # (S, O) unnormalized posteriors
    value = float(np.sum(np.max(alphas.vectors[0] @ joint, axis=0)))
    return alphas, value


def mdp_optimal_value(model: DiscretePOMDP, horizon: int | None = None) -> float:
    """Finite-horizon value of the fully observed MDP under p0."""
    h = int(model.horizon if horizon is None else horizon)
    v = np.zeros(model.n_states)
    for _ in range(h):
        q = model.reward + np.einsum("ast,t->sa", model.transition, v)
        v = q.max(axis=1)
    return float(model.init @ v)


def open_loop_optimal_value(model: DiscretePOMDP, horizon: int | None = None) -> float:
    """Best expected reward of a fixed action sequence, by exhaustive search."""
    h = int(model.horizon if horizon is None else horizon)
    best = -np.inf
    for seq in itertools.product(range(model.n_actions), repeat=h):
        b = model.init.copy()
        total = 0.0
        for a in seq:
            total += float(b @ model.reward[:, a])
            b = b @ model.transition[a]
        best = max(best, total)
    return best


def _histories(n_obs: int, length: int):
    return list(itertools.product(range(n_obs), repeat=length))


def evaluate_policy(model: DiscretePOMDP, policy, horizon: int | None = None) -> float:
    """Exact value of a deterministic policy mapping observation histories to actions.

    ``policy`` is a dict keyed by observation tuples ``(o_0, ..., o_t)``.
    The forward recursion carries P(s_t, o_0..o_t) for every history, which
    sums over all state and observation trajectories.
    """
    h = int(model.horizon if horizon is None else horizon)
    roots = {(o,): model.init * model.sensor[:, o] for o in range(model.n_obs)}
    return _forward_value(model, roots, policy, h)


def enumerate_policies_exact(model: DiscretePOMDP, horizon: int | None = None,
                             max_policies: int = DEFAULT_MAX_POLICIES) -> float:
    """Optimal value by exhaustive enumeration of deterministic feedback policies.

    The value of a policy is a sum over the first observation of terms that
    depend only on that branch of the policy, so the maximum is taken branch
    by branch.  Within a branch every assignment of actions to observation
    histories is enumerated and evaluated exactly.
    """
    h = int(model.horizon if horizon is None else horizon)
    if h > 3:
        raise ResourceCapError("policy enumeration supports horizons up to 3")
    n_obs, n_act = model.n_obs, model.n_actions
    # decision points inside one branch: histories (o_1..o_t) for t = 0..h-1
    points = [hist for t in range(h) for hist in _histories(n_obs, t)]
    count = n_act ** len(points)
    if count > max_policies:
        raise ResourceCapError(f"{count} policies per branch exceed the cap of {max_policies}")
    total = 0.0
    for o0 in range(n_obs):
        root = {(o0,): model.init * model.sensor[:, o0]}
        best = -np.inf
        for choice in itertools.product(range(n_act), repeat=len(points)):
            policy = {(o0,) + hist: a for hist, a in zip(points, choice)}
            best = max(best, _forward_value(model, root, policy, h))
        total += best
    return total


def _forward_value(model: DiscretePOMDP, frontier: dict, policy, h: int) -> float:
    total = 0.0
    for t in range(h):
        nxt = {}
        for hist, weight in frontier.items():
            a = policy[hist]
            total += float(weight @ model.reward[:, a])
            if t + 1 < h:
                pred = weight @ model.transition[a]
                for o in range(model.n_obs):
                    nxt[hist + (o,)] = pred * model.sensor[:, o]
        frontier = nxt
    return total
