"""f-informativity between state and observation, and concentration tools.

Three routes are provided:

* exact sums for finite state/observation spaces,
* closed-form log-determinants for linear-Gaussian channels,
* sampled leave-one-out estimates for black-box sensors with an evaluable
  density, wrapped into a high-confidence upper bound with Hoeffding's
  inequality.

Any upper bound on the informativity is sound downstream because the
f-inverse is nondecreasing in its budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .divergence import FGenerator, _perspective, get_generator
from .finverse import f_inverse_right, f_inverse_right_many
from .rng import substream

__all__ = [
    "DiscreteJoint",
    "ConfidenceBudget",
    "discrete_informativity",
    "discrete_informativity_many",
    "gaussian_informativity",
    "gaussian_mi",
    "leave_one_out_mi_bound",
    "clamp_loo",
    "loo_informativity_upper",
    "hoeffding_upper",
    "chernoff_hoeffding_upper",
    "chernoff_hoeffding_upper_many",
    "mean_upper_bound",
    "budget_split",
]

_STOCH_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteJoint:
    """A state distribution paired with a row-stochastic sensor matrix."""

    state_dist: np.ndarray
    sensor_matrix: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.state_dist, dtype=float)
        s = np.asarray(self.sensor_matrix, dtype=float)
        if p.ndim != 1 or s.ndim != 2 or s.shape[0] != p.shape[0]:
            raise ValueError("state_dist must be (S,) and sensor_matrix (S, O)")
        if np.any(p < 0) or np.any(s < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > _STOCH_TOL:
            raise ValueError(f"state_dist sums to {p.sum()!r}, not 1")
        if np.any(np.abs(s.sum(axis=1) - 1.0) > _STOCH_TOL):
            raise ValueError("every sensor row must sum to 1")
        object.__setattr__(self, "state_dist", p)
        object.__setattr__(self, "sensor_matrix", s)


def discrete_informativity_many(f: FGenerator, beliefs: np.ndarray, sensor: np.ndarray) -> np.ndarray:
    """Marginal-q informativity for a stack of beliefs.

    ``beliefs`` is (N, S), ``sensor`` is (S, O).  Returns
    ``sum_s b(s) D_f(sensor[s] || b @ sensor)`` for each row; for KL this is
    exactly the Shannon mutual information.
    """
    beliefs = np.atleast_2d(np.asarray(beliefs, dtype=float))
    marg = beliefs @ sensor  # (N, O)
    n, s_count = beliefs.shape
    a = np.broadcast_to(sensor[None, :, :], (n, s_count, sensor.shape[1]))
    b = np.broadcast_to(marg[:, None, :], a.shape)
    div = _perspective(f, a, b).sum(axis=2)  # (N, S)
    # states with zero belief never contribute, even where div is infinite
    weighted = np.where(beliefs > 0, beliefs * np.where(beliefs > 0, div, 0.0), 0.0)
    return np.maximum(weighted.sum(axis=1), 0.0)


def discrete_informativity(f: FGenerator, joint: DiscreteJoint) -> float:
    return float(discrete_informativity_many(f, joint.state_dist[None, :], joint.sensor_matrix)[0])


def gaussian_mi(sensor_matrix, belief_cov, noise_cov) -> float:
    """Shannon MI of o = C s + eps, s ~ N(., belief_cov), eps ~ N(0, noise_cov)."""
    c = np.atleast_2d(np.asarray(sensor_matrix, dtype=float))
    p = np.atleast_2d(np.asarray(belief_cov, dtype=float))
    r = np.atleast_2d(np.asarray(noise_cov, dtype=float))
    try:
        np.linalg.cholesky(p)
        lr = np.linalg.cholesky(r)
    except np.linalg.LinAlgError as exc:
        raise ValueError("belief and noise covariances must be positive definite") from exc
    sign, logdet_total = np.linalg.slogdet(c @ p @ c.T + r)
    if sign <= 0:
        raise ValueError("observation covariance is not positive definite")
    logdet_noise = 2.0 * np.sum(np.log(np.diag(lr)))
    return max(0.5 * (logdet_total - logdet_noise), 0.0)


def gaussian_informativity(system, belief_cov) -> float:
    """Mutual information between state and observation for a linear-Gaussian sensor.

    Returns ``inf`` for a noiseless sensor (all-zero noise covariance).
    """
    noise = np.atleast_2d(np.asarray(system.sensor_cov, dtype=float))
    if not np.any(noise):
        return math.inf
    return gaussian_mi(system.C, belief_cov, noise)


def leave_one_out_mi_bound(env, prefix_actions, batch_size: int, num_batches: int, rng_seed: int,
                           batch_offset: int = 0) -> np.ndarray:
    """Per-batch leave-one-out estimates whose expectation upper-bounds I(o; s).

    For a batch of K state/observation pairs the estimate is::

        1/K sum_i [ log s(o_i|s_i) - log( 1/(K-1) sum_{j != i} s(o_i|s_j) ) ]

    computed in the log domain.  Batch ``b`` draws from RNG substream
    ``batch_offset + b``.
    """
    k = int(batch_size)
    if k < 2:
        raise ValueError("batch_size must be at least 2")
    out = np.empty(num_batches)
    off_diag = ~np.eye(k, dtype=bool)
    for b in range(num_batches):
        rng = substream(rng_seed, batch_offset + b)
        states = env.sample_states(prefix_actions, k, rng)
        obs = env.sample_observations(states, rng)
        logd = env.log_density_pairwise(obs, states)  # [i, j] = log s(o_i | s_j)
        if np.any(np.isnan(logd)):
            raise FloatingPointError("sensor log-density returned NaN")
        own = np.diag(logd)
        others = logsumexp(np.where(off_diag, logd, -np.inf), axis=1) - math.log(k - 1)
        out[b] = float(np.mean(own - others))
    return out


def clamp_loo(estimates, batch_size: int) -> np.ndarray:
    """Clamp per-batch estimates to [0, ln K] before concentration wrapping."""
    return np.clip(np.asarray(estimates, dtype=float), 0.0, math.log(batch_size))


def loo_informativity_upper(estimates, batch_size: int, delta: float) -> float:
    """Hoeffding upper bound on the expected (clamped) leave-one-out estimate."""
    cap = math.log(batch_size)
    scaled = clamp_loo(estimates, batch_size) / cap
    return cap * hoeffding_upper(scaled, delta)


def _check_samples(samples, delta):
    z = np.asarray(samples, dtype=float).ravel()
    if z.size == 0:
        raise ValueError("need at least one sample")
    if np.any(z < 0.0) or np.any(z > 1.0) or np.any(np.isnan(z)):
        raise ValueError("samples must lie in [0, 1]; rescale first")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    return z


def hoeffding_upper(samples, delta: float) -> float:
    """mean + sqrt(ln(1/delta) / 2n), valid with probability 1 - delta."""
    z = _check_samples(samples, delta)
    return float(z.mean() + math.sqrt(math.log(1.0 / delta) / (2.0 * z.size)))


def chernoff_hoeffding_upper(samples, delta: float) -> float:
    """Right KL-inverse of the sample mean at budget ln(2/delta)/n."""
    z = _check_samples(samples, delta)
    budget = math.log(2.0 / delta) / z.size
    return f_inverse_right(get_generator("kl"), float(z.mean()), budget).value


def chernoff_hoeffding_upper_many(samples, delta: float) -> np.ndarray:
    """Row-wise :func:`chernoff_hoeffding_upper` for a 2-D array of independent sample sets."""
    z = np.atleast_2d(np.asarray(samples, dtype=float))
    _check_samples(z, delta)
    budget = math.log(2.0 / delta) / z.shape[1]
    return f_inverse_right_many(get_generator("kl"), z.mean(axis=1), budget)[0]


def mean_upper_bound(samples, delta: float) -> float:
    """The tighter of the two mean bounds, capped at 1."""
    return min(hoeffding_upper(samples, delta), chernoff_hoeffding_upper(samples, delta), 1.0)


@dataclass(frozen=True)
class ConfidenceBudget:
    total_delta: float
    allocations: tuple[tuple[str, float], ...]

    def __getitem__(self, label: str) -> float:
        for name, d in self.allocations:
            if name == label:
                return d
        raise KeyError(label)

    @property
    def confidence(self) -> float:
        return 1.0 - self.total_delta


def budget_split(total_delta: float, labels: Sequence[str]) -> ConfidenceBudget:
    """Split ``total_delta`` evenly over ``labels`` (union bound)."""
    if not (0.0 < total_delta < 1.0):
        raise ValueError("total_delta must lie in (0, 1)")
    labels = list(labels)
    if not labels:
        raise ValueError("labels must be nonempty")
    if len(set(labels)) != len(labels):
        raise ValueError("labels must be unique")
    n = len(labels)
    deltas = [total_delta / n] * n
    deltas[-1] = total_delta - sum(deltas[:-1])
    # nudge the last share until the running sum reproduces the total exactly
    for _ in range(64):
        s = sum(deltas)
        if s == total_delta:
            break
        deltas[-1] = math.nextafter(deltas[-1], -math.inf if s > total_delta else math.inf)
    return ConfidenceBudget(total_delta, tuple(zip(labels, deltas)))
