"""Catching a falling ball with a noisy full-state sensor.

State is [x_rel, y_rel, vx_ball, vy_ball]; the action is the robot's
horizontal speed.  The per-step reward max(1 - 2|x_rel|, 0) is a hat
function whose expectation under a Gaussian belief has a closed form in
terms of the normal CDF and PDF.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import norm

from .base import LinearGaussianSystem

__all__ = ["ball_catching", "hat_expectation", "hat_reward", "NOISE_DIAG", "ETA_SCALINGS"]

DT = 1.0
GRAVITY = 0.1
INIT_MEAN = np.array([0.0, 1.05, 0.0, 0.05])
INIT_COV = np.diag([0.01**2, 0.1**2, 0.2**2, 0.1**2])
NOISE_DIAG = np.array([0.5**2, 1.0**2, 0.75**2, 1.0**2])
ACTIONS = tuple(np.round(np.arange(-0.4, 0.4 + 1e-9, 0.1), 10))
HALF_WIDTH = 0.5
ETA_SCALINGS = ("covariance", "std")


def hat_reward(x):
    return np.maximum(1.0 - 2.0 * np.abs(x), 0.0)


def _ramp_expectation(m, sd):
    # E[max(X, 0)] for X ~ N(m, sd^2)
    if sd == 0.0:
        return np.maximum(m, 0.0)
    z = m / sd
    return m * norm.cdf(z) + sd * norm.pdf(z)


def hat_expectation(mean, sd: float):
    """E[max(1 - 2|x|, 0)] for x ~ N(mean, sd^2).

    The hat is 2 * (ramp(x + h) - 2 ramp(x) + ramp(x - h)) with h = 1/2.
    """
    m = np.asarray(mean, dtype=float)
    sd = float(sd)
    val = 2.0 * (_ramp_expectation(m + HALF_WIDTH, sd) - 2.0 * _ramp_expectation(m, sd)
                 + _ramp_expectation(m - HALF_WIDTH, sd))
    return np.clip(val, 0.0, 1.0)


def _expected_reward(means, cov, action):
    means = np.atleast_2d(means)
    sd = float(np.sqrt(max(cov[0, 0], 0.0)))
    return hat_expectation(means[:, 0], sd)


def _reward(states, action):
    return hat_reward(np.atleast_2d(states)[:, 0])


def ball_catching(eta: float, horizon: int = 5, eta_scaling: str = "covariance") -> LinearGaussianSystem:
    """Ball-catching system at sensor noise scale ``eta``.

    ``eta_scaling="covariance"`` sets the sensor covariance to
    ``eta * diag(0.5^2, 1, 0.75^2, 1)``; ``"std"`` scales it by ``eta**2``.
    """
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    if eta_scaling not in ETA_SCALINGS:
        raise ValueError(f"eta_scaling must be one of {ETA_SCALINGS}")
    scale = eta if eta_scaling == "covariance" else eta**2
    a = np.array([
        [1.0, 0.0, DT, 0.0],
        [0.0, 1.0, 0.0, DT],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ])
    b = np.array([[-DT], [0.0], [0.0], [0.0]])
    drift = np.array([0.0, 0.0, 0.0, -GRAVITY * DT])
    return LinearGaussianSystem(
        A=a,
        B=b,
        drift=drift,
        C=np.eye(4),
        sensor_cov=scale * np.diag(NOISE_DIAG),
        init_mean=INIT_MEAN.copy(),
        init_cov=INIT_COV.copy(),
        actions=ACTIONS,
        expected_reward=_expected_reward,
        reward=_reward,
        horizon=horizon,
        name=f"ball-catching(eta={eta:g})",
    )
