"""The five-state lava corridor.

Positions 0..4 form a line.  Position 2 is the goal and position 4 is the
lava; both are absorbing.  Moving left from 0 stays at 0, and moving right
from 3 falls into the lava.  With this layout the open-loop sequence
(left, right, right) reaches the goal from every non-lava start and earns
3.425 in expectation over five steps.
"""

from __future__ import annotations

import numpy as np

from .base import DiscretePOMDP

__all__ = ["lava_pomdp", "LEFT", "RIGHT", "GOAL", "LAVA", "N_STATES"]

N_STATES = 5
LEFT, RIGHT = 0, 1
GOAL, LAVA = 2, 4

REWARD_LAVA = 0.0
REWARD_GOAL = 1.0
REWARD_OTHER = 0.1


def lava_sensor(p_correct: float, n_states: int = N_STATES) -> np.ndarray:
    off = (1.0 - p_correct) / (n_states - 1)
    sensor = np.full((n_states, n_states), off)
    np.fill_diagonal(sensor, p_correct)
    return sensor


def lava_pomdp(p_correct: float, horizon: int = 5) -> DiscretePOMDP:
    if not (0.0 <= p_correct <= 1.0):
        raise ValueError("p_correct must lie in [0, 1]")
    n = N_STATES
    transition = np.zeros((2, n, n))
    for s in range(n):
        if s in (GOAL, LAVA):
            transition[:, s, s] = 1.0
            continue
        transition[LEFT, s, max(s - 1, 0)] = 1.0
        transition[RIGHT, s, min(s + 1, n - 1)] = 1.0

    per_state = np.full(n, REWARD_OTHER)
    per_state[GOAL] = REWARD_GOAL
    per_state[LAVA] = REWARD_LAVA
    reward = np.repeat(per_state[:, None], 2, axis=1)

    init = np.ones(n)
    init[LAVA] = 0.0
    init /= init.sum()
    return DiscretePOMDP(transition, lava_sensor(p_correct), reward, init, horizon, name="lava")
