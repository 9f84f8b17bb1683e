"""Concrete policies whose achieved reward lower-bounds the optimum."""

from .clearance import heuristic_clearance_policy
from .mpc import mpc_kalman_rollout
from .pomdp_solver import (
    AlphaVectorSet,
    enumerate_policies_exact,
    evaluate_policy,
    mdp_optimal_value,
    open_loop_optimal_value,
    solve_pomdp_exact,
)

__all__ = [
    "AlphaVectorSet",
    "enumerate_policies_exact",
    "evaluate_policy",
    "heuristic_clearance_policy",
    "mdp_optimal_value",
    "mpc_kalman_rollout",
    "open_loop_optimal_value",
    "solve_pomdp_exact",
]
