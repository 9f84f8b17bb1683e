"""Upper bounds on the best achievable expected reward.

* ``single_step_bound``: the f-inverse of the best open-loop reward at a
  budget equal to the informativity of the observation.
* ``multi_step_bound``: backward recursion over open-loop action prefixes,
  applying the single-step bound to the normalized reward-to-go at every
  node.
* ``horizon_sweep``: bound the first H steps and add one per remaining
  step, keeping the smallest result.
* ``generalized_fano_bound``: the classical comparator.
* ``optimize_f``: minimize the swept bound over convex piecewise-linear
  generators.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .divergence import FGenerator, PiecewiseLinearF, piecewise_linear_family
from .finverse import f_inverse_many
from .rng import substream
from .tasks import DEFAULT_PREFIX_CAP, ResourceCapError, TaskInterface, check_prefix_cap

__all__ = [
    "BoundReport",
    "single_step_bound",
    "multi_step_bound",
    "horizon_sweep",
    "generalized_fano_bound",
    "optimize_f",
    "OptimizeResult",
    "bound_csv_rows",
    "BOUND_CSV_HEADER",
    "ResourceCapError",
]

BOUND_CSV_HEADER = ("param", "f_name", "H", "bound", "confidence")
# bounds use the upper bracket end, so they never undershoot the exact inverse
BOUND_TOL = 1e-12


@dataclass
class BoundReport:
    per_horizon: dict[int, float]
    best_bound: float
    f_name: str
    confidence: float
    informativities: dict[int, np.ndarray] = field(repr=False)
    runtime: float = 0.0

    @property
    def best_horizon(self) -> int:
        # smallest H attaining the minimum
        return min(h for h, v in self.per_horizon.items() if v == self.best_bound)

    def to_dict(self, include_runtime: bool = False) -> dict:
        out = {
            "f_name": self.f_name,
            "best_bound": self.best_bound,
            "best_horizon": self.best_horizon,
            "confidence": self.confidence,
            "per_horizon": {str(h): v for h, v in sorted(self.per_horizon.items())},
            "informativities": {str(t): np.asarray(v).tolist() for t, v in sorted(self.informativities.items())},
        }
        if include_runtime:
            out["runtime_seconds"] = self.runtime
        return out


def single_step_bound(f: FGenerator, r_perp: float, informativity: float, tol: float = BOUND_TOL) -> float:
    if not (0.0 <= r_perp <= 1.0):
        raise ValueError("r_perp must lie in [0, 1]")
    if not informativity >= 0.0:
        raise ValueError("informativity must be nonnegative")
    value, _ = f_inverse_many(f, r_perp, informativity, tol=tol, upper=True)
    return float(value)


def _check_level(values: np.ndarray, t: int, label: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if np.any(np.isnan(values)):
        raise FloatingPointError(f"{label} at step {t} contains NaN")
    return values


def multi_step_bound(task: TaskInterface, f: FGenerator, horizon: int | None = None,
                     prefix_cap: int = DEFAULT_PREFIX_CAP, tol: float = BOUND_TOL,
                     informativities: dict | None = None) -> float:
    """Upper bound on the best expected cumulative reward over ``horizon`` steps."""
    h = int(task.horizon if horizon is None else horizon)
    if not (1 <= h <= task.horizon):
        raise ValueError(f"horizon must lie in [1, {task.horizon}]")
    n_a = task.n_actions
    check_prefix_cap(n_a, h, prefix_cap)
    reward_to_go = np.zeros(n_a**h)
    for t in range(h - 1, -1, -1):
        rewards = _check_level(task.expected_rewards(t), t, "expected rewards")
        info = _check_level(task.informativity(t, f), t, "informativity")
        if informativities is not None:
            informativities[t] = info
        remaining = h - t
        totals = rewards + reward_to_go.reshape(-1, n_a)
        # sup over the next action; first index wins ties
        r_perp = totals.max(axis=1)
        q = np.clip(r_perp / remaining, 0.0, 1.0)
        inv, _ = f_inverse_many(f, q, np.maximum(info, 0.0), tol=tol, upper=True)
        reward_to_go = remaining * inv
    return float(reward_to_go[0])


def horizon_sweep(task: TaskInterface, f: FGenerator, prefix_cap: int = DEFAULT_PREFIX_CAP,
                  tol: float = BOUND_TOL) -> BoundReport:
    """Bounds for every truncation H = 1..T, each padded by T - H."""
    start = time.perf_counter()
    total = task.horizon
    informativities: dict[int, np.ndarray] = {}
    per_horizon = {}
    for h in range(1, total + 1):
        b = multi_step_bound(task, f, horizon=h, prefix_cap=prefix_cap, tol=tol, informativities=informativities)
        per_horizon[h] = min(b + (total - h), float(total))
    best = min(per_horizon.values())
    return BoundReport(per_horizon=per_horizon, best_bound=best, f_name=f.name, confidence=task.confidence,
                       informativities=informativities, runtime=time.perf_counter() - start)


def generalized_fano_bound(informativity: float, r_perp: float) -> float:
    """(I + ln(1 + r_perp)) / ln(1 / (1 - r_perp)); not clamped."""
    if not (0.0 < r_perp < 1.0):
        raise ValueError("r_perp must lie strictly inside (0, 1)")
    if not informativity >= 0.0:
        raise ValueError("informativity must be nonnegative")
    return (informativity + math.log1p(r_perp)) / -math.log1p(-r_perp)


@dataclass(frozen=True)
class OptimizeResult:
    generator: PiecewiseLinearF
    bound: float
    initial_bound: float
    evaluations: int
    params: np.ndarray = field(repr=False)


def _initial_params(n_pieces: int) -> np.ndarray:
    # slopes of x log x at the piece midpoints, mapped back through the softplus
    edges = np.linspace(0.0, 2.0, n_pieces + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    slopes = 1.0 + np.log(mids)
    inc = np.diff(slopes)
    return np.concatenate([[slopes[0]], np.log(np.expm1(inc))])


def optimize_f(task: TaskInterface, n_pieces: int = 10, restarts: int = 8, rng_seed: int = 0,
               maxfev: int = 400, init_scale: float = 1.0, prefix_cap: int = DEFAULT_PREFIX_CAP) -> OptimizeResult:
    """Minimize the swept bound over convex piecewise-linear generators.

    The first start is a piecewise-linear fit to the KL generator; further
    starts perturb it with Gaussian noise of scale ``init_scale``.  Every
    candidate yields a valid bound, so the best value seen is returned even
    if the optimizer stops early.
    """
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    best = {"value": math.inf, "params": None}
    count = {"n": 0}

    def objective(theta):
        count["n"] += 1
        if not np.all(np.isfinite(theta)):
            return float(task.horizon)
        f = piecewise_linear_family(n_pieces, theta)
        value = horizon_sweep(task, f, prefix_cap=prefix_cap).best_bound
        if value < best["value"]:
            best["value"], best["params"] = value, np.array(theta, dtype=float)
        return value

    base = _initial_params(n_pieces)
    initial = objective(base)
    rng = substream(rng_seed, 0)
    for r in range(restarts):
        x0 = base if r == 0 else base + init_scale * rng.standard_normal(n_pieces)
        minimize(objective, x0, method="Nelder-Mead",
                 options={"maxfev": maxfev, "xatol": 1e-6, "fatol": 1e-9, "adaptive": True})
    gen = piecewise_linear_family(n_pieces, best["params"])
    return OptimizeResult(generator=gen, bound=best["value"], initial_bound=initial, evaluations=count["n"],
                          params=best["params"])


def bound_csv_rows(param, report: BoundReport) -> list[tuple]:
    """Rows ``param,f_name,H,bound,confidence`` for every swept horizon."""
    return [(param, report.f_name, h, report.per_horizon[h], report.confidence)
            for h in sorted(report.per_horizon)]
