"""Generator functions and the f-divergences they induce.

Every divergence in this package is parameterized by a convex generator
``f`` on the positive reals with ``f(1) = 0``.  Boundary terms follow the
usual conventions

    0 * f(a / 0) = a * lim_{x->inf} f(x) / x,      0 * f(0 / 0) = 0,

so that divergences between distributions with disjoint support evaluate
to an extended real (possibly ``+inf``) instead of NaN.  All logarithms are
natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "FGenerator",
    "PiecewiseLinearF",
    "builtin_generators",
    "get_generator",
    "GENERATOR_NAMES",
    "bernoulli_fdiv",
    "discrete_fdiv",
    "gaussian_kl",
    "piecewise_linear_family",
]


@dataclass(frozen=True)
class FGenerator:
    """A convex generator ``f`` with ``f(1) = 0`` and its boundary limits.

    ``func`` must accept numpy arrays of strictly positive values.
    """

    name: str
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    limit_at_zero: float
    slope_at_infinity: float
    strictly_convex: bool = True

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.func(x)


def _xlogx(x):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)


def _js(x):
    return -(x + 1.0) * np.log((x + 1.0) / 2.0) + _xlogx(x)


_BUILTINS = (
    FGenerator("kl", _xlogx, 0.0, math.inf),
    FGenerator("neg-log", lambda x: -np.log(x), math.inf, 0.0),
    FGenerator("tv", lambda x: 0.5 * np.abs(x - 1.0), 0.5, 0.5, strictly_convex=False),
    FGenerator("pearson", lambda x: (x - 1.0) ** 2, 1.0, math.inf),
    FGenerator("js", _js, math.log(2.0), math.log(2.0)),
    FGenerator("hellinger2", lambda x: (np.sqrt(x) - 1.0) ** 2, 1.0, 1.0),
    FGenerator("neyman", lambda x: 1.0 / x - 1.0, math.inf, 0.0),
)

GENERATOR_NAMES = tuple(g.name for g in _BUILTINS)


def builtin_generators() -> list[FGenerator]:
    """The seven standard generators, in a fixed order."""
    return list(_BUILTINS)


def get_generator(name: str) -> FGenerator:
    for g in _BUILTINS:
        if g.name == name:
            return g
    raise KeyError(f"unknown generator {name!r}; choose from {', '.join(GENERATOR_NAMES)}")


def _perspective(f: FGenerator, a, b):
    """Elementwise ``b * f(a / b)`` with the boundary conventions.

    ``a`` and ``b`` are nonnegative arrays of the same shape.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    out = np.zeros(a.shape)

    interior = (a > 0) & (b > 0)
    if np.any(interior):
        with np.errstate(over="ignore", invalid="ignore"):
            ratio = a[interior] / b[interior]
            vals = b[interior] * f(ratio)
        # ratio overflow: b f(a / b) -> a * f'(inf)
        huge = np.isinf(ratio)
        vals[huge] = _times(a[interior][huge], f.slope_at_infinity)
        out[interior] = vals

    # b > 0, a == 0: b * f(0+)
    zero_a = (a == 0) & (b > 0)
    if np.any(zero_a):
        out[zero_a] = _times(b[zero_a], f.limit_at_zero)

    # b == 0, a > 0: a * f'(inf)
    zero_b = (a > 0) & (b == 0)
    if np.any(zero_b):
        out[zero_b] = _times(a[zero_b], f.slope_at_infinity)
    return out


def _times(arr, scalar):
    # avoids nan from 0 * inf; callers only pass strictly positive arr
    if math.isinf(scalar):
        return np.full(arr.shape, scalar)
    return arr * scalar


def _check_prob(name, v):
    v = np.asarray(v, dtype=float)
    if np.any(~np.isfinite(v)) or np.any(v < 0.0) or np.any(v > 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {v}")
    return v


def bernoulli_fdiv(f: FGenerator, p, q):
    """f-divergence between Bernoulli(p) and Bernoulli(q).

    ``q f(p/q) + (1-q) f((1-p)/(1-q))``; broadcasts over array inputs and
    returns a float for scalar inputs.  ``+inf`` is a legal result.
    """
    p = _check_prob("p", p)
    q = _check_prob("q", q)
    val = _bernoulli_unchecked(f, p, q)
    return float(val) if val.ndim == 0 else val


def _bernoulli_unchecked(f: FGenerator, p, q) -> np.ndarray:
    val = _perspective(f, p, q) + _perspective(f, 1.0 - p, 1.0 - q)
    # convexity guarantees >= 0; clip roundoff below zero
    return np.maximum(val, 0.0)


def discrete_fdiv(f: FGenerator, p, q) -> float:
    """``sum_i q_i f(p_i / q_i)`` for two distributions on the same finite support."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"support mismatch: {p.shape} vs {q.shape}")
    if np.any(p < 0) or np.any(q < 0):
        raise ValueError("probabilities must be nonnegative")
    return max(float(np.sum(_perspective(f, p, q))), 0.0)


def gaussian_kl(mean0, cov0, mean1, cov1) -> float:
    """KL(N(mean0, cov0) || N(mean1, cov1)) in nats."""
    mean0 = np.atleast_1d(np.asarray(mean0, dtype=float))
    mean1 = np.atleast_1d(np.asarray(mean1, dtype=float))
    cov0 = np.atleast_2d(np.asarray(cov0, dtype=float))
    cov1 = np.atleast_2d(np.asarray(cov1, dtype=float))
    d = mean0.shape[0]
    if cov0.shape != (d, d) or cov1.shape != (d, d) or mean1.shape != (d,):
        raise ValueError("dimension mismatch between means and covariances")
    try:
        l0 = np.linalg.cholesky(cov0)
        l1 = np.linalg.cholesky(cov1)
    except np.linalg.LinAlgError as exc:
        raise ValueError("covariances must be symmetric positive definite") from exc
    diff = mean1 - mean0
    # tr(cov1^-1 cov0) = ||L1^-1 L0||_F^2
    m = np.linalg.solve(l1, l0)
    z = np.linalg.solve(l1, diff)
    logdet0 = 2.0 * np.sum(np.log(np.diag(l0)))
    logdet1 = 2.0 * np.sum(np.log(np.diag(l1)))
    val = 0.5 * (np.sum(m * m) + z @ z - d + logdet1 - logdet0)
    return max(float(val), 0.0)


@dataclass(frozen=True)
class PiecewiseLinearF(FGenerator):
    """Convex piecewise-linear generator anchored at ``f(1) = 0``.

    The interval (0, 2] is cut into ``n_pieces`` equal pieces; the last piece
    extends to infinity.  ``slopes`` must be nondecreasing.
    """

    slopes: np.ndarray = field(default=None, repr=False)
    edges: np.ndarray = field(default=None, repr=False)
    knot_values: np.ndarray = field(default=None, repr=False)

    @property
    def n_pieces(self) -> int:
        return len(self.slopes)


def piecewise_linear_family(n_pieces: int, slope_params) -> PiecewiseLinearF:
    """Map unconstrained parameters to a convex piecewise-linear generator.

    ``slope_params[0]`` is the first slope; every later slope adds
    ``softplus(slope_params[i])`` to its predecessor, so slopes are
    nondecreasing for any real input.
    """
    if n_pieces < 2:
        raise ValueError("n_pieces must be at least 2")
    theta = np.asarray(slope_params, dtype=float).ravel()
    if theta.shape != (n_pieces,):
        raise ValueError(f"expected {n_pieces} slope parameters, got {theta.shape[0]}")
    increments = np.logaddexp(0.0, theta[1:])
    slopes = theta[0] + np.concatenate(([0.0], np.cumsum(increments)))
    return piecewise_linear_from_slopes(slopes)


def piecewise_linear_from_slopes(slopes) -> PiecewiseLinearF:
    slopes = np.asarray(slopes, dtype=float).ravel()
    n = len(slopes)
    if n < 2:
        raise ValueError("n_pieces must be at least 2")
    if np.any(np.diff(slopes) < 0):
        raise ValueError("slopes must be nondecreasing")
    width = 2.0 / n
    edges = np.linspace(0.0, 2.0, n + 1)
    raw = np.concatenate(([0.0], np.cumsum(slopes * width)))
    # anchor: subtract the unanchored value at x = 1
    k = min(int(1.0 // width), n - 1)
    at_one = raw[k] + slopes[k] * (1.0 - edges[k])
    knots = raw - at_one
    edges.flags.writeable = False
    knots.flags.writeable = False
    slopes = slopes.copy()
    slopes.flags.writeable = False

    def func(x, _s=slopes, _e=edges, _k=knots):
        inner = np.interp(x, _e[:-1], _k[:-1])
        return np.where(x > _e[-2], _k[-2] + _s[-1] * (x - _e[-2]), inner)

    return PiecewiseLinearF(
        name=f"pwl{n}",
        func=func,
        limit_at_zero=float(knots[0]),
        slope_at_infinity=float(slopes[-1]),
        strictly_convex=False,
        slopes=slopes,
        edges=edges,
        knot_values=knots,
    )
