"""Left and right f-inverses of the Bernoulli f-divergence.

Both are one-dimensional convex feasibility problems with a monotone
boundary, solved here by bisection.  The left inverse

    sup { p in [0, 1] : D(p || q) <= c }

turns an informativity budget into a reward ceiling; the right inverse

    sup { p in [0, 1) : D(m || p) <= c }

turns an empirical mean into a Chernoff-Hoeffding upper confidence bound.

Bisection keeps the lower end of the bracket feasible, so the returned
value always satisfies the divergence constraint and sits at most ``tol``
below the true supremum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .divergence import FGenerator, _bernoulli_unchecked

__all__ = ["InverseSolution", "f_inverse", "f_inverse_right", "f_inverse_many", "f_inverse_right_many",
           "DEFAULT_TOL"]

DEFAULT_TOL = 1e-9
MAX_ITER = 200


@dataclass(frozen=True)
class InverseSolution:
    value: float
    residual: float
    iterations: int
    tolerance: float


def _validate(q, c):
    if not (0.0 <= q <= 1.0):
        raise ValueError(f"q must lie in [0, 1], got {q}")
    if not (c >= 0.0):
        raise ValueError(f"c must be nonnegative, got {c}")


def f_inverse_many(f: FGenerator, q, c, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER,
                   upper: bool = False):
    """Vectorized left f-inverse.

    Returns ``(values, iterations)`` where ``values`` has the broadcast
    shape of ``q`` and ``c``.  By default the feasible lower end of the final
    bracket is returned; ``upper=True`` returns the upper end instead, which
    never undershoots the supremum and is what bound computations use.
    """
    q, c = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(c, dtype=float))
    shape = q.shape
    q = np.clip(q.ravel(), 0.0, 1.0)
    c = c.ravel()
    lo = q.copy()
    hi = np.ones_like(q)
    # extended-real comparison decides feasibility of p = 1 directly
    done = (q >= 1.0) | np.isposinf(c) | (np.asarray(_bernoulli_unchecked(f, hi, q)) <= c)
    lo[done] = 1.0
    hi[q >= 1.0] = 1.0
    if f.strictly_convex:
        # D(p || q) = 0 only at p = q
        exact = ~done & (c == 0.0)
        hi[exact] = q[exact]
        done = done | exact
    active = ~done
    it = 0
    while it < max_iter and np.any(active):
        if np.all(hi[active] - lo[active] <= tol):
            break
        it += 1
        mid = 0.5 * (lo[active] + hi[active])
        ok = np.asarray(_bernoulli_unchecked(f, mid, q[active])) <= c[active]
        lo_a = lo[active]
        hi_a = hi[active]
        lo_a[ok] = mid[ok]
        hi_a[~ok] = mid[~ok]
        lo[active] = lo_a
        hi[active] = hi_a
        active = active & (hi - lo > tol)
    return (hi if upper else lo).reshape(shape), it


def f_inverse(f: FGenerator, q: float, c: float, tol: float = DEFAULT_TOL) -> InverseSolution:
    """sup {p in [0, 1] : D_f(Bern(p) || Bern(q)) <= c}, to within ``tol``."""
    _validate(q, c)
    values, it = f_inverse_many(f, q, c, tol=tol)
    value = float(values)
    d = float(_bernoulli_unchecked(f, value, q))
    residual = c - d if math.isfinite(c) else math.inf
    return InverseSolution(value=value, residual=residual, iterations=it, tolerance=tol)


def f_inverse_right(f: FGenerator, empirical_mean: float, c: float, tol: float = DEFAULT_TOL) -> InverseSolution:
    """sup {p in [0, 1) : D_f(Bern(mean) || Bern(p)) <= c}, to within ``tol``.

    The divergence is convex in its second argument with its minimum at
    ``p = mean``, hence nondecreasing on ``[mean, 1)``.
    """
    m = float(empirical_mean)
    _validate(m, c)
    if m >= 1.0 or math.isinf(c):
        return InverseSolution(1.0, math.inf, 0, tol)
    if c == 0.0 and f.strictly_convex:
        return InverseSolution(m, 0.0, 0, tol)
    # the supremum over [0, 1) is approached, not attained, when p -> 1 is feasible
    if float(_bernoulli_unchecked(f, m, 1.0)) <= c:
        return InverseSolution(1.0, c - float(_bernoulli_unchecked(f, m, 1.0)), 0, tol)
    values, it = f_inverse_right_many(f, m, c, tol=tol)
    lo = float(values)
    d = float(_bernoulli_unchecked(f, m, lo))
    return InverseSolution(value=lo, residual=c - d, iterations=it, tolerance=tol)


def f_inverse_right_many(f: FGenerator, empirical_mean, c, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER):
    """Vectorized right f-inverse; returns ``(values, iterations)``.

    Values are the feasible lower ends of the final brackets, except that
    ``1.0`` is returned wherever ``p -> 1`` is feasible.
    """
    m, c = np.broadcast_arrays(np.asarray(empirical_mean, dtype=float), np.asarray(c, dtype=float))
    shape = m.shape
    m = m.ravel()
    c = c.ravel()
    if np.any((m < 0.0) | (m > 1.0) | np.isnan(m)):
        raise ValueError("empirical means must lie in [0, 1]")
    if np.any(~(c >= 0.0)):
        raise ValueError("c must be nonnegative")
    lo = m.copy()
    hi = np.ones_like(m)
    done = (m >= 1.0) | np.isposinf(c)
    rest = ~done
    done[rest] = np.asarray(_bernoulli_unchecked(f, m[rest], hi[rest])) <= c[rest]
    lo[done] = 1.0
    if f.strictly_convex:
        exact = ~done & (c == 0.0)
        hi[exact] = m[exact]
        done = done | exact
    active = ~done & (hi - lo > tol)
    it = 0
    while it < max_iter and np.any(active):
        it += 1
        mid = 0.5 * (lo[active] + hi[active])
        ok = np.asarray(_bernoulli_unchecked(f, m[active], mid)) <= c[active]
        lo_a = lo[active]
        hi_a = hi[active]
        lo_a[ok] = mid[ok]
        hi_a[~ok] = mid[~ok]
        lo[active] = lo_a
        hi[active] = hi_a
        active = active & (hi - lo > tol)
    return lo.reshape(shape), it
