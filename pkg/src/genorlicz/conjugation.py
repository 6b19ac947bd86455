"""Numerical conjugate phi*(x, t) = sup{s t - phi(x, s) : s >= 0}.

The supremum is taken over a log-spaced grid in s, then refined by ternary
search on the two cells around the best grid point.  That refinement is exact
when phi(x, .) is convex (the objective is then concave in s); for weak
families it is best effort.  When the best grid point sits at either end of
the grid the search walks outward by decades first, and an objective that is
still increasing when s reaches S_MAX (or becomes infinite) is reported as +inf.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core.domain import SamplePlan, log_grid
from .core.extended import INF
from .core.family import PhiFamily
from .inversion import inverse_grid

REFINE_STEPS = 40
S_MAX = 1e300
S_MIN = 1e-300
CHUNK = 2_000_000
# inverse-product constants beyond this are treated as unbounded
PRODUCT_CAP = 1e3
PRODUCT_STABILITY = 1.2
# slopes per point in the tabulated conjugate used for phi**
BICONJ_POINTS = 1000
# the inner grid only seeds the ternary refinement, so it can be coarse
BICONJ_INNER_POINTS = 101


def default_s_grid(points: int = 401) -> np.ndarray:
    return log_grid(1e-8, 1e8, points, with_zero=False)


@dataclass(frozen=True)
class ConjugateQuery:
    family: PhiFamily
    x: tuple
    t: float
    s_grid: Optional[np.ndarray] = None
    refine_steps: int = REFINE_STEPS


def _objective(family, x, s, t):
    phi = family.values(x, s)
    with np.errstate(invalid="ignore", over="ignore"):
        out = s * t - phi
    return np.where(np.isinf(phi), -INF, out)


def _ternary(f, lo, hi, steps, maximize=True):
    """Vectorised ternary search on [lo, hi]; returns the best value seen."""
    sign = 1.0 if maximize else -1.0
    best = np.full(len(lo), -INF)
    for _ in range(steps):
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        f1, f2 = sign * f(m1), sign * f(m2)
        best = np.fmax(best, np.fmax(f1, f2))
        left = f1 < f2
        lo = np.where(left, m1, lo)
        hi = np.where(left, hi, m2)
    mid = 0.5 * (lo + hi)
    best = np.fmax(best, sign * f(mid))
    return sign * best


def _extend(f, s_edge, v_edge, factor, limit):
    """Walk from the grid edge by ``factor`` while f keeps increasing.

    Returns (value at the last increasing point, the point before it, the
    first point where f stopped increasing, diverged mask).
    """
    n = len(s_edge)
    prev = s_edge / factor
    cur = s_edge.copy()
    val = v_edge.copy()
    nxt = cur * factor
    diverged = np.zeros(n, dtype=bool)
    active = np.ones(n, dtype=bool)
    while active.any():
        idx = np.flatnonzero(active)
        v_next = f(idx, nxt[idx])
        grow = v_next > val[idx]
        within = nxt[idx] * factor < limit if factor > 1 else nxt[idx] * factor > limit
        if factor > 1:
            blow = grow & (np.isposinf(v_next) | ~within)
            diverged[idx[blow]] = True
            grow &= np.isfinite(v_next)
        step_on = grow & within
        prev[idx[step_on]] = cur[idx[step_on]]
        cur[idx[step_on]] = nxt[idx[step_on]]
        val[idx[step_on]] = v_next[step_on]
        nxt[idx[step_on]] = nxt[idx[step_on]] * factor
        active[idx] = step_on
    return val, prev, nxt, diverged


def _restrict(f_at, subset):
    return lambda idx, s: f_at(subset[idx], s)


def conjugate_values(family: PhiFamily, x, t, s_grid=None,
                     refine_steps: int = REFINE_STEPS) -> np.ndarray:
    """Vectorised phi*(x_i, t_i); x shape (N, n) (or one point), t shape (N,)."""
    s_grid = default_s_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
    t = np.asarray(t, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1, family.domain.dim)
    if len(x) == 1 and len(t) != 1:
        x = np.repeat(x, len(t), axis=0)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    out = np.empty(len(t))
    step = max(1, CHUNK // len(s_grid))
    for a in range(0, len(t), step):
        out[a:a + step] = _conjugate_chunk(family, x[a:a + step], t[a:a + step],
                                           s_grid, refine_steps)
    return out


def _conjugate_chunk(family, x, t, s_grid, refine_steps):
    n, k = len(t), len(s_grid)
    ss = np.tile(s_grid, n)
    obj = _objective(family, np.repeat(x, k, axis=0), ss, np.repeat(t, k)).reshape(n, k)
    j = np.argmax(obj, axis=1)
    best = obj[np.arange(n), j]
    lo = s_grid[np.maximum(j - 1, 0)]
    hi = s_grid[np.minimum(j + 1, k - 1)]
    result = np.fmax(best, 0.0)

    def f_at(idx, s):
        return _objective(family, x[idx], s, t[idx])

    top = np.flatnonzero((j == k - 1) & np.isfinite(best))
    if len(top):
        val, prev, nxt, div = _extend(_restrict(f_at, top), s_grid[-1] * np.ones(len(top)),
                                      best[top], 10.0, S_MAX)
        lo[top], hi[top] = prev, np.minimum(nxt, S_MAX)
        result[top] = np.fmax(result[top], val)
        result[top[div]] = INF
    bottom = np.flatnonzero(j == 0)
    if len(bottom):
        val, prev, nxt, _ = _extend(_restrict(f_at, bottom), s_grid[0] * np.ones(len(bottom)),
                                    best[bottom], 0.1, S_MIN)
        lo[bottom], hi[bottom] = nxt, prev
        result[bottom] = np.fmax(result[bottom], val)

    live = np.flatnonzero(np.isfinite(result))
    if len(live):
        refined = _ternary(lambda s: f_at(live, s), lo[live], hi[live], refine_steps)
        result[live] = np.fmax(result[live], refined)
    return result


def conjugate(q: ConjugateQuery) -> float:
    pts = q.family.domain.require_admissible(q.x)
    return float(conjugate_values(q.family, pts[:1], [q.t], q.s_grid, q.refine_steps)[0])


def conjugate_family(family: PhiFamily, s_grid=None) -> PhiFamily:
    """phi* as a PhiFamily on the same domain (evaluated lazily, point by point)."""
    grid = default_s_grid() if s_grid is None else np.asarray(s_grid, dtype=float)

    def ev(x, t):
        return conjugate_values(family, x, t, grid)

    strong = family.strength == "strong" and family.adec_q is not None
    return PhiFamily(f"conjugate({family.name})", ev, family.domain, a=1.0,
                     strength="strong" if strong else "weak",
                     params={"of": family.name, **family.params})


def biconjugate_values(family: PhiFamily, x, t, slope_points: int = BICONJ_POINTS,
                       s_grid=None) -> np.ndarray:
    """phi**(x_i, t_i) = sup{s t - phi*(x, s) : s >= 0}.

    For each distinct x, phi* is tabulated once on a log grid of slopes
    that brackets phi'(x, t) for the requested t: by convexity the chord
    slope phi(x, t)/t sits below phi'(x, t) and phi(x, 2t)/t above it.  The
    outer supremum is then a maximum over that table (plus s = 0).
    """
    t = np.asarray(t, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1, family.domain.dim)
    if len(x) == 1 and len(t) != 1:
        x = np.repeat(x, len(t), axis=0)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    inner = default_s_grid(BICONJ_INNER_POINTS) if s_grid is None else s_grid
    out = np.zeros(len(t))
    uniq, inv = np.unique(x, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    for u in range(len(uniq)):
        rows = np.flatnonzero((inv == u) & (t > 0))
        if not len(rows):
            continue
        xu = uniq[u:u + 1]
        tt = t[rows]
        lo_t, hi_t = tt.min(), tt.max()
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            s_lo = family.values(xu, [lo_t])[0] / lo_t
            s_hi = family.values(xu, [2 * hi_t])[0] / hi_t
        s_lo = s_lo if np.isfinite(s_lo) and s_lo > 0 else S_MIN
        s_hi = s_hi if np.isfinite(s_hi) and s_hi > 0 else S_MAX
        slopes = np.geomspace(max(s_lo / 2, S_MIN), min(2 * s_hi, S_MAX), slope_points)
        star = conjugate_values(family, xu, slopes, inner)
        keep = np.isfinite(star)
        slopes, star = slopes[keep], star[keep]
        best = np.zeros(len(tt))
        step = max(1, CHUNK // max(1, len(slopes)))
        for a in range(0, len(tt), step):
            obj = tt[a:a + step, None] * slopes[None, :] - star[None, :]
            best[a:a + step] = np.fmax(obj.max(axis=1, initial=0.0), 0.0)
        out[rows] = best
    return out


def biconjugate_family(family: PhiFamily, slope_points: int = BICONJ_POINTS) -> PhiFamily:
    """phi** as a PhiFamily on the same domain."""

    def ev(x, t):
        return biconjugate_values(family, x, t, slope_points)

    return PhiFamily(f"biconjugate({family.name})", ev, family.domain, a=family.a,
                     strength=family.strength, params={"of": family.name, **family.params})


def conjugate_inverse_values(family: PhiFamily, x, tau, s_grid=None,
                             refine_steps: int = REFINE_STEPS) -> np.ndarray:
    """(phi*)^{-1}(x, tau) through inf_{s > 0} (tau + phi(x, s)) / s.

    phi*(x, t) >= tau exactly when s t - phi(x, s) >= tau for some s, so the
    left-inverse of the conjugate is that infimum; the quotient is
    quasiconvex in s, which justifies grid search plus ternary refinement.
    """
    s_grid = default_s_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
    tau = np.asarray(tau, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1, family.domain.dim)
    if len(x) == 1 and len(tau) != 1:
        x = np.repeat(x, len(tau), axis=0)
    out = np.zeros(len(tau))
    work = np.flatnonzero(tau > 0)
    step = max(1, CHUNK // len(s_grid))
    for a in range(0, len(work), step):
        idx = work[a:a + step]
        out[idx] = _conj_inverse_chunk(family, x[idx], tau[idx], s_grid, refine_steps)
    return out


def _quotient(family, x, s, tau):
    phi = family.values(x, s)
    with np.errstate(over="ignore"):
        return (tau + phi) / s


def _conj_inverse_chunk(family, x, tau, s_grid, refine_steps):
    n, k = len(tau), len(s_grid)
    q = _quotient(family, np.repeat(x, k, axis=0), np.tile(s_grid, n),
                  np.repeat(tau, k)).reshape(n, k)
    j = np.argmin(q, axis=1)
    best = q[np.arange(n), j]
    lo = s_grid[np.maximum(j - 1, 0)]
    hi = s_grid[np.minimum(j + 1, k - 1)]

    def neg(idx, s):
        return -_quotient(family, x[idx], s, tau[idx])

    for edge, factor, limit in ((k - 1, 10.0, S_MAX), (0, 0.1, S_MIN)):
        sel = np.flatnonzero(j == edge)
        if not len(sel):
            continue
        # a quotient that keeps falling is bounded below by 0, so the
        # divergence flag is ignored here
        val, prev, nxt, _ = _extend(_restrict(neg, sel), s_grid[edge] * np.ones(len(sel)),
                                    -best[sel], factor, limit)
        best[sel] = np.fmin(best[sel], -val)
        if factor > 1:
            lo[sel], hi[sel] = prev, np.minimum(nxt, S_MAX)
        else:
            lo[sel], hi[sel] = nxt, prev
    fin = np.isfinite(best)
    idx = np.flatnonzero(fin)
    refined = _ternary(lambda s: _quotient(family, x[idx], s, tau[idx]), lo[idx], hi[idx],
                       refine_steps, maximize=False)
    best[idx] = np.fmin(best[idx], refined)
    return best


@dataclass
class ProductCheck:
    constant: float
    constant_refined: float
    min_ratio: float
    max_ratio: float
    verdict: str


def _product_constant(family, plan, s_grid):
    taus = plan.tau_grid[plan.tau_grid > 0]
    xs = plan.x_points
    inv = inverse_grid(family, xs, taus)
    cinv = conjugate_inverse_values(family, np.repeat(xs, len(taus), axis=0),
                                    np.tile(taus, len(xs)), s_grid).reshape(inv.shape)
    r = inv * cinv / taus
    lo, hi = float(np.min(r)), float(np.max(r))
    c = max(hi, 1.0 / lo) if lo > 0 else INF
    return c, lo, hi


def inverse_product_check(family: PhiFamily, plan: SamplePlan, s_grid=None) -> ProductCheck:
    """Smallest c with tau/c <= (phi*)^{-1}(x, tau) phi^{-1}(x, tau) <= c tau on the plan."""
    c, lo, hi = _product_constant(family, plan, s_grid)
    c2, _, _ = _product_constant(family, plan.refined(), s_grid)
    ok = np.isfinite(c) and c <= PRODUCT_CAP and c2 <= PRODUCT_STABILITY * c
    return ProductCheck(c, c2, lo, hi, "holds" if ok else "fails")
