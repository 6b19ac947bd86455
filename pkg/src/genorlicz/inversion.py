"""Generalized left-inverse phi^{-1}(x, tau) = inf{t >= 0 : phi(x, t) >= tau}.

Computed by bracketing from t = 1 (doubling or halving) and then bisecting
the monotone predicate ``phi(x, t) >= tau``.  Bisection runs on log t once
the bracket is positive, so the relative accuracy is uniform over the many
decades the sample grids cover.  Each element stops on its own, which makes
a value independent of whatever else was in the batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core.domain import SamplePlan
from .core.extended import INF
from .core.family import PhiFamily

ABS_TOL = 1e-12
REL_TOL = 1e-10
BRACKET_CAP = 1e12
# below this the bracket is treated as reaching t = 0
FLOOR = 1e-300
MAX_BISECT = 200
# plateaus shorter than this are float underflow of phi, not genuine zeros
PLATEAU_RESOLUTION = 1e-30


class UnboundedInverseError(ArithmeticError):
    """phi(x, t) never reaches tau below the bracket cap."""


@dataclass(frozen=True)
class InverseQuery:
    family: PhiFamily
    x: tuple
    tau: float
    abs_tol: float = ABS_TOL
    rel_tol: float = REL_TOL
    bracket_cap: float = BRACKET_CAP

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")


def _bisect(pred, lo, hi, rel_tol, abs_tol, strict_iters=MAX_BISECT):
    """Shrink [lo, hi] (pred false at lo, true at hi) elementwise."""
    active = hi - lo > np.minimum(abs_tol, rel_tol * hi)
    for _ in range(strict_iters):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        l, h = lo[idx], hi[idx]
        mid = np.where(l > 0, np.sqrt(l * h), 0.5 * (l + h))
        # geometric midpoints can stall when l and h are adjacent floats
        mid = np.where((mid <= l) | (mid >= h), 0.5 * (l + h), mid)
        ok = pred(idx, mid)
        hi[idx] = np.where(ok, mid, h)
        lo[idx] = np.where(ok, l, mid)
        width = hi[idx] - lo[idx]
        done = (width <= rel_tol * hi[idx]) | (width <= FLOOR) | (mid <= l) | (mid >= h)
        done |= (lo[idx] == 0) & (hi[idx] <= abs_tol * 1e-6)
        active[idx] = ~done
    return lo, hi


def inverse_values(family: PhiFamily, x, tau, *, abs_tol=ABS_TOL, rel_tol=REL_TOL,
                   bracket_cap=BRACKET_CAP, strict=False) -> np.ndarray:
    """Vectorised left-inverse; x has shape (N, n) (or one point), tau shape (N,).

    tau = +inf returns ``bracket_cap`` when phi stays finite; a finite tau that
    is never reached raises :class:`UnboundedInverseError`.  With
    ``strict=True`` the predicate is phi > tau, giving sup{s : phi(x, s) <= tau}.
    """
    tau = np.asarray(tau, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1, family.domain.dim)
    if len(x) == 1 and len(tau) != 1:
        x = np.repeat(x, len(tau), axis=0)
    if np.any(tau < 0) or np.any(np.isnan(tau)):
        raise ValueError("tau must be nonnegative")
    out = np.zeros(len(tau))
    work = np.flatnonzero(tau >= 0) if strict else np.flatnonzero(tau > 0)
    if not len(work):
        return out
    xw, tw = x[work], tau[work]

    def pred(idx, t):
        v = family.values(xw[idx], t)
        return v > tw[idx] if strict else v >= tw[idx]

    all_idx = np.arange(len(work))
    t1 = np.ones(len(work))
    up = pred(all_idx, t1)
    lo = np.where(up, 0.5, 1.0)
    hi = np.where(up, 1.0, 2.0)

    # halve while phi(lo) >= tau
    going = up.copy()
    going[going] = pred(np.flatnonzero(going), lo[going])
    while going.any():
        idx = np.flatnonzero(going)
        hi[idx] = lo[idx]
        lo[idx] = lo[idx] * 0.5
        tiny = lo[idx] < FLOOR
        lo[idx[tiny]] = 0.0
        still = pred(idx, lo[idx]) & ~tiny
        going[idx] = still

    # double while phi(hi) < tau
    going = ~up
    going[going] = ~pred(np.flatnonzero(going), hi[going])
    unbounded = np.zeros(len(work), dtype=bool)
    while going.any():
        idx = np.flatnonzero(going)
        lo[idx] = hi[idx]
        hi[idx] = hi[idx] * 2.0
        over = hi[idx] > bracket_cap
        unbounded[idx[over]] = True
        going[idx] = ~pred(idx, hi[idx]) & ~over
    if unbounded.any():
        bad = unbounded & np.isfinite(tw)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise UnboundedInverseError(
                f"phi({xw[i].tolist()}, t) < {tw[i]} for all t <= {bracket_cap:g}")

    ok = ~unbounded
    idx_ok = np.flatnonzero(ok)
    if len(idx_ok):
        def pred_sub(idx, t):
            return pred(idx_ok[idx], t)
        _, h = _bisect(pred_sub, lo[idx_ok].copy(), hi[idx_ok].copy(), rel_tol, abs_tol)
        res = np.empty(len(work))
        res[idx_ok] = h
    else:
        res = np.empty(len(work))
    res[unbounded] = bracket_cap
    out[work] = res
    return out


def inverse_grid(family: PhiFamily, xs, taus, **kw) -> np.ndarray:
    """phi^{-1} on the product xs x taus, shape (len(xs), len(taus))."""
    xs = np.asarray(xs, dtype=float).reshape(-1, family.domain.dim)
    taus = np.asarray(taus, dtype=float).reshape(-1)
    v = inverse_values(family, np.repeat(xs, len(taus), axis=0), np.tile(taus, len(xs)), **kw)
    return v.reshape(len(xs), len(taus))


def left_inverse(q: InverseQuery) -> float:
    pts = q.family.domain.require_admissible(q.x)
    return float(inverse_values(q.family, pts[:1], [q.tau], abs_tol=q.abs_tol,
                                rel_tol=q.rel_tol, bracket_cap=q.bracket_cap)[0])


@dataclass(frozen=True)
class ZeroPlateau:
    t0: float


def zero_plateau(family: PhiFamily, x, rel_tol: float = REL_TOL) -> ZeroPlateau:
    """t0 = max{s >= 0 : phi(x, s) = 0}, by bisection on ``phi(x, t) > 0``."""
    pts = family.domain.require_admissible(x)[:1]

    def positive(t):
        return family.values(pts, [t])[0] > 0

    if positive(PLATEAU_RESOLUTION):
        return ZeroPlateau(0.0)
    hi = 1.0
    while not positive(hi):
        hi *= 2.0
        if hi > BRACKET_CAP:
            raise UnboundedInverseError("phi vanishes on the whole bracket")
    lo = hi / 2 if hi > 1 else 0.0
    if hi == 1.0:
        lo = 0.5
        while positive(lo):
            hi, lo = lo, lo / 2
    lo_a, _ = _bisect(lambda idx, t: family.values(pts, t) > 0,
                      np.array([lo]), np.array([hi]), rel_tol, ABS_TOL)
    t0 = float(lo_a[0])
    return ZeroPlateau(t0 if t0 > PLATEAU_RESOLUTION else 0.0)


@dataclass
class IdentityReport:
    max_residual_phi_of_inverse: float
    max_residual_inverse_of_phi: float
    checked_tau: int
    checked_t: int
    skipped_t: int

    @property
    def max_residual(self) -> float:
        return max(self.max_residual_phi_of_inverse, self.max_residual_inverse_of_phi)


def verify_inverse_identities(family: PhiFamily, plan: SamplePlan) -> IdentityReport:
    """Relative residuals of phi(x, phi^{-1}(x, tau)) = tau and, where
    phi(x, t) is in (0, inf), phi^{-1}(x, phi(x, t)) = t."""
    if family.strength != "strong":
        raise ValueError("the inverse identities are only asserted for strong families")
    xs = plan.x_points
    taus = plan.tau_grid[plan.tau_grid > 0]
    inv = inverse_grid(family, xs, taus)
    back = family.values(np.repeat(xs, len(taus), axis=0), inv.ravel()).reshape(inv.shape)
    r1 = float(np.max(np.abs(back - taus) / taus))

    ts = plan.positive_t
    vals = family.grid(xs, ts)
    keep = (vals > 0) & np.isfinite(vals)
    xx = np.repeat(xs, len(ts), axis=0)[keep.ravel()]
    tt = np.tile(ts, len(xs))[keep.ravel()]
    rt = inverse_values(family, xx, vals[keep])
    r2 = float(np.max(np.abs(rt - tt) / tt)) if len(tt) else 0.0
    return IdentityReport(r1, r2, inv.size, int(keep.sum()), int((~keep).sum()))


@dataclass
class InverseDecay:
    constant: float
    doubling_ratio: float
    doubling_ok: bool


def inverse_adec1_check(family: PhiFamily, plan: SamplePlan) -> InverseDecay:
    """Almost-decreasing constant of tau -> phi^{-1}(x, tau)/tau and the doubling
    bound phi^{-1}(x, 2 tau) <= 2a phi^{-1}(x, tau)."""
    xs = plan.x_points
    taus = plan.tau_grid[plan.tau_grid > 0]
    inv = inverse_grid(family, xs, taus)
    g = inv / taus
    run = np.minimum.accumulate(g, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(run > 0, g / run, np.where(g > 0, INF, 1.0))
    inv2 = inverse_grid(family, xs, 2 * taus)
    with np.errstate(divide="ignore", invalid="ignore"):
        dbl = np.where(inv > 0, inv2 / (2 * family.a * inv), np.where(inv2 > 0, INF, 0.0))
    worst = float(np.max(dbl))
    return InverseDecay(float(np.max(ratio)), worst, worst <= 1 + 1e-9)
