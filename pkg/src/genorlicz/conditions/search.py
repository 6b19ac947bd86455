"""Counterexample search: a tuple that defeats every admissible witness.

A certificate for (beta_floor, h_sup_cap) must violate the inequality for
every beta >= beta_floor and every h with sup h <= h_sup_cap.  Both sides
are monotone in beta, so beta_floor is the defender's best choice; in h
the defender's best choice is h = h_sup_cap everywhere, except for the max
formulation, where a tuple only counts if it violates at every level in
[tau, max{tau, 2 h_sup_cap}].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core.domain import SamplePlan
from ..core.family import PhiFamily
from ..inversion import inverse_grid
from .checks import SLACK, check_A0, check_A1, depth_tagged_points, sigma_taus
from .witness import UsageError

SEARCHABLE = ("A0", "A1", "A2new", "A2old", "A2phi", "A2max")
VIOLATION = "violation"
EXHAUSTED = "exhausted"


@dataclass
class Certificate:
    condition_id: str
    x: tuple
    y: Optional[tuple]
    arg_name: str
    arg: float
    lhs: float
    rhs: float
    depth: int
    beta_floor: float
    h_sup_cap: float
    sigma: float

    @property
    def residual(self) -> float:
        return self.lhs - self.rhs

    def to_dict(self) -> dict:
        return {"condition_id": self.condition_id, "x": list(self.x),
                "y": None if self.y is None else list(self.y),
                self.arg_name: self.arg, "lhs": self.lhs, "rhs": self.rhs,
                "residual": self.residual, "depth": self.depth,
                "beta_floor": self.beta_floor, "h_sup_cap": self.h_sup_cap,
                "sigma": self.sigma}


@dataclass
class SearchOutcome:
    status: str
    certificate: Optional[Certificate]
    depth_reached: int
    n_tuples: int

    @property
    def found(self) -> bool:
        return self.status == VIOLATION

    def to_dict(self) -> dict:
        return {"status": self.status, "depth_reached": self.depth_reached,
                "n_tuples": self.n_tuples,
                "certificate": self.certificate.to_dict() if self.certificate else None}


def _all_from(viol, start, stop):
    """True where viol[..., u] holds for every u in [start, stop] (indices, inclusive)."""
    misses = np.cumsum(~viol, axis=-1)
    pad = np.concatenate([np.zeros(viol.shape[:-1] + (1,), dtype=misses.dtype), misses], -1)
    return (np.take(pad, stop + 1, axis=-1) - np.take(pad, start, axis=-1)) == 0


class _Sides:
    """lhs/rhs for a block of (x, y) index pairs, from precomputed tables."""

    def __init__(self, cond, family, pts, plan, beta, cap, sigma):
        self.cond = cond
        s = 2.0 * cap
        if cond == "A2phi":
            ts = plan.t_grid
            self.grid = ts
            self.lhs_tab = family.grid(pts, beta * ts)
            self.val_tab = family.grid(pts, ts)
            self.ok = (self.val_tab <= sigma) & (ts > 0)[None, :]
            self.rhs_tab = self.val_tab + s
        elif cond == "A2max":
            taus = sigma_taus(plan, sigma)
            g = plan.tau_grid
            u = np.union1d(np.union1d(taus, g[g <= s]), [s])
            tab = inverse_grid(family, pts, u)
            self.grid = taus
            self.u = u
            self.lhs_tab = beta * tab
            self.rhs_tab = tab
            self.start = np.searchsorted(u, taus)
            self.stop = np.searchsorted(u, np.maximum(taus, s))
        else:
            taus = sigma_taus(plan, sigma)
            self.grid = taus
            base = inverse_grid(family, pts, taus)
            self.lhs_tab = beta * base
            if cond == "A2new":
                self.rhs_tab = inverse_grid(family, pts, taus + s)
                self.ok = np.ones_like(base, dtype=bool)
            else:
                self.rhs_tab = base
                self.ok = np.broadcast_to((taus >= s) & (taus <= sigma), base.shape)

    def block(self, xi, yj):
        """(violation mask over (x, y, grid), number of tuples examined)."""
        lhs = self.lhs_tab[xi][:, None, :]
        rhs = self.rhs_tab[yj][None, :, :]
        if self.cond == "A2max":
            hit = _all_from(lhs > rhs * (1 + SLACK), self.start, self.stop)
            return hit, hit.size
        # the admissible grid points depend on y (phi-form) or on tau alone
        mask = np.broadcast_to(self.ok[yj][None, :, :], (len(xi), len(yj), self.ok.shape[1]))
        hit = mask & (lhs > rhs * (1 + SLACK))
        return hit, int(mask.sum())


def counterexample_search(family: PhiFamily, condition_id: str, beta_floor: float,
                          h_sup_cap: float, sigma: float, plan: SamplePlan) -> SearchOutcome:
    """Refine toward excluded points and the boundary until a tuple defeats
    every witness with beta >= beta_floor and sup h <= h_sup_cap."""
    if condition_id not in SEARCHABLE:
        raise UsageError(f"condition must be one of {SEARCHABLE}")
    if not (0 < beta_floor <= 1):
        raise UsageError("beta_floor must lie in (0, 1]")
    if not (0 <= h_sup_cap < np.inf) or sigma <= 0:
        raise UsageError("h_sup_cap must be finite and sigma positive")
    if condition_id in ("A0", "A1"):
        rep = (check_A0 if condition_id == "A0" else check_A1)(family, plan)
        if rep.holds:
            return SearchOutcome(EXHAUSTED, None, plan.refinement_depth, rep.n_tuples)
        v = rep.violation
        cert = Certificate(condition_id, v.x, v.y, v.arg_name, v.arg, v.lhs, v.rhs,
                           v.depth or 0, beta_floor, h_sup_cap, sigma)
        return SearchOutcome(VIOLATION, cert, v.depth or 0, rep.n_tuples)

    pts, deps = depth_tagged_points(plan)
    sides = _Sides(condition_id, family, pts, plan, beta_floor, h_sup_cap, sigma)
    n = 0
    for level in np.unique(deps):
        new = np.flatnonzero(deps == level)
        pool = np.flatnonzero(deps <= level)
        best = None
        for xi, yj in ((new, pool), (pool, new)):
            hit, m = sides.block(xi, yj)
            n += m
            if not hit.any():
                continue
            if condition_id == "A2max":
                # evaluate at the level of the window where the violation is tightest
                lhs, rhs, args = _max_window_sides(sides, xi, yj, hit)
            else:
                lhs = np.broadcast_to(sides.lhs_tab[xi][:, None, :], hit.shape)
                rhs = np.broadcast_to(sides.rhs_tab[yj][None, :, :], hit.shape)
                args = np.broadcast_to(sides.grid, hit.shape)
            with np.errstate(divide="ignore", invalid="ignore"):
                score = np.where(hit, np.where(rhs > 0, lhs / rhs, np.inf), -np.inf)
            i, j, k = np.unravel_index(np.argmax(score), score.shape)
            if best is None or score[i, j, k] > best[0]:
                best = (score[i, j, k], xi[i], yj[j], args[i, j, k], lhs[i, j, k], rhs[i, j, k])
        if best is not None:
            _, i, j, arg, lhs, rhs = best
            cert = Certificate(condition_id, tuple(pts[i].tolist()), tuple(pts[j].tolist()),
                               "t" if condition_id == "A2phi" else "tau", float(arg),
                               float(lhs), float(rhs), int(level), beta_floor, h_sup_cap, sigma)
            return SearchOutcome(VIOLATION, cert, int(level), n)
    return SearchOutcome(EXHAUSTED, None, int(deps.max()), n)


def _max_window_sides(sides, xi, yj, hit):
    """For the max form: lhs, rhs and level at the window point with the smallest ratio."""
    lhs_u = sides.lhs_tab[xi][:, None, :]
    rhs_u = sides.rhs_tab[yj][None, :, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs_u > 0, lhs_u / rhs_u, np.inf)
    shape = hit.shape
    lhs = np.zeros(shape)
    rhs = np.ones(shape)
    args = np.zeros(shape)
    for k, (a, b) in enumerate(zip(sides.start, sides.stop)):
        win = ratio[:, :, a:b + 1]
        w = a + np.argmin(win, axis=2)
        lhs[:, :, k] = np.take_along_axis(np.broadcast_to(lhs_u, ratio.shape), w[:, :, None], 2)[:, :, 0]
        rhs[:, :, k] = np.take_along_axis(np.broadcast_to(rhs_u, ratio.shape), w[:, :, None], 2)[:, :, 0]
        args[:, :, k] = sides.u[w]
    return lhs, rhs, args
