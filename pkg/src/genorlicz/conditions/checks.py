"""Checkers for (A0), (A1) and the four sampled forms of the decay condition.

Every check sweeps the plan's point pairs (x, y) and its tau (or t) grid.
Verification mode takes a witness and reports the worst violating tuple;
search mode fixes h to a parametric form, takes beta as the infimum ratio
over the samples, and watches that infimum while points are pushed toward
excluded points and the boundary.
"""

from __future__ import annotations

import logging

import numpy as np

from ..core.domain import Ball, SamplePlan
from ..core.family import PhiFamily
from ..inversion import UnboundedInverseError, inverse_grid, inverse_values
from .report import HOLDS, VIOLATED, ConditionReport, ViolationRecord
from .witness import UsageError, Witness, indicator_h, parametric_h

log = logging.getLogger(__name__)

SLACK = 1e-9
MAX_LEVEL_SHIFTS = 16
PAIR_CHUNK = 2_000_000
GROWTH_WINDOW = 5
GROWTH_MIN = 1e-6

INVERSE_FORMS = ("A2new", "A2old", "A2max")
A2_FORMS = INVERSE_FORMS + ("A2phi",)


def diverges(seq) -> bool:
    """True when the last GROWTH_WINDOW refinement steps all strictly grew."""
    seq = np.asarray(seq, dtype=float)
    if len(seq) and np.isinf(seq[-1]):
        return True
    if len(seq) < GROWTH_WINDOW + 1:
        return False
    tail = seq[-(GROWTH_WINDOW + 1):]
    return bool(np.all(tail[1:] > tail[:-1] * (1 + GROWTH_MIN)))


def sigma_taus(plan: SamplePlan, sigma: float) -> np.ndarray:
    g = plan.tau_grid
    return np.union1d(g[g <= sigma], [sigma])


def _pair_sums(h, xs, ys):
    return h(xs)[:, None] + h(ys)[None, :]


class InverseTable:
    """phi^{-1}(p, level) over a fixed point set and tau grid.

    Levels are tau, tau + s or max{tau, s} for a pair sum s = h(x) + h(y);
    each distinct s is inverted once for the whole point set and memoised.
    """

    def __init__(self, family: PhiFamily, pts, taus):
        self.family = family
        self.pts = np.asarray(pts, dtype=float)
        self.taus = np.asarray(taus, dtype=float)
        self._memo = {}

    def _level(self, kind, s):
        if kind == "sum":
            return self.taus + s
        if kind == "max":
            return np.maximum(self.taus, s)
        return self.taus

    def rows(self, kind="plain", s=0.0) -> np.ndarray:
        key = ("plain", 0.0) if kind == "plain" else (kind, float(s))
        if key not in self._memo:
            self._memo[key] = inverse_grid(self.family, self.pts, self._level(kind, s))
        return self._memo[key]

    def pairs(self, kind, S, owner_idx, owner_axis) -> np.ndarray:
        """Values at the owner point of each pair, shape S.shape + (K,)."""
        uniq, u = np.unique(S, return_inverse=True)
        u = u.reshape(S.shape)
        owner = owner_idx[:, None] if owner_axis == 0 else owner_idx[None, :]
        owner = np.broadcast_to(owner, S.shape)
        if len(uniq) <= MAX_LEVEL_SHIFTS:
            table = np.stack([self.rows(kind, s) for s in uniq])
            return table[u, owner, :]
        k = len(self.taus)
        lv = self._level(kind, S[..., None])
        out = inverse_values(self.family, np.repeat(self.pts[owner.ravel()], k, axis=0),
                             lv.ravel())
        return out.reshape(S.shape + (k,))


def _inverse_form(cond, table, xi, yj, S, sigma):
    """(base, rhs, mask) of shape (mx, my, K) for an inverse formulation.

    ``xi`` and ``yj`` index the table's point set.
    """
    taus = table.taus
    shape = (len(xi), len(yj), len(taus))
    plain = table.rows()
    if cond == "A2new":
        base = np.broadcast_to(plain[xi][:, None, :], shape)
        rhs = table.pairs("sum", S, yj, 1)
        mask = np.broadcast_to((taus <= sigma)[None, None, :], shape)
    elif cond == "A2old":
        base = np.broadcast_to(plain[xi][:, None, :], shape)
        rhs = np.broadcast_to(plain[yj][None, :, :], shape)
        mask = (taus[None, None, :] <= sigma) & (taus[None, None, :] >= S[:, :, None])
    elif cond == "A2max":
        base = table.pairs("max", S, xi, 0)
        rhs = table.pairs("max", S, yj, 1)
        mask = np.broadcast_to((taus <= sigma)[None, None, :], shape)
    else:
        raise ValueError(cond)
    return base, rhs, mask


def _phi_form(family, xs, ys, S, ts, sigma):
    """(phi(y, t) grid, rhs, mask) for the phi-form; t = 0 is trivially fine."""
    vy = family.grid(ys, ts)
    rhs = vy[None, :, :] + S[:, :, None]
    mask = ((vy <= sigma) & (ts > 0)[None, :])[None, :, :]
    mask = np.broadcast_to(mask, rhs.shape)
    return rhs, mask


def _record(xs, ys, grid, arg_name, i, j, k, lhs, rhs, depth=None):
    return ViolationRecord(tuple(xs[i].tolist()), tuple(ys[j].tolist()), arg_name,
                           float(grid[k]), float(lhs), float(rhs), depth)


def _worst(lhs, rhs, mask):
    """Index of the worst violation, or None."""
    with np.errstate(divide="ignore", invalid="ignore"):
        bad = mask & (lhs > rhs * (1 + SLACK))
        if not bad.any():
            return None
        score = np.where(bad, np.where(rhs > 0, lhs / rhs, np.inf), -np.inf)
    return np.unravel_index(np.argmax(score), score.shape)


def verify(cond: str, family: PhiFamily, w: Witness, plan: SamplePlan,
           xs=None, ys=None) -> ConditionReport:
    """Check one A2-type formulation with a given witness on the plan."""
    xs = plan.x_points if xs is None else xs
    ys = plan.x_points if ys is None else ys
    S = _pair_sums(w.h, xs, ys)
    if cond == "A2phi":
        ts = plan.t_grid
        rhs, mask = _phi_form(family, xs, ys, S, ts, w.sigma)
        with np.errstate(over="ignore"):
            lx = family.grid(xs, w.beta * ts)
        lhs = np.broadcast_to(lx[:, None, :], rhs.shape)
        grid, arg = ts, "t"
    else:
        taus = sigma_taus(plan, w.sigma)
        table = InverseTable(family, np.concatenate([xs, ys]), taus)
        xi, yj = np.arange(len(xs)), len(xs) + np.arange(len(ys))
        base, rhs, mask = _inverse_form(cond, table, xi, yj, S, w.sigma)
        lhs = w.beta * base
        grid, arg = taus, "tau"
        if cond == "A2max":
            # the inequality is evaluated at max{tau, h(x) + h(y)}
            grid = None
    n = int(mask.sum())
    report = ConditionReport(cond, HOLDS, witness=w, n_tuples=n, plan=plan)
    if cond == "A2old" and n == 0:
        report.vacuous = True
        return report
    hit = _worst(lhs, rhs, mask)
    if hit is not None:
        i, j, k = hit
        if grid is None:
            grid = np.maximum(sigma_taus(plan, w.sigma)[None, :], S[i, j])[0]
        report.verdict = VIOLATED
        report.violation = _record(xs, ys, grid, arg, i, j, k, lhs[i, j, k], rhs[i, j, k])
    return report


def check_A2_new(family, w, plan):
    return verify("A2new", family, w, plan)


def check_A2_old(family, w, plan):
    return verify("A2old", family, w, plan)


def check_A2_phi(family, w, plan):
    return verify("A2phi", family, w, plan)


def check_A2_max(family, w, plan):
    return verify("A2max", family, w, plan)


# search mode -------------------------------------------------------------

MONOTONE_IN_H = ("A2new", "A2old", "A2phi")


def depth_tagged_points(plan: SamplePlan):
    """Plan points (depth 0) followed by the refinement points of each deeper level."""
    parts = [plan.x_points]
    deps = [np.zeros(len(plan.x_points), dtype=int)]
    for d in range(plan.seed_depth + 1, plan.refinement_depth + 1):
        new = plan.domain.refinement_points(d)
        if len(new):
            parts.append(new)
            deps.append(np.full(len(new), d))
    return np.concatenate(parts), np.concatenate(deps)


def _group_min(values, groups, payload, levels, best, where):
    """Fold the minimum of ``values`` per group into ``best``/``where``."""
    order = np.lexsort((values, groups))
    g_sorted = groups[order]
    first = np.concatenate([[0], np.flatnonzero(np.diff(g_sorted)) + 1])
    for f in first:
        at = int(np.searchsorted(levels, g_sorted[f]))
        o = order[f]
        if values[o] < best[at]:
            best[at] = values[o]
            where[at] = payload(o)


def _inverse_depth_betas(cond, table, hv, deps, levels, sigma):
    m, k = len(table.pts), len(table.taus)
    best = np.full(len(levels), np.inf)
    where = [None] * len(levels)
    n = 0
    rows = max(1, PAIR_CHUNK // (m * k))
    yj = np.arange(m)
    for a in range(0, m, rows):
        xi = np.arange(a, min(m, a + rows))
        S = hv[xi][:, None] + hv[None, :]
        base, rhs, mask = _inverse_form(cond, table, xi, yj, S, sigma)
        n += int(mask.sum())
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(mask & (base > 0), rhs / base, np.inf)
        karg = np.argmin(ratio, axis=2)
        r = np.take_along_axis(ratio, karg[:, :, None], axis=2)[:, :, 0].ravel()
        dd = np.maximum(deps[xi][:, None], deps[None, :]).ravel()
        _group_min(r, dd, lambda o: (int(xi[o // m]), int(o % m), int(karg.ravel()[o])),
                   levels, best, where)
    return best, where, n


def _phi_depth_betas(family, plan, pts, hv, deps, levels, sigma, partners):
    ts = plan.t_grid
    vals = family.grid(pts, ts)
    ok_y = (vals <= sigma) & (ts > 0)[None, :]
    n = int(ok_y.sum()) * len(pts)
    owners, depth_of, lmins, jargs = [], [], [], []

    def add(xi, yj, allowed, depth):
        level = vals[yj][None, :, :] + (hv[xi][:, None] + hv[yj][None, :])[:, :, None]
        level = np.where(ok_y[yj][None, :, :] & allowed[:, :, None], level, np.inf)
        j = np.argmin(level, axis=1)
        owners.append(xi)
        depth_of.append(depth)
        lmins.append(np.take_along_axis(level, j[:, None, :], axis=1)[:, 0, :])
        jargs.append(yj[j])

    everyone = np.arange(len(pts))
    rows = max(1, PAIR_CHUNK // (len(pts) * len(ts)))
    for a in range(0, len(pts), rows):
        xi = everyone[a:a + rows]
        add(xi, everyone, deps[None, :] <= deps[xi][:, None], deps[xi])
    for d in levels[levels > 0]:
        yj = np.flatnonzero(deps == d)
        add(partners, yj, np.ones((len(partners), len(yj)), dtype=bool),
            np.full(len(partners), d))
    owner = np.concatenate(owners)
    depth = np.concatenate(depth_of)
    lmin = np.concatenate(lmins)
    jarg = np.concatenate(jargs)
    beta_rk = np.full(lmin.shape, np.inf)
    rr, kk = np.nonzero(np.isfinite(lmin))
    if len(rr):
        reach = inverse_values(family, pts[owner[rr]], lmin[rr, kk], strict=True)
        beta_rk[rr, kk] = reach / ts[kk]
    karg = np.argmin(beta_rk, axis=1)
    r = beta_rk[np.arange(len(owner)), karg]
    best = np.full(len(levels), np.inf)
    where = [None] * len(levels)
    _group_min(r, depth, lambda o: (int(owner[o]), int(jarg[o, karg[o]]), int(karg[o])),
               levels, best, where)
    return best, where, n


def _tuple_sides(cond, family, x, y, s, arg, beta):
    """(lhs, rhs, evaluated argument) of one tuple at the given beta."""
    x, y = x[None, :], y[None, :]
    if cond == "A2phi":
        lhs = family.values(x, [beta * arg])[0]
        return lhs, family.values(y, [arg])[0] + s, arg
    tau = max(arg, s) if cond == "A2max" else arg
    level = arg + s if cond == "A2new" else tau
    return (beta * inverse_values(family, x, [tau])[0],
            inverse_values(family, y, [level])[0], tau)


def search_beta(cond: str, family: PhiFamily, h, sigma: float, plan: SamplePlan,
                points=None, table: InverseTable | None = None):
    """Infimum-ratio beta for a fixed h, followed along the refinement depths.

    Returns (report, cumulative beta per depth level).
    """
    pts, deps = depth_tagged_points(plan) if points is None else points
    levels = np.unique(deps)
    hv = h(pts)
    if cond == "A2phi":
        partners = np.flatnonzero(deps == 0)
        lattice = plan.domain.lattice(plan.per_axis)
        keep = np.isin(pts[partners].view([("", pts.dtype)] * pts.shape[1]),
                       lattice.view([("", lattice.dtype)] * lattice.shape[1])).ravel()
        best, where, n = _phi_depth_betas(family, plan, pts, hv, deps, levels, sigma,
                                          partners[keep] if keep.any() else partners)
        grid, arg_name = plan.t_grid, "t"
    else:
        table = table or InverseTable(family, pts, sigma_taus(plan, sigma))
        best, where, n = _inverse_depth_betas(cond, table, hv, deps, levels, sigma)
        grid, arg_name = table.taus, "tau"
    seq = np.minimum(np.minimum.accumulate(best), 1.0)
    beta = float(seq[-1])
    vacuous = cond == "A2old" and n == 0
    w = Witness(max(beta, 1e-300), h, sigma)
    report = ConditionReport(cond, HOLDS, witness=w, n_tuples=n, plan=plan, vacuous=vacuous)
    report.notes["beta_tail"] = [float(b) for b in seq[-(GROWTH_WINDOW + 1):]]
    if not vacuous and (beta <= 0 or diverges(1.0 / np.maximum(seq, 1e-300))):
        at = int(np.flatnonzero(best == best.min())[-1]) if np.isfinite(best.min()) else -1
        i, j, k = where[at]
        claim = float(seq[-(GROWTH_WINDOW + 1)]) if len(seq) > GROWTH_WINDOW else 1.0
        lhs, rhs, arg = _tuple_sides(cond, family, pts[i], pts[j], hv[i] + hv[j], grid[k], claim)
        report.verdict = VIOLATED
        report.violation = ViolationRecord(tuple(pts[i].tolist()), tuple(pts[j].tolist()),
                                           arg_name, float(arg), float(lhs), float(rhs),
                                           int(levels[at]))
        report.notes["beta_claim"] = claim
    return report, seq


def h_candidates(sigma: float, h_sup_cap: float) -> list[float]:
    cands = {0.0, sigma / 2, sigma, h_sup_cap}
    return sorted(c for c in cands if c <= h_sup_cap)


def search_witness(cond: str, family: PhiFamily, sigma: float, plan: SamplePlan,
                   h_sup_cap: float | None = None) -> ConditionReport:
    """Search mode: h = c * (parametric form) for a few c <= h_sup_cap, beta optimised.

    For A2new, A2old and A2phi a larger h only weakens the inequality, so the
    cap is tried first; a violation there rules out every smaller c, and
    otherwise the smallest c reaching the same beta is reported.
    """
    if cond not in A2_FORMS:
        raise UsageError(f"search mode is defined for {A2_FORMS}")
    cap = 10.0 * sigma if h_sup_cap is None else float(h_sup_cap)
    points = depth_tagged_points(plan)
    table = None if cond == "A2phi" else InverseTable(family, points[0], sigma_taus(plan, sigma))

    def run(c):
        return search_beta(cond, family, parametric_h(plan.domain, c), sigma, plan,
                           points=points, table=table)[0]

    cands = h_candidates(sigma, cap)
    if cond in MONOTONE_IN_H:
        top = run(cands[-1])
        out = top
        if top.holds:
            for c in cands[:-1]:
                r = run(c)
                if r.holds and r.witness.beta >= top.witness.beta * (1 - 1e-12):
                    out = r
                    break
    else:
        reports = [run(c) for c in cands]
        held = [r for r in reports if r.holds]
        out = max(held, key=lambda r: r.witness.beta) if held else reports[-1]
    out.notes["mode"] = "search"
    out.notes["h_sup_cap"] = cap
    return out


# (A0) and (A1) -----------------------------------------------------------

def check_A0(family: PhiFamily, plan: SamplePlan) -> ConditionReport:
    """beta <= phi^{-1}(x, 1) <= 1/beta; refinement decides whether m -> 0 or M -> inf."""
    pts = plan.x_points
    report = ConditionReport("A0", HOLDS, plan=plan, n_tuples=len(pts))
    try:
        v = inverse_values(family, pts, np.ones(len(pts)))
    except UnboundedInverseError:
        report.verdict = VIOLATED
        report.notes["reason"] = "phi(x, .) never reaches 1"
        return report
    lo_i, hi_i = int(np.argmin(v)), int(np.argmax(v))
    m, M = float(v[lo_i]), float(v[hi_i])
    lows, highs = [m], [M]
    where_lo, where_hi = (pts[lo_i], 0), (pts[hi_i], 0)
    for d in range(plan.seed_depth + 1, plan.refinement_depth + 1):
        new = plan.domain.refinement_points(d)
        if len(new):
            try:
                nv = inverse_values(family, new, np.ones(len(new)))
            except UnboundedInverseError:
                nv = np.full(len(new), np.inf)
            report.n_tuples += len(new)
            if nv.min() < lows[-1]:
                where_lo = (new[int(np.argmin(nv))], d)
            if nv.max() > highs[-1]:
                where_hi = (new[int(np.argmax(nv))], d)
            lows.append(min(lows[-1], float(nv.min())))
            highs.append(max(highs[-1], float(nv.max())))
        else:
            lows.append(lows[-1])
            highs.append(highs[-1])
    report.notes.update(inv_at_one_min=m, inv_at_one_max=M)
    report.beta = min(m, 1.0 / M, 1.0) if m > 0 and np.isfinite(M) else 0.0
    low_bad = m <= 0 or diverges(1.0 / np.maximum(lows, 1e-300))
    high_bad = not np.isfinite(M) or diverges(highs)
    if low_bad or high_bad:
        report.verdict = VIOLATED
        k = -(GROWTH_WINDOW + 1)
        if low_bad:
            claim = lows[k] if len(lows) > GROWTH_WINDOW else m
            report.violation = ViolationRecord(tuple(where_lo[0].tolist()), None, "tau", 1.0,
                                               float(claim), float(lows[-1]), where_lo[1])
        else:
            claim = highs[k] if len(highs) > GROWTH_WINDOW else M
            report.violation = ViolationRecord(tuple(where_hi[0].tolist()), None, "tau", 1.0,
                                               float(highs[-1]), float(claim), where_hi[1])
    return report


def _a1_taus(plan: SamplePlan, ball: Ball) -> np.ndarray:
    top = 1.0 / ball.measure
    g = plan.tau_grid
    return np.union1d(g[(g >= 1) & (g <= top)], [1.0, top])


def _ball_ratio(family, pts, taus):
    """min over tau of min_y inv(y, tau) / max_x inv(x, tau), with the binding tuple."""
    inv = inverse_grid(family, pts, taus)
    lo, hi = inv.min(axis=0), inv.max(axis=0)
    ratio = np.where(hi > 0, lo / hi, 1.0)
    k = int(np.argmin(ratio))
    return float(ratio[k]), (int(np.argmax(inv[:, k])), int(np.argmin(inv[:, k])), k), inv.size


def check_A1(family: PhiFamily, plan: SamplePlan) -> ConditionReport:
    """beta phi^{-1}(x, tau) <= phi^{-1}(y, tau) for x, y in a ball B, tau in [1, 1/|B|]."""
    if not plan.ball_family:
        raise UsageError("(A1) needs a nonempty ball family")
    dom = plan.domain
    report = ConditionReport("A1", HOLDS, plan=plan)
    skipped = 0
    best = (np.inf, None)

    def scan(ball, pts, depth=None):
        nonlocal best, skipped
        if len(pts) < 2:
            skipped += 1
            return
        taus = _a1_taus(plan, ball)
        r, (i, j, k), n = _ball_ratio(family, pts, taus)
        report.n_tuples += n * len(pts)
        if r < best[0]:
            best = (r, (pts[i], pts[j], taus[k], depth))

    for ball in plan.ball_family:
        inside = plan.x_points[np.linalg.norm(plan.x_points - np.asarray(ball.center),
                                              axis=-1) < ball.radius]
        pts = np.unique(np.concatenate([ball.sample(dom), inside]), axis=0)
        scan(ball, pts)
    seq = [best[0]]
    r_big = max(b.radius for b in plan.ball_family)
    r_small = min(b.radius for b in plan.ball_family)
    centers = sorted({b.center for b in plan.ball_family if b.radius == r_small})
    tau_top = float(plan.tau_grid.max())
    for d in range(1, plan.refinement_depth + 1):
        for e in dom.excluded_points:
            ball = Ball(e, r_big)
            scan(ball, ball.sample(dom, extra_depth=d), d)
        small = r_small * 2.0 ** -d
        if 1.0 / Ball(centers[0], small).measure <= tau_top:
            for c in centers:
                ball = Ball(c, small)
                scan(ball, ball.sample(dom), d)
        seq.append(best[0])
    if skipped:
        log.warning("check_A1: skipped %d balls with fewer than two admissible samples", skipped)
    report.notes["skipped_balls"] = skipped
    beta = min(1.0, best[0])
    report.beta = beta
    if diverges(1.0 / np.maximum(seq, 1e-300)) or beta <= 0:
        x, y, tau, depth = best[1]
        claim = seq[-(GROWTH_WINDOW + 1)]
        inv_x = inverse_values(family, x, [tau])[0]
        inv_y = inverse_values(family, y, [tau])[0]
        report.verdict = VIOLATED
        report.violation = ViolationRecord(tuple(x.tolist()), tuple(y.tolist()), "tau",
                                           float(tau), float(claim * inv_x), float(inv_y), depth)
    return report


def construct_bounded_witness(family: PhiFamily, sigma: float, a0_beta: float | None = None,
                              a: float | None = None, plan: SamplePlan | None = None) -> Witness:
    """h = chi_Omega and beta = a0_beta^2 / max{1, a sigma} on a bounded domain.

    Without ``a0_beta`` the (A0) constant is computed on ``plan`` and a
    violated (A0) is a usage error.
    """
    if not family.domain.bounded:
        raise UsageError("the indicator witness needs a bounded domain")
    a = family.a if a is None else a
    if a0_beta is None:
        if plan is None:
            raise UsageError("pass a0_beta or a plan to compute it")
        rep = check_A0(family, plan)
        if not rep.holds:
            raise UsageError("(A0) fails for this family; no bounded-domain witness")
        a0_beta = rep.beta
    if not (0 < a0_beta <= 1):
        raise UsageError("a0_beta must lie in (0, 1]")
    return Witness(a0_beta ** 2 / max(1.0, a * sigma), indicator_h(family.domain, 1.0), sigma)
