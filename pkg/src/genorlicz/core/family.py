"""Phi-families, their structural classification and growth constants."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .domain import SamplePlan, SpatialDomain
from .extended import safe_ratio

log = logging.getLogger(__name__)

REL_TOL = 1e-9
# thresholds standing in for the limits t -> 0+ and t -> inf on a finite grid
VANISH_LEVEL = 1e-3
BLOWUP_LEVEL = 1e3
# a growth or equivalence constant that grows by more than this factor under
# one plan refinement is declared divergent
DIVERGENCE_FACTOR = 2.0

Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class PhiFamily:
    """phi(x, t) on Omega x [0, inf) with its declared constants.

    ``evaluator(x, t)`` is vectorised: ``x`` has shape (N, n), ``t`` shape (N,)
    and the result shape (N,), with ``inf`` allowed.
    """

    name: str
    evaluator: Evaluator
    domain: SpatialDomain
    a: float = 1.0
    ainc_p: Optional[tuple[float, float]] = None
    adec_q: Optional[tuple[float, float]] = None
    strength: str = "weak"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.a < 1:
            raise ValueError("almost-increasing constant must be >= 1")
        if self.strength not in ("weak", "strong"):
            raise ValueError("strength must be 'weak' or 'strong'")

    def values(self, x, t) -> np.ndarray:
        """Elementwise phi(x_i, t_i); no domain checks."""
        x = np.asarray(x, dtype=float).reshape(-1, self.domain.dim)
        t = np.asarray(t, dtype=float).reshape(-1)
        if len(x) == 1 and len(t) != 1:
            x = np.repeat(x, len(t), axis=0)
        out = np.asarray(self.evaluator(x, t), dtype=float)
        # phi(x, 0) = 0 is part of the definition, not of the formula
        return np.where(t == 0, 0.0, out)

    def grid(self, xs, ts) -> np.ndarray:
        """phi on the product xs x ts, shape (len(xs), len(ts))."""
        xs = np.asarray(xs, dtype=float).reshape(-1, self.domain.dim)
        ts = np.asarray(ts, dtype=float).reshape(-1)
        xx = np.repeat(xs, len(ts), axis=0)
        tt = np.tile(ts, len(xs))
        return self.values(xx, tt).reshape(len(xs), len(ts))

    def describe(self) -> dict:
        return {"name": self.name, "params": dict(self.params), "a": self.a,
                "strength": self.strength, "domain": self.domain.describe()}


def evaluate(family: PhiFamily, x, t: float) -> float:
    """phi(x, t) at a single admissible point; raises DomainError otherwise."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    pts = family.domain.require_admissible(x)
    return float(family.values(pts[:1], np.array([t]))[0])


@dataclass
class Violation:
    x: tuple
    t: float
    axiom: str
    detail: float = float("nan")


@dataclass
class Classification:
    strength: Optional[str]
    violations: list[Violation]

    @property
    def admitted(self) -> bool:
        return self.strength is not None


def _ratio_constant(f: np.ndarray, increasing: bool):
    """Almost-monotonicity constant of each row of f along its columns.

    Returns (constant, argmax index per row, number of skipped inf/inf samples).
    """
    if increasing:
        run = np.maximum.accumulate(f, axis=1)
        r = safe_ratio(run, f)
    else:
        run = np.minimum.accumulate(f, axis=1)
        r = safe_ratio(f, run)
    skipped = int(np.sum(np.isinf(run) & np.isinf(f)))
    r = np.where(np.isnan(r), 1.0, r)
    idx = np.argmax(r, axis=1)
    return r[np.arange(len(r)), idx], idx, skipped


def _midpoint_pairs(ts: np.ndarray):
    """Index pairs (i, i + stride) and their midpoints for strides 1, 2, 4, ..."""
    k = len(ts)
    stride = 1
    while stride < k:
        i = np.arange(0, k - stride)
        j = i + stride
        yield i, j, 0.5 * (ts[i] + ts[j])
        stride *= 2


def classify(family: PhiFamily, plan: SamplePlan) -> Classification:
    """Check the weak (and, if they pass, strong) Phi-function axioms on the plan."""
    xs = plan.x_points
    ts = plan.t_grid
    vals = family.grid(xs, ts)
    out: list[Violation] = []

    def flag(i, k, axiom, detail=float("nan")):
        out.append(Violation(tuple(xs[i].tolist()), float(ts[k]), axiom, float(detail)))

    zero = np.flatnonzero(ts == 0)
    if len(zero):
        for i in np.flatnonzero(vals[:, zero[0]] != 0):
            flag(i, zero[0], "zero_at_origin", vals[i, zero[0]])
    dec = vals[:, 1:] < vals[:, :-1]
    for i in np.flatnonzero(dec.any(axis=1)):
        flag(i, int(np.argmax(dec[i])) + 1, "increasing")
    pos = ts > 0
    tpos = ts[pos]
    vpos = vals[:, pos]
    k0 = int(np.flatnonzero(pos)[0])
    for i in np.flatnonzero(vpos[:, 0] > VANISH_LEVEL):
        flag(i, k0, "vanishing_at_zero", vpos[i, 0])
    for i in np.flatnonzero(vpos[:, -1] < BLOWUP_LEVEL):
        flag(i, len(ts) - 1, "blowup_at_infinity", vpos[i, -1])
    a1, idx, _ = _ratio_constant(vpos / tpos, increasing=True)
    for i in np.flatnonzero(a1 > family.a * (1 + REL_TOL)):
        flag(i, k0 + int(idx[i]), "ainc1_ratio", a1[i])

    if out:
        return Classification(None, out)

    convex: list[Violation] = []
    for i_idx, j_idx, mids in _midpoint_pairs(ts):
        mvals = family.grid(xs, mids)
        avg = 0.5 * (vals[:, i_idx] + vals[:, j_idx])
        bad = mvals > avg * (1 + REL_TOL) + 1e-300
        for i in np.flatnonzero(bad.any(axis=1)):
            c = int(np.argmax(bad[i]))
            convex.append(Violation(tuple(xs[i].tolist()), float(mids[c]), "convex",
                                    float(mvals[i, c] - avg[i, c])))
    convex += _continuity_breaks(family, xs, ts, vals)
    if convex:
        return Classification("weak", convex)
    return Classification("strong", [])


def _continuity_breaks(family, xs, ts, vals) -> list[Violation]:
    """Jumps from a finite value to +inf (phi is not continuous into [0, inf])."""
    out = []
    fin = np.isfinite(vals)
    for i in range(len(xs)):
        cut = np.flatnonzero(fin[i, :-1] & ~fin[i, 1:])
        for k in cut:
            lo, hi = ts[k], ts[k + 1]
            x1 = xs[i:i + 1]
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if mid in (lo, hi):
                    break
                if np.isfinite(family.values(x1, [mid])[0]):
                    lo = mid
                else:
                    hi = mid
            left = family.values(x1, [lo])[0]
            if left < BLOWUP_LEVEL * 1e3:
                out.append(Violation(tuple(xs[i].tolist()), float(hi), "continuous", float(left)))
    return out


@dataclass
class GrowthEstimate:
    p: float
    q: float
    a_p: float
    a_q: float
    verdict_p: str
    verdict_q: str
    flagged: int = 0


def _growth_constants(family, p, q, plan):
    ts = plan.positive_t
    vals = family.grid(plan.x_points, ts)
    with np.errstate(over="ignore"):
        ap, _, s1 = _ratio_constant(vals / ts ** p, increasing=True)
        aq, _, s2 = _ratio_constant(vals / ts ** q, increasing=False)
    return float(np.max(ap)), float(np.max(aq)), s1 + s2


def _stable(coarse: float, fine: float) -> bool:
    return np.isfinite(coarse) and np.isfinite(fine) and fine <= DIVERGENCE_FACTOR * coarse


def estimate_growth(family: PhiFamily, p: float, q: float, plan: SamplePlan) -> GrowthEstimate:
    """Estimate the (aInc)_p and (aDec)_q constants; one refinement decides the verdict."""
    if p <= 0 or q <= 0:
        raise ValueError("exponents must be positive")
    ap, aq, flagged = _growth_constants(family, p, q, plan)
    ap2, aq2, flagged2 = _growth_constants(family, p, q, plan.refined())
    if flagged or flagged2:
        log.warning("estimate_growth: skipped %d inf/inf ratios", flagged + flagged2)
    return GrowthEstimate(p, q, ap, aq,
                          "holds" if _stable(ap, ap2) else "fails",
                          "holds" if _stable(aq, aq2) else "fails",
                          flagged + flagged2)


@dataclass
class EquivalenceCertificate:
    kind: str
    constant: float
    verified_on: SamplePlan

    holds = True


@dataclass
class EquivalenceViolation:
    kind: str
    x: tuple
    t: float
    constant_coarse: float
    constant_refined: float

    holds = False


KINDS = ("valuewise", "argumentwise")
_KIND_ALIASES = {"≈": "valuewise", "approx": "valuewise", "valuewise": "valuewise",
                 "≃": "argumentwise", "simeq": "argumentwise", "argumentwise": "argumentwise"}


def _valuewise_constant(phi, psi, plan):
    ts = plan.t_grid
    u = phi.grid(plan.x_points, ts)
    v = psi.grid(plan.x_points, ts)
    r = np.fmax(safe_ratio(v, u), safe_ratio(u, v))
    r = np.where(np.isnan(r), 1.0, r)
    i, k = np.unravel_index(np.argmax(r), r.shape)
    return max(1.0, float(r[i, k])), (i, k)


def _argumentwise_ok(phi, psi, xs, ts, c):
    v = psi.grid(xs, ts)
    with np.errstate(over="ignore"):
        below = phi.grid(xs, ts / c)
        above = phi.grid(xs, ts * c)
    bad = (below > v * (1 + REL_TOL)) | (v > above * (1 + REL_TOL))
    return not bad.any(), bad


def _argumentwise_constant(phi, psi, plan, c_max=1e12):
    xs, ts = plan.x_points, plan.t_grid
    ok, bad = _argumentwise_ok(phi, psi, xs, ts, c_max)
    if not ok:
        i, k = np.unravel_index(np.argmax(bad), bad.shape)
        return np.inf, (i, k)
    ok, bad = _argumentwise_ok(phi, psi, xs, ts, 1.0)
    if ok:
        return 1.0, (0, 0)
    witness = np.unravel_index(np.argmax(bad), bad.shape)
    lo, hi = 0.0, np.log(c_max)
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        ok, bad = _argumentwise_ok(phi, psi, xs, ts, np.exp(mid))
        if ok:
            hi = mid
        else:
            lo = mid
            witness = np.unravel_index(np.argmax(bad), bad.shape)
    return float(np.exp(hi)), witness


def check_equivalence(phi: PhiFamily, psi: PhiFamily, kind: str, plan: SamplePlan):
    """Smallest c with phi ≈ psi (valuewise) or phi ≃ psi (argumentwise) on the plan.

    The constant is recomputed on ``plan.refined()``; if it is infinite or
    more than doubles, the pair is reported as not equivalent.
    """
    kind = _KIND_ALIASES[kind]
    if phi.domain != psi.domain:
        raise ValueError("families must share a domain")
    fn = _valuewise_constant if kind == "valuewise" else _argumentwise_constant
    c, _ = fn(phi, psi, plan)
    fine_plan = plan.refined()
    c2, (i, k) = fn(phi, psi, fine_plan)
    if _stable(c, c2):
        return EquivalenceCertificate(kind, c, plan)
    return EquivalenceViolation(kind, tuple(fine_plan.x_points[i].tolist()),
                                float(fine_plan.t_grid[k]), c, c2)
