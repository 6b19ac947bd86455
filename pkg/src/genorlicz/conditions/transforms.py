"""Explicit witness transformations between the equivalent decay formulations.

Formulation ids (with their numeric aliases):

====== ===== ==========================================================
id     alias inequality
====== ===== ==========================================================
A2new  1     beta inv(x, tau) <= inv(y, tau + h(x) + h(y)), tau in [0, s]
A2phi  2     phi(x, beta t) <= phi(y, t) + h(x) + h(y) if phi(y, t) <= s
A2max  3     inverse inequality at level max{tau, h(x) + h(y)}
A2old4 4     inverse inequality for tau in [h(x) + h(y), s], sup h <= s/2
A2old5 5     inverse inequality for tau in [h(x) + h(y), s], plus (A0)
A0     -     beta <= inv(x, 1) <= 1/beta
====== ===== ==========================================================

``inv`` is the left-inverse in t and ``a`` the almost-increasing constant
of phi(x, t)/t, which makes tau -> inv(x, tau)/tau almost decreasing with
the same constant.  The arrows 1 <-> 2 and 4 -> 2 are the identity on
strong families; the caller is responsible for that precondition.
"""

from __future__ import annotations

from typing import Optional

from .witness import UsageError, Witness, zero_h

ALIASES = {1: "A2new", 2: "A2phi", 3: "A2max", 4: "A2old4", 5: "A2old5",
           "1": "A2new", "2": "A2phi", "3": "A2max", "4": "A2old4", "5": "A2old5"}
FORMULATIONS = ("A2new", "A2phi", "A2max", "A2old4", "A2old5", "A0")

IDENTITY_ARROWS = {
    ("A2new", "A2phi"), ("A2phi", "A2new"),
    ("A2max", "A2new"),
    ("A2old4", "A2new"), ("A2old4", "A2phi"), ("A2old4", "A2old5"),
}
ARROWS = IDENTITY_ARROWS | {("A2new", "A2max"), ("A2max", "A2old4"),
                            ("A2old5", "A2old4"), ("A2old4", "A0")}


def normalize(fid) -> str:
    fid = ALIASES.get(fid, fid)
    if fid not in FORMULATIONS:
        raise UsageError(f"unknown formulation {fid!r}; expected one of {FORMULATIONS}")
    return fid


def new_to_max(w: Witness, a: float) -> Witness:
    """1 -> 3.  Doubling of the inverse costs 2a; a level h(x) + h(y) above
    sigma is pulled back to sigma at the price 2a sup h / sigma."""
    factor = 2 * a * max(1.0, 2 * a * w.sup_bound / w.sigma)
    return w.with_beta(w.beta / factor)


def max_to_old(w: Witness, a: float) -> Witness:
    """3 -> 4.  Rescale h to sup h = sigma/2 and pay beta sigma / (2a sup h)."""
    sup = w.sup_bound
    if sup <= w.sigma / 2:
        return w
    h = w.h.scaled(w.sigma / (2 * sup))
    return Witness(w.beta * w.sigma / (2 * a * sup), h, w.sigma)


def a0_from_old(w: Witness, inverse_at_one: tuple[float, float]) -> float:
    """4 -> (A0) constant beta * min{M, 1/m}; (m, M) are the inf and sup of inv(., 1).

    The tuple at tau = 1 must be covered, which needs sigma >= 1 and
    h(x) + h(y) <= 1.
    """
    if w.sigma < 1 or w.sup_bound > 0.5:
        raise UsageError("the (A0) constant needs sigma >= 1 and sup h <= 1/2")
    m, M = inverse_at_one
    if not (0 < m <= M < float("inf")):
        raise UsageError("inf and sup of inv(., 1) must be positive and finite")
    return min(1.0, w.beta * min(M, 1.0 / m))


def old_with_a0_to_old(w: Witness, a: float, a0_beta: float) -> Witness:
    """5 -> 4.  Cap h at sigma/2; pairs touched by the cap are handled by (A0)."""
    if not (0 < a0_beta <= 1):
        raise UsageError("a0_beta must lie in (0, 1]")
    if w.sup_bound <= w.sigma / 2:
        return w
    s = w.sigma
    via_a0 = a0_beta ** 2 / (max(1.0, a * s) * max(1.0, 2 * a / s))
    return Witness(min(w.beta, via_a0), w.h.capped(s / 2), s)


def transform_witness(source, target, w: Witness, a: float = 1.0,
                      a0_beta: Optional[float] = None,
                      inverse_at_one: Optional[tuple[float, float]] = None) -> Witness:
    """Map a witness along one proved arrow of the equivalence web.

    ``a0_beta`` is needed for 5 -> 4 and ``inverse_at_one`` = (inf, sup) of
    inv(., 1) for 4 -> A0; the (A0) target returns a witness whose beta is
    the (A0) constant and whose h is zero.
    """
    src, dst = normalize(source), normalize(target)
    if a < 1:
        raise UsageError("the almost-increasing constant a must be >= 1")
    if (src, dst) not in ARROWS:
        raise UsageError(f"no proved arrow {src} -> {dst}")
    if (src, dst) in IDENTITY_ARROWS:
        if src == "A2old4" and w.sup_bound > w.sigma / 2:
            raise UsageError("formulation 4 needs sup h <= sigma/2")
        return w
    if (src, dst) == ("A2new", "A2max"):
        return new_to_max(w, a)
    if (src, dst) == ("A2max", "A2old4"):
        return max_to_old(w, a)
    if (src, dst) == ("A2old5", "A2old4"):
        if a0_beta is None:
            raise UsageError("5 -> 4 needs the (A0) constant a0_beta")
        return old_with_a0_to_old(w, a, a0_beta)
    if inverse_at_one is None:
        raise UsageError("4 -> A0 needs inverse_at_one = (inf, sup) of inv(., 1)")
    return Witness(a0_from_old(w, inverse_at_one), zero_h(w.h.domain), w.sigma)


def transport_equivalent(w: Witness, L: float) -> Witness:
    """Witness for psi when phi ~ psi argumentwise with constant L >= 1."""
    if L < 1:
        raise UsageError("equivalence constant must be >= 1")
    return w.with_beta(w.beta / L ** 2)


def transport_conjugate(w: Witness, c: float) -> Witness:
    """Witness of the max-form for the conjugate, from the inverse-product constant c."""
    if c < 1:
        raise UsageError("product constant must be >= 1")
    return w.with_beta(w.beta / c ** 2)
