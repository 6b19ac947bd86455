"""Named Phi-families used throughout tests, the suite and the CLI."""

from __future__ import annotations

import numpy as np

from .domain import SpatialDomain
from .family import PhiFamily


def _radius(x):
    return np.linalg.norm(x, axis=-1)


def orlicz_power(p: float = 2.0, domain: SpatialDomain | None = None, scale: float = 1.0) -> PhiFamily:
    """x-independent scale * t^p."""
    domain = domain or SpatialDomain.ball(2)

    def ev(x, t):
        with np.errstate(over="ignore"):
            return scale * t ** p

    return PhiFamily("orlicz_power", ev, domain, a=1.0, ainc_p=(p, 1.0), adec_q=(p, 1.0),
                     strength="strong" if p >= 1 else "weak", params={"p": p, "scale": scale})


def exponent_map(p_min: float, p_max: float, domain: SpatialDomain):
    """Lipschitz exponent running linearly from p_min to p_max along the first axis."""
    if domain.shape == "ball":
        lo = domain.center[0] - domain.radius
        hi = domain.center[0] + domain.radius
    elif domain.shape == "box":
        lo, hi = domain.lower[0], domain.upper[0]
    else:
        lo, hi = -1.0, 1.0

    def p_of(x):
        s = np.clip((x[..., 0] - lo) / (hi - lo), 0.0, 1.0)
        return p_min + (p_max - p_min) * s

    return p_of


def variable_exponent(p_min: float = 2.0, p_max: float = 4.0,
                      domain: SpatialDomain | None = None) -> PhiFamily:
    """t^{p(x)} with p Lipschitz, p(Omega) = [p_min, p_max]."""
    domain = domain or SpatialDomain.ball(2)
    p_of = exponent_map(p_min, p_max, domain)

    def ev(x, t):
        with np.errstate(over="ignore"):
            return t ** p_of(x)

    return PhiFamily("variable_exponent", ev, domain, a=1.0, ainc_p=(p_min, 1.0),
                     adec_q=(p_max, 1.0), strength="strong" if p_min >= 1 else "weak",
                     params={"p_min": p_min, "p_max": p_max})


def double_phase(p: float = 2.0, q: float = 4.0, a_max: float = 1.0,
                 domain: SpatialDomain | None = None) -> PhiFamily:
    """t^p + a(x) t^q with a Lipschitz weight ranging over [0, a_max]."""
    domain = domain or SpatialDomain.ball(2)
    s_of = exponent_map(0.0, 1.0, domain)

    def ev(x, t):
        with np.errstate(over="ignore"):
            return t ** p + a_max * s_of(x) * t ** q

    return PhiFamily("double_phase", ev, domain, a=1.0, ainc_p=(p, 1.0), adec_q=(q, 1.0),
                     strength="strong", params={"p": p, "q": q, "a_max": a_max})


def example_1_1(dim: int = 2, domain: SpatialDomain | None = None) -> PhiFamily:
    """t^2 / |x| on the punctured unit ball: satisfies the old inverse-form
    decay condition vacuously but not the phi-form one."""
    domain = domain or SpatialDomain.ball(dim, punctured=True)

    def ev(x, t):
        with np.errstate(over="ignore", divide="ignore"):
            return t * t / _radius(x)

    return PhiFamily("example_1_1", ev, domain, a=1.0, ainc_p=(2.0, 1.0), adec_q=(2.0, 1.0),
                     strength="strong", params={"dim": domain.dim})


def step(jump: float = 1.0, domain: SpatialDomain | None = None) -> PhiFamily:
    """0 on [0, jump], +inf afterwards (the L^inf-type weak Phi-function)."""
    domain = domain or SpatialDomain.ball(2)

    def ev(x, t):
        return np.where(t <= jump, 0.0, np.inf)

    return PhiFamily("step", ev, domain, a=1.0, strength="weak", params={"jump": jump})


def from_function(name: str, fn, domain: SpatialDomain | None = None, a: float = 1.0,
                  strength: str = "weak", **params) -> PhiFamily:
    """Wrap an x-independent scalar formula fn(t) (vectorised over numpy arrays)."""
    domain = domain or SpatialDomain.ball(2)

    def ev(x, t):
        with np.errstate(over="ignore"):
            return fn(t)

    return PhiFamily(name, ev, domain, a=a, strength=strength, params=params)


GALLERY = {
    "orlicz_power": orlicz_power,
    "variable_exponent": variable_exponent,
    "double_phase": double_phase,
    "example_1_1": example_1_1,
    "step": step,
}

GALLERY_PARAMS = {
    "orlicz_power": {"p": 2.0},
    "variable_exponent": {"p_min": 2.0, "p_max": 4.0},
    "double_phase": {"p": 2.0, "q": 4.0, "a_max": 1.0},
    "example_1_1": {"dim": 2},
    "step": {"jump": 1.0},
}


def make_family(name: str, domain: SpatialDomain | None = None, **params) -> PhiFamily:
    if name not in GALLERY:
        raise KeyError(f"unknown family {name!r}; choose from {sorted(GALLERY)}")
    if name == "example_1_1" and domain is not None:
        params.pop("dim", None)
    return GALLERY[name](domain=domain, **params)
