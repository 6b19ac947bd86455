"""Witnesses (beta, h) for the decay conditions."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..core.domain import SpatialDomain, unit_ball_volume

H_FORMS = ("zero", "indicator", "decaying")


class UsageError(ValueError):
    """A transformation or constructor was called outside its proved range."""


@dataclass(frozen=True)
class HFunction:
    """min(coef * g(x), cap) with g = chi_Omega or min(1, |x|^-(n+1)).

    Only these parametric forms are searched over; they keep ||h||_1 finite
    and computable without quadrature.
    """

    form: str
    coef: float
    domain: SpatialDomain
    cap: Optional[float] = None

    def __post_init__(self):
        if self.form not in H_FORMS:
            raise ValueError(f"unknown h form {self.form!r}")
        if self.coef < 0 or (self.cap is not None and self.cap < 0):
            raise ValueError("h must be nonnegative")

    def __call__(self, x) -> np.ndarray:
        pts = np.asarray(x, dtype=float).reshape(-1, self.domain.dim)
        if self.form == "zero" or self.coef == 0:
            return np.zeros(len(pts))
        if self.form == "indicator":
            g = self.domain.indicator(pts)
        else:
            r = np.linalg.norm(pts, axis=-1)
            with np.errstate(divide="ignore"):
                g = np.minimum(1.0, r ** -(self.domain.dim + 1.0))
        v = self.coef * g
        return v if self.cap is None else np.minimum(v, self.cap)

    @property
    def sup_bound(self) -> float:
        if self.form == "zero":
            return 0.0
        return self.coef if self.cap is None else min(self.coef, self.cap)

    @property
    def l1_bound(self) -> float:
        sup = self.sup_bound
        if sup == 0:
            return 0.0
        if self.form == "indicator" or self.domain.bounded:
            # exact for the indicator form, an upper bound for the decaying one
            return sup * self.domain.measure
        n = self.domain.dim
        w = unit_ball_volume(n)
        # integral of min(c g, m) over R^n, with g = 1 on |x| < 1 and |x|^-(n+1) outside
        c, m = self.coef, self.sup_bound
        if m >= c:
            return c * w * (n + 1)
        radius = (c / m) ** (1.0 / (n + 1))
        return m * w * radius ** n + c * n * w / radius

    def scaled(self, factor: float) -> "HFunction":
        cap = None if self.cap is None else self.cap * factor
        return replace(self, coef=self.coef * factor, cap=cap)

    def capped(self, level: float) -> "HFunction":
        cap = level if self.cap is None else min(self.cap, level)
        if self.form == "indicator":
            return replace(self, coef=min(self.coef, cap), cap=None)
        return replace(self, cap=cap)

    def describe(self) -> str:
        base = {"zero": "0", "indicator": f"{self.coef!r}*chi_Omega",
                "decaying": f"{self.coef!r}*min(1,|x|^-(n+1))"}[self.form]
        return base if self.cap is None else f"min({base},{self.cap!r})"


@dataclass(frozen=True)
class Witness:
    beta: float
    h: HFunction
    sigma: float

    def __post_init__(self):
        if not (0 < self.beta <= 1):
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if not (math.isfinite(self.sup_bound) and math.isfinite(self.l1_bound)):
            raise ValueError("h must lie in L^1 and L^inf")

    @property
    def sup_bound(self) -> float:
        return self.h.sup_bound

    @property
    def l1_bound(self) -> float:
        return self.h.l1_bound

    @property
    def h_form(self) -> str:
        return self.h.describe()

    def with_beta(self, beta: float) -> "Witness":
        return replace(self, beta=beta)

    def describe(self) -> dict:
        return {"beta": self.beta, "h_form": self.h_form, "sigma": self.sigma,
                "sup_bound": self.sup_bound, "l1_bound": self.l1_bound}


def zero_h(domain: SpatialDomain) -> HFunction:
    return HFunction("zero", 0.0, domain)


def indicator_h(domain: SpatialDomain, coef: float = 1.0) -> HFunction:
    return HFunction("indicator", coef, domain)


def decaying_h(domain: SpatialDomain, coef: float = 1.0) -> HFunction:
    return HFunction("decaying", coef, domain)


def parametric_h(domain: SpatialDomain, coef: float) -> HFunction:
    """The searched form: c chi_Omega on bounded domains, c min(1, |x|^-(n+1)) otherwise."""
    if coef == 0:
        return zero_h(domain)
    return indicator_h(domain, coef) if domain.bounded else decaying_h(domain, coef)
