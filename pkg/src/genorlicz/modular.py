"""The integral modular, the Luxemburg norm and mollification experiments.

Functions are sampled on a uniform midpoint grid over the bounding box of
their domain; grid nodes outside the domain or on an excluded point get
weight zero.  For boxes the weights are exactly the cell volume; for other
shapes they are rescaled so that they sum to the measure of the domain.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import ndimage

from .conditions.checks import check_A1
from .conditions.report import ConditionReport
from .conditions.witness import UsageError
from .core.domain import SpatialDomain, build_plan
from .core.extended import INF
from .core.family import PhiFamily

log = logging.getLogger(__name__)

DEFAULT_RESOLUTION = {1: 2048, 2: 128}
NORM_BRACKET = (1e-12, 1e12)
NORM_ITERATIONS = 200
NORM_REL_TOL = 1e-13


class UnboundedNormError(ArithmeticError):
    """The modular of f / lambda stays above 1 for every lambda in the bracket."""


class PreconditionError(RuntimeError):
    """The density experiment's (A1) precheck failed; ``report`` holds the certificate."""

    def __init__(self, report: ConditionReport):
        super().__init__(f"(A1) fails: {report.violation}")
        self.report = report


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Values of f on a uniform midpoint grid, with quadrature weights.

    ``values`` and ``weights`` have the grid's shape; ``spacing`` is the
    cell width per axis and ``lower`` the lower corner of the grid box.
    """

    domain: SpatialDomain
    lower: tuple[float, ...]
    spacing: tuple[float, ...]
    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.weights.shape:
            raise ValueError("values and weights must share the grid shape")
        if len(self.spacing) != self.domain.dim or self.values.ndim != self.domain.dim:
            raise ValueError("grid dimension must match the domain")
        for name in ("values", "weights"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def nodes(self) -> np.ndarray:
        """All grid nodes, shape (N, n) in C order."""
        return grid_nodes(self.lower, self.spacing, self.shape)

    @property
    def active(self) -> np.ndarray:
        return self.weights > 0

    def with_values(self, values) -> "SampledFunction":
        v = np.where(self.active, np.asarray(values, dtype=float), 0.0)
        return replace(self, values=v)

    def scaled(self, c: float) -> "SampledFunction":
        return self.with_values(c * self.values)

    def support_nodes(self) -> np.ndarray:
        return self.nodes[(self.values != 0).ravel() & self.active.ravel()]

    def to_csv(self, path) -> None:
        """Write the active nodes as ``x1, ..., xn, value`` rows."""
        path = Path(path)
        nodes = self.nodes[self.active.ravel()]
        vals = self.values[self.active]
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i + 1}" for i in range(self.domain.dim)] + ["value"])
            for p, v in zip(nodes, vals):
                w.writerow([repr(float(c)) for c in p] + [repr(float(v))])

    @classmethod
    def from_csv(cls, path, domain: SpatialDomain, resolution: Optional[int] = None):
        """Read a CSV written by :meth:`to_csv` back onto the grid of ``domain``.

        Nodes are matched to the grid by rounding; missing nodes read as 0.
        """
        rows = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
        if rows.shape[1] != domain.dim + 1:
            raise ValueError(f"expected {domain.dim + 1} columns, found {rows.shape[1]}")
        base = sample_function(domain, lambda x: np.zeros(len(x)), resolution)
        idx = np.rint((rows[:, :-1] - np.asarray(base.lower)) / np.asarray(base.spacing) - 0.5)
        idx = idx.astype(int)
        if np.any(idx < 0) or np.any(idx >= np.asarray(base.shape)):
            raise ValueError("CSV nodes fall outside the domain grid")
        vals = np.zeros(base.shape)
        vals[tuple(idx.T)] = rows[:, -1]
        return base.with_values(vals)


def grid_nodes(lower, spacing, shape) -> np.ndarray:
    axes = [lower[i] + spacing[i] * (np.arange(shape[i]) + 0.5) for i in range(len(shape))]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(shape))


def sample_function(domain: SpatialDomain, fn: Callable[[np.ndarray], np.ndarray],
                    resolution: Optional[int] = None) -> SampledFunction:
    """Sample ``fn`` (vectorised over an (N, n) array) on the midpoint grid of ``domain``."""
    if not domain.bounded:
        raise UsageError("sampled functions need a bounded domain")
    n = domain.dim
    res = resolution or DEFAULT_RESOLUTION.get(n, 32)
    lo, hi = domain.bounding_box()
    spacing = tuple(float(s) for s in (hi - lo) / res)
    shape = (res,) * n
    nodes = grid_nodes(tuple(lo), spacing, shape)
    ok = domain.admissible(nodes)
    cell = float(np.prod(spacing))
    w = ok * cell
    if domain.shape != "box" and ok.any():
        w = ok * (domain.measure / ok.sum())
    vals = np.zeros(len(nodes))
    if ok.any():
        vals[ok] = np.asarray(fn(nodes[ok]), dtype=float)
    return SampledFunction(domain, tuple(float(v) for v in lo), spacing,
                           vals.reshape(shape), w.reshape(shape))


def modular(family: PhiFamily, f: SampledFunction) -> float:
    """sum of weights * phi(node, |f(node)|); +inf as soon as one term is."""
    act = f.active.ravel()
    nodes = f.nodes[act]
    terms = family.values(nodes, np.abs(f.values.ravel()[act])) * f.weights.ravel()[act]
    if np.any(np.isinf(terms)):
        return INF
    return float(np.sum(terms))


def luxemburg_norm(family: PhiFamily, f: SampledFunction) -> float:
    """inf{lam > 0 : modular(f / lam) <= 1}, by bisection on log lam."""
    if not np.any(f.values[f.active]):
        return 0.0
    lo, hi = NORM_BRACKET

    def fits(lam):
        return modular(family, f.scaled(1.0 / lam)) <= 1.0

    if not fits(hi):
        raise UnboundedNormError(f"modular(f / {hi:g}) > 1")
    if fits(lo):
        return lo
    for _ in range(NORM_ITERATIONS):
        mid = math.sqrt(lo * hi)
        if fits(mid):
            hi = mid
        else:
            lo = mid
        if hi - lo <= NORM_REL_TOL * hi:
            break
    return hi


@dataclass(frozen=True)
class Mollifier:
    """exp(-1 / (1 - |z/eps|^2)) on |z| < eps, normalised on the sampling grid."""

    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    def profile(self, z) -> np.ndarray:
        r2 = np.sum((np.asarray(z, dtype=float) / self.epsilon) ** 2, axis=-1)
        out = np.zeros(r2.shape)
        inside = r2 < 1
        out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
        return out

    def weights(self, spacing: Sequence[float]) -> np.ndarray:
        """Discrete kernel on the grid offsets, summing to 1."""
        half = [int(math.floor(self.epsilon / h)) for h in spacing]
        if max(half) == 0:
            raise UsageError("epsilon is below the grid spacing")
        axes = [h * np.arange(-k, k + 1) for h, k in zip(spacing, half)]
        z = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        k = self.profile(z)
        return k / k.sum()


def mollify(f: SampledFunction, m: Mollifier) -> SampledFunction:
    """Discrete convolution f * sigma_eps; the support of f must keep a margin eps."""
    supp = f.support_nodes()
    if len(supp):
        margin = float(np.min(f.domain.distance_to_boundary(supp)))
        if margin < m.epsilon:
            raise UsageError(f"support of f is {margin:.3g} from the boundary, "
                             f"below epsilon = {m.epsilon:g}")
    k = m.weights(f.spacing)
    out = ndimage.convolve(f.values, k, mode="constant", cval=0.0)
    return f.with_values(out)


def gradient(f: SampledFunction) -> list[SampledFunction]:
    """Central-difference partial derivatives, one SampledFunction per axis."""
    parts = np.gradient(f.values, *f.spacing) if f.values.ndim > 1 else \
        [np.gradient(f.values, f.spacing[0])]
    return [f.with_values(g) for g in parts]


def gradient_magnitude(f: SampledFunction) -> SampledFunction:
    return f.with_values(np.sqrt(sum(g.values ** 2 for g in gradient(f))))


def bump(center=0.0, radius=1.0, height=1.0):
    """height * exp(1 - 1/(1 - |x - c|^2 / r^2)) on the ball B(c, r), peak ``height``."""
    def fn(x):
        x = np.asarray(x, dtype=float)
        c = np.broadcast_to(np.asarray(center, dtype=float), x.shape[-1:])
        r2 = np.sum(((x - c) / radius) ** 2, axis=-1)
        out = np.zeros(r2.shape)
        inside = r2 < 1
        out[inside] = height * np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
        return out
    return fn


def envelope_domain(lower, upper, excluded_points=()) -> SpatialDomain:
    """The box of points within distance 1 of the box [lower, upper] (per axis)."""
    lo = np.asarray(lower, dtype=float) - 1.0
    hi = np.asarray(upper, dtype=float) + 1.0
    keep = [p for p in excluded_points
            if np.all(np.asarray(p) > lo) and np.all(np.asarray(p) < hi)]
    return SpatialDomain.box(tuple(lo), tuple(hi), excluded_points=tuple(keep))


@dataclass
class DensityRow:
    epsilon: float
    norm: float
    gradient_norm: float
    modular: float


@dataclass
class DensityResult:
    family: str
    f_norm: float
    rows: list = field(default_factory=list)
    threshold_ratio: float = 0.1
    precheck: Optional[ConditionReport] = None

    @property
    def norms(self) -> np.ndarray:
        return np.array([r.norm for r in self.rows])

    @property
    def decreasing(self) -> bool:
        """Strictly decreasing after the first entry (the whole column when all positive)."""
        v = self.norms
        return bool(np.all(np.diff(v) < 0)) if np.any(v > 0) else True

    @property
    def passed(self) -> bool:
        last = self.rows[-1].norm if self.rows else 0.0
        return last <= self.threshold_ratio * self.f_norm

    def to_rows(self) -> list[dict]:
        return [{"epsilon": r.epsilon, "norm": r.norm, "gradient_norm": r.gradient_norm,
                 "modular": r.modular} for r in self.rows]


def density_experiment(family: PhiFamily, f: SampledFunction, eps_sequence: Sequence[float],
                       threshold_ratio: float = 0.1, check_local: bool = True,
                       plan_overrides: Optional[dict] = None) -> DensityResult:
    """||f * sigma_eps - f|| (and the same for the gradient) for each eps.

    The sampled domain of ``f`` plays the role of the envelope
    {dist(x, supp f) < 1}; (A1) is checked on it first unless disabled.
    """
    eps = [float(e) for e in eps_sequence]
    if any(not (0 < e < 1) for e in eps):
        raise UsageError("every epsilon must lie in (0, 1)")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise UsageError("eps_sequence must be decreasing")
    pre = None
    if check_local:
        fam = replace(family, domain=f.domain)
        plan = build_plan(f.domain, **(plan_overrides or {}))
        pre = check_A1(fam, plan)
        if not pre.holds:
            raise PreconditionError(pre)
    result = DensityResult(family.name, luxemburg_norm(family, f),
                           threshold_ratio=threshold_ratio, precheck=pre)
    for e in eps:
        g = mollify(f, Mollifier(e))
        diff = g.with_values(g.values - f.values)
        dgrad = _gradient_difference(g, f)
        result.rows.append(DensityRow(e, luxemburg_norm(family, diff),
                                      luxemburg_norm(family, dgrad), modular(family, diff)))
    return result


def _gradient_difference(g: SampledFunction, f: SampledFunction) -> SampledFunction:
    parts = zip(gradient(g), gradient(f))
    return f.with_values(np.sqrt(sum((a.values - b.values) ** 2 for a, b in parts)))
