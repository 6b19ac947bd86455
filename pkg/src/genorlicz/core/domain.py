"""Spatial domains and the finite sample plans that replace "a.e." quantifiers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

SHAPES = ("ball", "box", "whole")


class DomainError(ValueError):
    """Raised when a point is outside the domain or in its exceptional set."""


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def _as_points(x, dim: int) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if dim == 1 and pts.ndim <= 1:
        return pts.reshape(-1, 1)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.shape[-1] != dim:
        raise DomainError(f"points have dimension {pts.shape[-1]}, domain has {dim}")
    return pts


@dataclass(frozen=True)
class SpatialDomain:
    """Ball, axis-aligned box or all of R^n, minus finitely many points.

    The excluded points stand in for a null set: evaluating a family there is
    an error, and refinement steers samples toward them.
    """

    shape: str
    dim: int
    center: tuple[float, ...] = ()
    radius: float = 1.0
    lower: tuple[float, ...] = ()
    upper: tuple[float, ...] = ()
    excluded_points: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown domain shape {self.shape!r}")
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if self.shape == "ball":
            if not self.center:
                object.__setattr__(self, "center", (0.0,) * self.dim)
            if len(self.center) != self.dim or self.radius <= 0:
                raise ValueError("ball needs a center of length dim and radius > 0")
        if self.shape == "box":
            if len(self.lower) != self.dim or len(self.upper) != self.dim:
                raise ValueError("box bounds must have length dim")
            if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
                raise ValueError("box needs lower < upper on every axis")
        ex = tuple(tuple(float(c) for c in p) for p in self.excluded_points)
        object.__setattr__(self, "excluded_points", ex)
        for p in ex:
            if len(p) != self.dim or not self._inside(np.asarray([p]))[0]:
                raise ValueError(f"excluded point {p} does not lie in the domain")

    # construction helpers
    @classmethod
    def ball(cls, dim=2, radius=1.0, center=None, punctured=False):
        c = tuple(center) if center is not None else (0.0,) * dim
        return cls("ball", dim, center=c, radius=radius, excluded_points=(c,) if punctured else ())

    @classmethod
    def box(cls, lower, upper, excluded_points=()):
        return cls("box", len(lower), lower=tuple(lower), upper=tuple(upper),
                   excluded_points=tuple(excluded_points))

    @classmethod
    def interval(cls, a, b, excluded_points=()):
        return cls.box((a,), (b,), excluded_points=tuple((float(p),) for p in excluded_points))

    @classmethod
    def whole(cls, dim=1):
        return cls("whole", dim)

    @property
    def bounded(self) -> bool:
        return self.shape != "whole"

    @property
    def measure(self) -> float:
        if self.shape == "ball":
            return unit_ball_volume(self.dim) * self.radius ** self.dim
        if self.shape == "box":
            return float(np.prod(np.subtract(self.upper, self.lower)))
        return math.inf

    @property
    def scale(self) -> float:
        """Characteristic length used to space lattices."""
        if self.shape == "ball":
            return self.radius
        if self.shape == "box":
            return 0.5 * float(np.min(np.subtract(self.upper, self.lower)))
        return 4.0

    def _inside(self, pts: np.ndarray) -> np.ndarray:
        if self.shape == "ball":
            return np.linalg.norm(pts - np.asarray(self.center), axis=-1) < self.radius
        if self.shape == "box":
            return np.all((pts > np.asarray(self.lower)) & (pts < np.asarray(self.upper)), axis=-1)
        return np.all(np.isfinite(pts), axis=-1)

    def is_excluded(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        out = np.zeros(len(pts), dtype=bool)
        for p in self.excluded_points:
            out |= np.all(pts == np.asarray(p), axis=-1)
        return out

    def admissible(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        return self._inside(pts) & ~self.is_excluded(pts)

    def require_admissible(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        ok = self.admissible(pts)
        if not np.all(ok):
            bad = pts[np.argmin(ok)]
            raise DomainError(f"point {bad.tolist()} is excluded or outside the domain")
        return pts

    def indicator(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        return self._inside(pts).astype(float)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Lower and upper corners; R^n is represented by a cube of side 2 * scale."""
        if self.shape == "ball":
            c = np.asarray(self.center, dtype=float)
            return c - self.radius, c + self.radius
        if self.shape == "box":
            return np.asarray(self.lower, dtype=float), np.asarray(self.upper, dtype=float)
        return -np.full(self.dim, self.scale), np.full(self.dim, self.scale)

    def distance_to_boundary(self, x) -> np.ndarray:
        """Distance from each point to the complement of the domain (inf for R^n)."""
        pts = _as_points(x, self.dim)
        if self.shape == "ball":
            return self.radius - np.linalg.norm(pts - np.asarray(self.center), axis=-1)
        if self.shape == "box":
            lo, hi = self.bounding_box()
            return np.minimum(np.min(pts - lo, axis=-1), np.min(hi - pts, axis=-1))
        return np.full(len(pts), np.inf)

    def lattice(self, per_axis: int) -> np.ndarray:
        """Cell midpoints of a per_axis^n grid over the bounding box, kept if admissible."""
        lo, hi = self.bounding_box()
        axes = [lo[i] + (hi[i] - lo[i]) * (np.arange(per_axis) + 0.5) / per_axis
                for i in range(self.dim)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        return pts[self.admissible(pts)]

    def refinement_points(self, depth: int) -> np.ndarray:
        """Points at refinement level ``depth``.

        Each excluded point is approached along the first axis at distance
        r0 * 2**-depth; the boundary (or infinity, for R^n) is approached
        along every +-axis direction.
        """
        n = self.dim
        pts = []
        e1 = np.eye(n)[0]
        for p in self.excluded_points:
            p = np.asarray(p)
            r0 = 0.5 * self._distance_to_boundary(p)
            pts.append(p + r0 * 2.0 ** (-depth) * e1)
        dirs = np.concatenate([np.eye(n), -np.eye(n)])
        if self.shape == "ball":
            c = np.asarray(self.center)
            pts.extend(c + self.radius * (1 - 2.0 ** (-depth)) * d for d in dirs)
        elif self.shape == "box":
            lo, hi = np.asarray(self.lower), np.asarray(self.upper)
            mid, half = (lo + hi) / 2, (hi - lo) / 2
            pts.extend(mid + half * (1 - 2.0 ** (-depth)) * d for d in dirs)
        else:
            pts.extend(2.0 ** depth * d for d in dirs)
        pts = np.asarray(pts, dtype=float).reshape(-1, n)
        return pts[self.admissible(pts)]

    def _distance_to_boundary(self, p: np.ndarray) -> float:
        d = float(self.distance_to_boundary(p)[0])
        return d if np.isfinite(d) else 1.0

    def describe(self) -> dict:
        d = {"shape": self.shape, "dim": self.dim}
        if self.shape == "ball":
            d.update(center=list(self.center), radius=self.radius)
        elif self.shape == "box":
            d.update(lower=list(self.lower), upper=list(self.upper))
        d["excluded_points"] = [list(p) for p in self.excluded_points]
        return d


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def measure(self) -> float:
        return unit_ball_volume(self.dim) * self.radius ** self.dim

    def sample(self, domain: SpatialDomain, extra_depth: int = 0) -> np.ndarray:
        """Center plus +-axis points at 0.5r and 0.95r, restricted to the domain.

        ``extra_depth`` > 0 adds a point approaching the center at r * 2**-k,
        which is how refinement reaches a puncture sitting at the center.
        """
        c = np.asarray(self.center)
        dirs = np.concatenate([np.eye(self.dim), -np.eye(self.dim)])
        pts = [c] + [c + f * self.radius * d for f in (0.5, 0.95) for d in dirs]
        if extra_depth:
            pts.append(c + self.radius * 2.0 ** (-extra_depth) * np.eye(self.dim)[0])
        pts = np.asarray(pts)
        return pts[domain.admissible(pts)]


def default_balls(domain: SpatialDomain, kmax: int = 4) -> tuple[Ball, ...]:
    """Radii 2^-k with |B| <= 1, centers on a coarse lattice plus every excluded point."""
    w = unit_ball_volume(domain.dim)
    radii = [2.0 ** -k for k in range(0, kmax + 8) if w * 2.0 ** (-k * domain.dim) <= 1.0][:kmax]
    centers = [tuple(c) for c in domain.lattice(4)] + list(domain.excluded_points)
    return tuple(Ball(tuple(float(v) for v in c), r) for r in radii for c in centers)


def log_grid(lo: float, hi: float, n: int, with_zero: bool = True) -> np.ndarray:
    g = np.logspace(math.log10(lo), math.log10(hi), n)
    return np.concatenate([[0.0], g]) if with_zero else g


@dataclass(frozen=True, eq=False)
class SamplePlan:
    """Finite stand-in for "a.e. x, y in Omega" and "every t"."""

    domain: SpatialDomain
    x_points: np.ndarray
    t_grid: np.ndarray
    tau_grid: np.ndarray
    ball_family: tuple[Ball, ...] = ()
    refinement_depth: int = 60
    span: tuple[float, float] = (1e-8, 1e8)
    per_axis: int = 9
    grid_points: int = 400
    seed_depth: int = 12
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("x_points", "t_grid", "tau_grid"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for g in (self.t_grid, self.tau_grid):
            if np.any(np.diff(g) <= 0):
                raise ValueError("grids must be strictly increasing")
        if self.x_points.ndim != 2 or len(self.x_points) == 0:
            raise ValueError("plan needs at least one sample point")
        if np.any(self.domain.is_excluded(self.x_points)):
            raise ValueError("sample points must avoid excluded points")
        for b in self.ball_family:
            if 1.0 / b.measure < 1.0:
                raise ValueError(f"ball {b} has |B| > 1")

    @property
    def positive_t(self) -> np.ndarray:
        return self.t_grid[self.t_grid > 0]

    def refined(self) -> "SamplePlan":
        """Double the grid density, widen the span by a decade each way, double the lattice."""
        return build_plan(self.domain, per_axis=2 * self.per_axis,
                          grid_points=2 * self.grid_points,
                          span=(self.span[0] / 10, self.span[1] * 10),
                          refinement_depth=self.refinement_depth,
                          seed_depth=self.seed_depth, ball_family=self.ball_family)

    def with_points(self, x_points) -> "SamplePlan":
        return replace(self, x_points=np.asarray(x_points, dtype=float))

    def describe(self) -> dict:
        return {
            "n_x_points": int(len(self.x_points)),
            "grid_points": self.grid_points,
            "span": list(self.span),
            "per_axis": self.per_axis,
            "seed_depth": self.seed_depth,
            "refinement_depth": self.refinement_depth,
            "n_balls": len(self.ball_family),
        }


def build_plan(domain: SpatialDomain, per_axis: int = 9, grid_points: int = 400,
               span=(1e-8, 1e8), refinement_depth: int = 60, seed_depth: int = 12,
               ball_family=None, ball_kmax: int = 4) -> SamplePlan:
    """Deterministic plan: lattice points plus refinement points down to ``seed_depth``."""
    pts = [domain.lattice(per_axis)]
    pts += [domain.refinement_points(d) for d in range(1, seed_depth + 1)]
    x = np.unique(np.concatenate(pts), axis=0)
    grid = log_grid(span[0], span[1], grid_points)
    balls = default_balls(domain, ball_kmax) if ball_family is None else tuple(ball_family)
    return SamplePlan(domain, x, grid, grid.copy(), balls, refinement_depth,
                      tuple(span), per_axis, grid_points, seed_depth)


def default_plan(domain: SpatialDomain, **overrides) -> SamplePlan:
    return build_plan(domain, **overrides)
