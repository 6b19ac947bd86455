"""Run configuration: YAML in, validated and fully resolved dataclasses out.

Validation errors carry the dotted path of the offending field (and the
source line for YAML syntax errors) so the CLI can point at the problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from .core.domain import SpatialDomain
from .core.gallery import GALLERY, GALLERY_PARAMS

CHECK_IDS = ("A0", "A1", "A2new", "A2old", "A2phi", "A2max", "aIncP", "aDecQ")
WITNESS_MODES = ("given", "search", "counterexample")
H_FORMS = ("zero", "indicator", "decaying")
VERDICT_ALIASES = {"holds": "holds_on_samples", "holds_on_samples": "holds_on_samples",
                   "violated": "violated"}
PLAN_KEYS = ("per_axis", "grid_points", "refinement_depth", "seed_depth", "span")
POSITIVE_PARAMS = ("p", "q", "p_min", "p_max", "jump", "scale")
NONNEGATIVE_PARAMS = ("a_max",)


class ConfigError(ValueError):
    def __init__(self, where: str, message: str, line: Optional[int] = None):
        self.where = where
        self.line = line
        loc = f"line {line}: " if line is not None else ""
        super().__init__(f"{loc}{where}: {message}" if where else f"{loc}{message}")


def normalize_verdict(v: str, where: str) -> str:
    key = str(v).strip().lower()
    if key not in VERDICT_ALIASES:
        raise ConfigError(where, f"unknown verdict {v!r}; use holds or violated")
    return VERDICT_ALIASES[key]


def _mapping(node, where) -> dict:
    if node is None:
        return {}
    if not isinstance(node, dict):
        raise ConfigError(where, "expected a mapping")
    return node


def _number(node, where, positive=False, nonnegative=False, integer=False):
    if isinstance(node, bool) or not isinstance(node, (int, float, str)):
        raise ConfigError(where, f"expected a number, got {node!r}")
    try:
        val = int(node) if integer else float(node)
    except ValueError:
        raise ConfigError(where, f"expected a number, got {node!r}") from None
    if integer and float(node) != val:
        raise ConfigError(where, f"expected an integer, got {node!r}")
    if positive and not val > 0:
        raise ConfigError(where, "must be positive")
    if nonnegative and val < 0:
        raise ConfigError(where, "must be nonnegative")
    return val


def _unknown(node: dict, allowed, where):
    extra = sorted(set(node) - set(allowed))
    if extra:
        raise ConfigError(f"{where}.{extra[0]}" if where else extra[0], "unknown field")


@dataclass
class DomainSpec:
    shape: str = "ball"
    dim: int = 2
    radius: float = 1.0
    center: Optional[list] = None
    punctured: bool = False
    lower: Optional[list] = None
    upper: Optional[list] = None
    excluded_points: list = field(default_factory=list)

    def build(self) -> SpatialDomain:
        if self.shape == "ball":
            dom = SpatialDomain.ball(self.dim, self.radius, self.center, self.punctured)
            if self.excluded_points:
                from dataclasses import replace
                pts = tuple(tuple(map(float, p)) for p in self.excluded_points)
                dom = replace(dom, excluded_points=dom.excluded_points + pts)
            return dom
        if self.shape in ("box", "interval"):
            return SpatialDomain.box(self.lower, self.upper, tuple(map(tuple, self.excluded_points)))
        return SpatialDomain.whole(self.dim)

    def resolved(self) -> dict:
        d = {"shape": self.shape, "dim": self.dim}
        if self.shape == "ball":
            d.update(radius=self.radius, center=self.center, punctured=self.punctured)
        elif self.shape in ("box", "interval"):
            d.update(lower=self.lower, upper=self.upper)
        d["excluded_points"] = self.excluded_points
        return d


def parse_domain(node, where="domain") -> Optional[DomainSpec]:
    if node is None:
        return None
    node = _mapping(node, where)
    _unknown(node, ("shape", "dim", "radius", "center", "punctured", "lower", "upper",
                    "excluded_points", "a", "b"), where)
    shape = node.get("shape", "ball")
    if shape not in ("ball", "box", "interval", "whole"):
        raise ConfigError(f"{where}.shape", f"unknown shape {shape!r}")
    spec = DomainSpec(shape=shape)
    if shape == "interval":
        spec.dim = 1
        a = node.get("a", node.get("lower", -1.0))
        b = node.get("b", node.get("upper", 1.0))
        a = a[0] if isinstance(a, list) and len(a) == 1 else a
        b = b[0] if isinstance(b, list) and len(b) == 1 else b
        spec.lower = [_number(a, f"{where}.a")]
        spec.upper = [_number(b, f"{where}.b")]
    else:
        spec.dim = _number(node.get("dim", 2 if shape != "box" else len(node.get("lower", [0, 0]))),
                           f"{where}.dim", positive=True, integer=True)
    if shape == "ball":
        spec.radius = _number(node.get("radius", 1.0), f"{where}.radius", positive=True)
        if "center" in node:
            spec.center = [_number(c, f"{where}.center") for c in node["center"]]
            if len(spec.center) != spec.dim:
                raise ConfigError(f"{where}.center", "length must equal dim")
        spec.punctured = bool(node.get("punctured", False))
    if shape == "box":
        for key in ("lower", "upper"):
            if not isinstance(node.get(key), list):
                raise ConfigError(f"{where}.{key}", "a box needs lower and upper corner lists")
        spec.lower = [_number(v, f"{where}.lower") for v in node["lower"]]
        spec.upper = [_number(v, f"{where}.upper") for v in node["upper"]]
        if len(spec.lower) != len(spec.upper):
            raise ConfigError(f"{where}.upper", "corner lengths differ")
        spec.dim = len(spec.lower)
    if spec.lower is not None and any(u <= l for l, u in zip(spec.lower, spec.upper)):
        raise ConfigError(f"{where}.upper", "upper corner must exceed lower corner")
    pts = node.get("excluded_points", [])
    if not isinstance(pts, list):
        raise ConfigError(f"{where}.excluded_points", "expected a list of points")
    out = []
    for i, p in enumerate(pts):
        p = p if isinstance(p, list) else [p]
        if len(p) != spec.dim:
            raise ConfigError(f"{where}.excluded_points[{i}]", "point dimension mismatch")
        out.append([_number(c, f"{where}.excluded_points[{i}]") for c in p])
    spec.excluded_points = out
    return spec


@dataclass
class FamilySpec:
    name: str
    params: dict


def parse_family(node, where="family") -> FamilySpec:
    if isinstance(node, str):
        node = {"name": node}
    node = _mapping(node, where)
    _unknown(node, ("name", "params"), where)
    name = node.get("name")
    if name not in GALLERY:
        raise ConfigError(f"{where}.name", f"unknown family {name!r}; choose from {sorted(GALLERY)}")
    given = _mapping(node.get("params"), f"{where}.params")
    params = dict(GALLERY_PARAMS[name])
    _unknown(given, params, f"{where}.params")
    for k, v in given.items():
        w = f"{where}.params.{k}"
        if k == "dim":
            params[k] = _number(v, w, positive=True, integer=True)
        else:
            params[k] = _number(v, w, positive=k in POSITIVE_PARAMS,
                                nonnegative=k in NONNEGATIVE_PARAMS)
    if "p_min" in params and params["p_min"] > params["p_max"]:
        raise ConfigError(f"{where}.params.p_max", "p_max must be >= p_min")
    if name == "double_phase" and params["q"] < params["p"]:
        raise ConfigError(f"{where}.params.q", "q must be >= p")
    return FamilySpec(name, params)


@dataclass
class WitnessSpec:
    mode: str = "search"
    beta: float = 1.0
    h_form: str = "zero"
    h_coef: float = 0.0
    h_sup_cap: Optional[float] = None
    beta_floor: float = 1e-3

    def resolved(self) -> dict:
        if self.mode == "given":
            return {"mode": "given", "beta": self.beta,
                    "h": {"form": self.h_form, "coef": self.h_coef}}
        if self.mode == "counterexample":
            return {"mode": "counterexample", "beta_floor": self.beta_floor,
                    "h_sup_cap": self.h_sup_cap}
        return {"mode": "search", "h_sup_cap": self.h_sup_cap}


@dataclass
class ConditionSpec:
    id: str
    witness: WitnessSpec
    sigma: float
    exponent: Optional[float] = None
    expect: Optional[str] = None

    def resolved(self) -> dict:
        d: dict[str, Any] = {"id": self.id}
        if self.id.startswith("A2"):
            d["sigma"] = self.sigma
            d["witness"] = self.witness.resolved()
        if self.exponent is not None:
            d["exponent"] = self.exponent
        d["expect"] = self.expect
        return d


def parse_condition(node, sigma, where) -> ConditionSpec:
    if isinstance(node, str):
        node = {"id": node}
    node = _mapping(node, where)
    _unknown(node, ("id", "witness", "sigma", "exponent", "expect"), where)
    cid = node.get("id")
    if cid not in CHECK_IDS:
        raise ConfigError(f"{where}.id", f"unknown condition {cid!r}; choose from {CHECK_IDS}")
    s = _number(node.get("sigma", sigma), f"{where}.sigma", positive=True)
    wn = _mapping(node.get("witness"), f"{where}.witness")
    _unknown(wn, ("mode", "beta", "h", "h_sup_cap", "beta_floor"), f"{where}.witness")
    mode = wn.get("mode", "search")
    if mode not in WITNESS_MODES:
        raise ConfigError(f"{where}.witness.mode", f"unknown mode {mode!r}; use {WITNESS_MODES}")
    w = WitnessSpec(mode=mode)
    if mode == "given":
        w.beta = _number(wn.get("beta", 1.0), f"{where}.witness.beta", positive=True)
        if w.beta > 1:
            raise ConfigError(f"{where}.witness.beta", "beta must lie in (0, 1]")
        h = _mapping(wn.get("h"), f"{where}.witness.h")
        _unknown(h, ("form", "coef"), f"{where}.witness.h")
        w.h_form = h.get("form", "zero")
        if w.h_form not in H_FORMS:
            raise ConfigError(f"{where}.witness.h.form", f"unknown h form {w.h_form!r}")
        coef = h.get("coef", 0.0 if w.h_form == "zero" else 1.0)
        if coef == "sigma":
            coef = s
        w.h_coef = _number(coef, f"{where}.witness.h.coef", nonnegative=True)
    else:
        if "h_sup_cap" in wn:
            cap = wn["h_sup_cap"]
            w.h_sup_cap = s if cap == "sigma" else _number(cap, f"{where}.witness.h_sup_cap",
                                                            nonnegative=True)
        if mode == "counterexample":
            w.beta_floor = _number(wn.get("beta_floor", 1e-3), f"{where}.witness.beta_floor",
                                   positive=True)
            if w.h_sup_cap is None:
                w.h_sup_cap = 10.0 * s
    exponent = None
    if cid in ("aIncP", "aDecQ") and "exponent" in node:
        exponent = _number(node["exponent"], f"{where}.exponent", positive=True)
    expect = None
    if node.get("expect") is not None:
        expect = normalize_verdict(node["expect"], f"{where}.expect")
    return ConditionSpec(cid, w, s, exponent, expect)


@dataclass
class DensitySpec:
    function: dict
    epsilons: list
    threshold_ratio: float = 0.1
    resolution: Optional[int] = None

    def resolved(self) -> dict:
        return {"function": self.function, "epsilons": self.epsilons,
                "threshold_ratio": self.threshold_ratio, "resolution": self.resolution}


def parse_density(node, where="density") -> DensitySpec:
    node = _mapping(node, where)
    _unknown(node, ("function", "epsilons", "epsilon0", "halvings", "threshold_ratio",
                    "resolution"), where)
    fn = _mapping(node.get("function", {"kind": "bump"}), f"{where}.function")
    kind = fn.get("kind", "bump")
    if kind not in ("bump", "zero", "csv"):
        raise ConfigError(f"{where}.function.kind", f"unknown function kind {kind!r}")
    if kind == "bump":
        _unknown(fn, ("kind", "center", "radius", "height"), f"{where}.function")
        fn = {"kind": "bump",
              "center": [_number(c, f"{where}.function.center")
                         for c in (fn.get("center", [0.0]) if isinstance(fn.get("center", [0.0]), list)
                                   else [fn["center"]])],
              "radius": _number(fn.get("radius", 1.0), f"{where}.function.radius", positive=True),
              "height": _number(fn.get("height", 1.0), f"{where}.function.height")}
    elif kind == "csv":
        _unknown(fn, ("kind", "path", "lower", "upper"), f"{where}.function")
        if "path" not in fn:
            raise ConfigError(f"{where}.function.path", "csv input needs a path")
        for key in ("lower", "upper"):
            if not isinstance(fn.get(key), list):
                raise ConfigError(f"{where}.function.{key}", "csv input needs support corners")
        fn = {"kind": "csv", "path": str(fn["path"]),
              "lower": [_number(v, f"{where}.function.lower") for v in fn["lower"]],
              "upper": [_number(v, f"{where}.function.upper") for v in fn["upper"]]}
    else:
        _unknown(fn, ("kind", "dim"), f"{where}.function")
        fn = {"kind": "zero", "dim": _number(fn.get("dim", 1), f"{where}.function.dim",
                                             positive=True, integer=True)}
    if "epsilons" in node:
        if not isinstance(node["epsilons"], list) or not node["epsilons"]:
            raise ConfigError(f"{where}.epsilons", "expected a nonempty list")
        eps = [_number(e, f"{where}.epsilons", positive=True) for e in node["epsilons"]]
    else:
        e0 = _number(node.get("epsilon0", 0.2), f"{where}.epsilon0", positive=True)
        k = _number(node.get("halvings", 4), f"{where}.halvings", nonnegative=True, integer=True)
        eps = [e0 * 2.0 ** -i for i in range(k + 1)]
    if any(e >= 1 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError(f"{where}.epsilons", "must be decreasing values in (0, 1)")
    res = node.get("resolution")
    res = None if res is None else _number(res, f"{where}.resolution", positive=True, integer=True)
    thr = _number(node.get("threshold_ratio", 0.1), f"{where}.threshold_ratio", positive=True)
    return DensitySpec(fn, eps, thr, res)


@dataclass
class RunConfig:
    family: FamilySpec
    domain: Optional[DomainSpec]
    plan: dict
    sigma: float
    conditions: list
    density: Optional[DensitySpec]
    source: Optional[str] = None

    def resolved(self) -> dict:
        """Every setting that influences the run, in a fixed order."""
        return {
            "family": {"name": self.family.name, "params": dict(self.family.params)},
            "domain": self.domain.resolved() if self.domain else None,
            "plan": dict(self.plan),
            "sigma": self.sigma,
            "conditions": [c.resolved() for c in self.conditions],
            "density": self.density.resolved() if self.density else None,
        }


def parse_config(data, source: Optional[str] = None) -> RunConfig:
    data = _mapping(data, "")
    _unknown(data, ("family", "domain", "plan", "sigma", "conditions", "density"), "")
    if "family" not in data:
        raise ConfigError("family", "missing required field")
    fam = parse_family(data["family"])
    dom = parse_domain(data.get("domain"))
    plan_node = _mapping(data.get("plan"), "plan")
    _unknown(plan_node, PLAN_KEYS, "plan")
    plan = {}
    for k in PLAN_KEYS:
        if k not in plan_node:
            continue
        if k == "span":
            sp = plan_node[k]
            if not isinstance(sp, list) or len(sp) != 2:
                raise ConfigError("plan.span", "expected [low, high]")
            lo, hi = (_number(v, "plan.span", positive=True) for v in sp)
            if lo >= hi:
                raise ConfigError("plan.span", "low must be below high")
            plan[k] = [lo, hi]
        else:
            plan[k] = _number(plan_node[k], f"plan.{k}", nonnegative=k == "seed_depth",
                              positive=k != "seed_depth", integer=True)
    sigma = _number(data.get("sigma", 1.0), "sigma", positive=True)
    conds = data.get("conditions", [])
    if not isinstance(conds, list):
        raise ConfigError("conditions", "expected a list")
    conditions = [parse_condition(c, sigma, f"conditions[{i}]") for i, c in enumerate(conds)]
    dens = parse_density(data["density"]) if data.get("density") is not None else None
    return RunConfig(fam, dom, plan, sigma, conditions, dens, source)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark else None
        raise ConfigError("", f"YAML syntax error: {exc.problem}", line) from None
    return parse_config(data, str(path))
