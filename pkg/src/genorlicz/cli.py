"""Command-line front end.

Every command reads a YAML run configuration, writes a JSON report that
embeds the resolved configuration, a short text summary and CSV sidecars
into ``--out``, and exits 0 on success, 1 on a verdict mismatch or
violation, 2 on a usage error.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from pathlib import Path
from typing import Optional

import click
import numpy as np

from .conditions import (HOLDS, VIOLATED, ConditionReport, UsageError, Witness, check_A0,
                         check_A1, counterexample_search, decaying_h, implication_suite,
                         indicator_h, search_witness, verify, zero_h)
from .config import ConfigError, RunConfig, load_config, normalize_verdict, parse_config
from .core.domain import build_plan
from .core.family import estimate_growth
from .core.gallery import GALLERY, GALLERY_PARAMS, make_family
from .modular import (PreconditionError, SampledFunction, bump, density_experiment,
                      envelope_domain, sample_function)

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE = 0, 1, 2
H_BUILDERS = {"zero": lambda dom, c: zero_h(dom), "indicator": indicator_h,
              "decaying": decaying_h}


# ---------------------------------------------------------------- plumbing

def clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(clean(payload), indent=2) + "\n")


def write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(r.get(k)) for k in header])


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def _fail_usage(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_USAGE)


def _load(config_path, family_name) -> RunConfig:
    try:
        if config_path is not None:
            return load_config(config_path)
        if family_name is None:
            raise ConfigError("", "give --config or --family")
        return parse_config({"family": {"name": family_name}})
    except ConfigError as exc:
        _fail_usage(str(exc))


def _setup(cfg: RunConfig, plan_depth: Optional[int]):
    """Family and sample plan for a resolved configuration."""
    if plan_depth is not None:
        if plan_depth < 0:
            _fail_usage("--plan-depth must be nonnegative")
        cfg.plan["refinement_depth"] = plan_depth
    domain = cfg.domain.build() if cfg.domain else None
    family = make_family(cfg.family.name, domain, **cfg.family.params)
    overrides = dict(cfg.plan)
    if "span" in overrides:
        overrides["span"] = tuple(overrides["span"])
    return family, build_plan(family.domain, **overrides)


def _outdir(out) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------- check

def _growth_report(cid, spec, family, plan) -> ConditionReport:
    default = family.ainc_p if cid == "aIncP" else family.adec_q
    exponent = spec.exponent if spec.exponent is not None else (default[0] if default else None)
    if exponent is None:
        raise ConfigError(f"{cid}.exponent", "this family declares no exponent; set one")
    g = estimate_growth(family, exponent, exponent, plan)
    ok, const = (g.verdict_p, g.a_p) if cid == "aIncP" else (g.verdict_q, g.a_q)
    return ConditionReport(cid, HOLDS if ok == "holds" else VIOLATED, n_tuples=plan.x_points.size,
                           notes={"exponent": exponent, "constant": const})


def run_condition(spec, family, plan) -> dict:
    """Run one configured condition and return its report entry."""
    cid, w = spec.id, spec.witness
    entry = {"condition_id": cid, "mode": w.mode if cid.startswith("A2") else "check"}
    certificate = None
    if cid in ("aIncP", "aDecQ"):
        rep = _growth_report(cid, spec, family, plan)
    elif cid in ("A0", "A1") or w.mode != "counterexample":
        if cid == "A0":
            rep = check_A0(family, plan)
        elif cid == "A1":
            rep = check_A1(family, plan)
        elif w.mode == "given":
            witness = Witness(w.beta, H_BUILDERS[w.h_form](family.domain, w.h_coef), spec.sigma)
            rep = verify(cid, family, witness, plan)
        else:
            rep = search_witness(cid, family, spec.sigma, plan, h_sup_cap=w.h_sup_cap)
        if rep.violation is not None:
            certificate = {"condition_id": cid, **rep.violation.to_dict()}
    else:
        outcome = counterexample_search(family, cid, w.beta_floor, w.h_sup_cap, spec.sigma, plan)
        rep = ConditionReport(cid, VIOLATED if outcome.found else HOLDS,
                              n_tuples=outcome.n_tuples,
                              notes={"search_status": outcome.status,
                                     "depth_reached": outcome.depth_reached})
        if outcome.found:
            certificate = outcome.certificate.to_dict()
    entry.update(rep.to_dict())
    entry["vacuous"] = rep.vacuous
    entry["expect"] = spec.expect
    entry["match"] = None if spec.expect is None else spec.expect == rep.verdict
    entry["certificate"] = certificate
    return entry


def _summary_lines(title, cfg, rows, extra=()):
    lines = [title, f"family: {cfg.family.name} {json.dumps(cfg.family.params, sort_keys=True)}"]
    for r in rows:
        beta = r.get("beta")
        beta_s = "-" if beta is None else f"{beta:.6g}"
        label = r["verdict"] + (" (vacuous)" if r.get("vacuous") else "")
        exp = "" if r.get("expect") is None else (
            f"  expect={r['expect']} {'ok' if r['match'] else 'MISMATCH'}")
        lines.append(f"{r['condition_id']:<7} {r['mode']:<15} {label:<28} beta={beta_s}{exp}")
    lines += list(extra)
    return "\n".join(lines) + "\n"


def _apply_expect(cfg: RunConfig, expect: Optional[str]):
    if expect is None:
        return
    items = [s for s in expect.split(",") if s.strip()]
    if len(items) != len(cfg.conditions):
        _fail_usage(f"--expect lists {len(items)} verdicts for {len(cfg.conditions)} conditions")
    try:
        for spec, v in zip(cfg.conditions, items):
            spec.expect = normalize_verdict(v, "--expect")
    except ConfigError as exc:
        _fail_usage(str(exc))


# ---------------------------------------------------------------- commands

@click.group()
def main():
    """Numerical checks for generalized Orlicz Phi-functions."""


config_option = click.option("--config", "config_path", type=click.Path(dir_okay=False),
                             default=None, help="YAML run configuration.")
family_option = click.option("--family", "family_name", default=None,
                             help="Gallery family with default parameters (instead of --config).")
out_option = click.option("--out", default="genorlicz-out", show_default=True,
                          type=click.Path(file_okay=False), help="Output directory.")
depth_option = click.option("--plan-depth", type=int, default=None,
                            help="Refinement depth toward excluded points and the boundary.")


@main.command()
@config_option
@family_option
@out_option
@depth_option
@click.option("--expect", default=None, help="Comma-separated verdicts, one per condition.")
def check(config_path, family_name, out, plan_depth, expect):
    """Run the configured condition checks."""
    cfg = _load(config_path, family_name)
    if not cfg.conditions:
        cfg.conditions = parse_config({"family": {"name": cfg.family.name},
                                       "conditions": ["A0", "A2new", "A2phi", "A2max",
                                                      "A2old"]}).conditions
        for c in cfg.conditions:
            c.sigma = cfg.sigma
    _apply_expect(cfg, expect)
    try:
        family, plan = _setup(cfg, plan_depth)
        rows = [run_condition(spec, family, plan) for spec in cfg.conditions]
    except ConfigError as exc:
        _fail_usage(f"conditions: {exc}")
    except (UsageError, ValueError) as exc:
        _fail_usage(str(exc))

    path = _outdir(out)
    for i, r in enumerate(rows):
        write_json(path / f"condition_{i:02d}_{r['condition_id']}.json", r)
        if r["certificate"] is not None:
            write_json(path / f"certificate_{i:02d}_{r['condition_id']}.json", r["certificate"])
    if any(r["expect"] is not None for r in rows):
        ok = all(r["match"] is not False for r in rows)
    else:
        ok = all(r["verdict"] == HOLDS for r in rows)
    write_json(path / "report.json", {"command": "check", "config": cfg.resolved(),
                                      "plan": plan.describe(), "passed": ok, "conditions": rows})
    write_csv(path / "verdicts.csv",
              ["condition_id", "mode", "verdict", "vacuous", "beta", "residual", "n_tuples",
               "expect", "match"], rows)
    summary = _summary_lines("check", cfg, rows, [f"result: {'pass' if ok else 'fail'}"])
    (path / "summary.txt").write_text(summary)
    click.echo(summary, nl=False)
    sys.exit(EXIT_OK if ok else EXIT_MISMATCH)


@main.command()
@config_option
@family_option
@out_option
@depth_option
def suite(config_path, family_name, out, plan_depth):
    """Run every formulation with witness propagation and cross-check them."""
    cfg = _load(config_path, family_name)
    try:
        family, plan = _setup(cfg, plan_depth)
        result = implication_suite(family, plan, cfg.sigma)
    except (UsageError, ValueError) as exc:
        _fail_usage(str(exc))
    path = _outdir(out)
    data = result.to_dict()
    write_json(path / "report.json", {"command": "suite", "config": cfg.resolved(),
                                      "plan": plan.describe(), **data})
    verdict_rows = [{"formulation": k, "verdict": HOLDS if v else VIOLATED,
                     "n_tuples": result.reports[k].n_tuples}
                    for k, v in result.verdicts.items()]
    write_csv(path / "verdicts.csv", ["formulation", "verdict", "n_tuples"], verdict_rows)
    arrow_rows = [{"source": a.source, "target": a.target, "source_holds": a.source_holds,
                   "target_holds": a.target_holds, "consistent": a.consistent,
                   "beta": a.witness.beta if a.witness else None} for a in result.arrows]
    write_csv(path / "arrows.csv",
              ["source", "target", "source_holds", "target_holds", "consistent", "beta"],
              arrow_rows)
    lines = ["suite", f"family: {cfg.family.name} {json.dumps(cfg.family.params, sort_keys=True)}",
             f"sigma: {cfg.sigma!r}"]
    lines += [f"{r['formulation']:<7} {r['verdict']:<17} tuples={r['n_tuples']}"
              for r in verdict_rows]
    lines += [f"{a['source']}->{a['target']}: {'ok' if a['consistent'] else 'FAILED'}"
              for a in arrow_rows]
    lines.append(f"inconsistencies: {len(result.inconsistencies)}")
    summary = "\n".join(lines) + "\n"
    (path / "summary.txt").write_text(summary)
    click.echo(summary, nl=False)
    sys.exit(EXIT_OK if result.consistent else EXIT_MISMATCH)


def build_density_input(cfg: RunConfig, family) -> SampledFunction:
    """The sampled function of a density configuration on its envelope box."""
    spec = cfg.density
    fn = spec.function
    excluded = family.domain.excluded_points
    if fn["kind"] == "bump":
        c = np.asarray(fn["center"], dtype=float)
        r = fn["radius"]
        dom = envelope_domain(c - r, c + r, excluded)
        return sample_function(dom, bump(c, r, fn["height"]), spec.resolution)
    if fn["kind"] == "zero":
        dim = fn["dim"]
        dom = envelope_domain([-1.0] * dim, [1.0] * dim, excluded)
        return sample_function(dom, lambda x: np.zeros(len(x)), spec.resolution)
    dom = envelope_domain(fn["lower"], fn["upper"], excluded)
    return SampledFunction.from_csv(fn["path"], dom, spec.resolution)


@main.command()
@config_option
@out_option
@depth_option
def density(config_path, out, plan_depth):
    """Run the mollification convergence experiment."""
    cfg = _load(config_path, None)
    if cfg.density is None:
        _fail_usage("density: the configuration needs a density section")
    try:
        family, _ = _setup(cfg, plan_depth)
        f = build_density_input(cfg, family)
        if f.domain.dim != family.domain.dim:
            family = make_family(cfg.family.name, f.domain,
                                 **{k: v for k, v in cfg.family.params.items() if k != "dim"})
        overrides = {k: v for k, v in cfg.plan.items() if k != "span"}
        result = density_experiment(family, f, cfg.density.epsilons,
                                    cfg.density.threshold_ratio, plan_overrides=overrides)
    except PreconditionError as exc:
        path = _outdir(out)
        rep = exc.report
        cert = {"condition_id": "A1", **rep.violation.to_dict()}
        write_json(path / "certificate_A1.json", cert)
        write_json(path / "report.json", {"command": "density", "config": cfg.resolved(),
                                          "passed": False, "precheck": rep.to_dict()})
        summary = f"density\nfamily: {cfg.family.name}\nprecheck A1: violated\nresult: fail\n"
        (path / "summary.txt").write_text(summary)
        click.echo(summary, nl=False)
        sys.exit(EXIT_MISMATCH)
    except (UsageError, ValueError, OSError) as exc:
        _fail_usage(str(exc))

    path = _outdir(out)
    rows = result.to_rows()
    write_csv(path / "density.csv", ["epsilon", "norm", "gradient_norm", "modular"], rows)
    write_json(path / "report.json", {
        "command": "density", "config": cfg.resolved(), "family": result.family,
        "f_norm": result.f_norm, "threshold": result.threshold_ratio * result.f_norm,
        "decreasing": result.decreasing, "passed": result.passed,
        "precheck": result.precheck.to_dict() if result.precheck else None, "rows": rows})
    lines = ["density", f"family: {cfg.family.name}", f"f_norm: {result.f_norm:.6g}"]
    lines += [f"eps={r['epsilon']:.6g} norm={r['norm']:.6g} grad_norm={r['gradient_norm']:.6g}"
              for r in rows]
    lines.append(f"result: {'pass' if result.passed else 'fail'}")
    summary = "\n".join(lines) + "\n"
    (path / "summary.txt").write_text(summary)
    click.echo(summary, nl=False)
    sys.exit(EXIT_OK if result.passed else EXIT_MISMATCH)


@main.group()
def gallery():
    """Named families available to configurations."""


@gallery.command("list")
def gallery_list():
    """Print each family with its default parameters."""
    for name in sorted(GALLERY):
        params = ", ".join(f"{k}={v!r}" for k, v in GALLERY_PARAMS[name].items())
        fam = make_family(name)
        click.echo(f"{name:<18} {params:<32} {fam.strength}")


if __name__ == "__main__":
    main()
