"""Run every formulation of the decay condition and cross-check the verdicts.

The five formulations are expected to agree, and each proved arrow must
carry a passing witness to a passing witness.  On bounded domains the
local condition (A1) must imply (A0) and the decay condition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..core.domain import SamplePlan
from ..core.family import PhiFamily
from .checks import check_A0, check_A1, construct_bounded_witness, search_witness, verify
from .report import ConditionReport
from .transforms import a0_from_old, max_to_old, new_to_max, old_with_a0_to_old
from .witness import Witness

FORMULATIONS = ("A2new", "A2phi", "A2max", "A2old4", "A2old5")
A0_TOL = 1e-9


@dataclass
class ArrowCheck:
    source: str
    target: str
    source_holds: bool
    target_holds: bool
    witness: Optional[Witness] = None
    detail: Optional[dict] = None

    @property
    def consistent(self) -> bool:
        return not self.source_holds or self.target_holds

    def to_dict(self) -> dict:
        return {"arrow": f"{self.source}->{self.target}", "source_holds": self.source_holds,
                "target_holds": self.target_holds, "consistent": self.consistent,
                "witness": self.witness.describe() if self.witness else None,
                "detail": self.detail}


@dataclass
class SuiteResult:
    family: str
    sigma: float
    reports: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    arrows: list = field(default_factory=list)
    inconsistencies: list = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return not self.inconsistencies

    def tuples(self, name: str) -> int:
        return self.reports[name].n_tuples

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "sigma": self.sigma,
            "consistent": self.consistent,
            "verdicts": dict(self.verdicts),
            "reports": {k: r.to_dict() for k, r in self.reports.items()},
            "arrows": [a.to_dict() for a in self.arrows],
            "inconsistencies": list(self.inconsistencies),
        }


def _violation(report: ConditionReport):
    return report.violation.to_dict() if report.violation else None


def implication_suite(family: PhiFamily, plan: SamplePlan, sigma: float = 1.0) -> SuiteResult:
    """All checkers with witnesses propagated along the proved arrows."""
    out = SuiteResult(family.name, sigma)
    a = family.a
    strong = family.strength == "strong"
    bounded = family.domain.bounded
    rep = out.reports

    rep["A0"] = a0 = check_A0(family, plan)
    if bounded:
        rep["A1"] = check_A1(family, plan)

    def arrow(src, dst, src_ok, w, report):
        chk = ArrowCheck(src, dst, src_ok, report.holds, w,
                         None if report.holds else _violation(report))
        out.arrows.append(chk)
        return report

    # (1): the bounded-domain witness when it applies, otherwise search
    if bounded and a0.holds:
        w1 = construct_bounded_witness(family, sigma, a0.beta, a)
        r1 = verify("A2new", family, w1, plan)
        r1.notes["witness_origin"] = "bounded_domain"
    else:
        r1 = search_witness("A2new", family, sigma, plan)
        w1 = r1.witness if r1.holds else None
    rep["A2new"] = r1

    # (2)
    if r1.holds and strong:
        rep["A2phi"] = arrow("A2new", "A2phi", True, w1, verify("A2phi", family, w1, plan))
    else:
        rep["A2phi"] = search_witness("A2phi", family, sigma, plan)
        if strong and rep["A2phi"].holds:
            w2 = rep["A2phi"].witness
            arrow("A2phi", "A2new", True, w2, verify("A2new", family, w2, plan))

    # (3)
    if r1.holds:
        w3 = new_to_max(w1, a)
        rep["A2max"] = arrow("A2new", "A2max", True, w3, verify("A2max", family, w3, plan))
    else:
        rep["A2max"] = search_witness("A2max", family, sigma, plan)
        w3 = rep["A2max"].witness if rep["A2max"].holds else None
    if w3 is not None and rep["A2max"].holds:
        arrow("A2max", "A2new", True, w3, verify("A2new", family, w3, plan))

    # (4)
    if rep["A2max"].holds:
        w4 = max_to_old(w3, a)
        r4 = arrow("A2max", "A2old4", True, w4, verify("A2old", family, w4, plan))
    else:
        r4 = search_witness("A2old", family, sigma, plan, h_sup_cap=sigma / 2)
        w4 = r4.witness if r4.holds else None
    r4.condition_id = "A2old4"
    rep["A2old4"] = r4
    if r4.holds:
        arrow("A2old4", "A2new", True, w4, verify("A2new", family, w4, plan))
        if strong:
            arrow("A2old4", "A2phi", True, w4, verify("A2phi", family, w4, plan))
        if sigma >= 1 and w4.sup_bound <= 0.5 and a0.holds:
            bound = a0_from_old(w4, (a0.notes["inv_at_one_min"], a0.notes["inv_at_one_max"]))
            ok = a0.beta >= bound * (1 - A0_TOL)
            out.arrows.append(ArrowCheck("A2old4", "A0", True, ok, None,
                                         {"a0_beta": a0.beta, "transformed_beta": bound}))
        else:
            out.arrows.append(ArrowCheck("A2old4", "A0", True, a0.holds, None,
                                         None if a0.holds else _violation(a0)))

    # (5): the old inequality together with (A0)
    if r4.holds:
        r5 = verify("A2old", family, w4, plan)
    else:
        r5 = search_witness("A2old", family, sigma, plan)
    r5.condition_id = "A2old5"
    rep["A2old5"] = r5
    holds5 = r5.holds and a0.holds
    if holds5:
        w54 = old_with_a0_to_old(r5.witness, a, a0.beta)
        r54 = verify("A2old", family, w54, plan)
        arrow("A2old5", "A2old4", True, w54, r54)

    v = out.verdicts
    v["A0"] = a0.holds
    if bounded:
        v["A1"] = rep["A1"].holds
    v.update({"A2new": r1.holds, "A2phi": rep["A2phi"].holds, "A2max": rep["A2max"].holds,
              "A2old4": r4.holds, "A2old5": holds5})

    issues = out.inconsistencies
    five = {k: v[k] for k in FORMULATIONS}
    if len(set(five.values())) > 1:
        issues.append({"kind": "formulations_disagree", "verdicts": five,
                       "tuples": {k: _violation(rep[k]) for k in FORMULATIONS
                                  if not five[k] and k != "A2old5"}})
    for chk in out.arrows:
        if not chk.consistent:
            issues.append({"kind": "arrow_failed", "arrow": f"{chk.source}->{chk.target}",
                           "detail": chk.detail})
    if v["A2new"] and not v["A0"]:
        issues.append({"kind": "decay_without_A0", "tuple": _violation(a0)})
    if bounded and v["A1"] and not (v["A0"] and v["A2new"]):
        issues.append({"kind": "A1_not_implying", "A0": v["A0"], "A2new": v["A2new"],
                       "tuple": _violation(a0) or _violation(r1)})
    return out
