from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..core.domain import SamplePlan
from .witness import Witness

HOLDS = "holds_on_samples"
VIOLATED = "violated"

CONDITION_IDS = ("A0", "A1", "A2new", "A2old", "A2phi", "A2max", "aIncP", "aDecQ")


def _num(v):
    return None if v is None else float(v)


@dataclass
class ViolationRecord:
    """One sampled tuple where the defining inequality fails.

    ``arg_name`` is "tau" for the inverse formulations and "t" for the
    phi-form; ``y`` is None for single-point conditions such as (A0).
    """

    x: tuple
    y: Optional[tuple]
    arg_name: str
    arg: float
    lhs: float
    rhs: float
    depth: Optional[int] = None

    @property
    def residual(self) -> float:
        return self.lhs - self.rhs

    def to_dict(self) -> dict:
        return {"x": list(self.x), "y": None if self.y is None else list(self.y),
                self.arg_name: self.arg, "lhs": self.lhs, "rhs": self.rhs,
                "residual": self.residual, "depth": self.depth}


@dataclass
class ConditionReport:
    condition_id: str
    verdict: str
    witness: Optional[Witness] = None
    violation: Optional[ViolationRecord] = None
    beta: Optional[float] = None
    vacuous: bool = False
    n_tuples: int = 0
    plan: Optional[SamplePlan] = field(default=None, repr=False)
    notes: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS

    @property
    def label(self) -> str:
        return f"{self.verdict} (vacuous)" if self.vacuous else self.verdict

    def to_dict(self) -> dict:
        w = self.witness
        beta = self.beta if self.beta is not None else (w.beta if w else None)
        return {
            "condition_id": self.condition_id,
            "verdict": self.verdict,
            "vacuous": self.vacuous,
            "beta": _num(beta),
            "h_form": w.h_form if w else None,
            "sigma": w.sigma if w else None,
            "h_sup_bound": w.sup_bound if w else None,
            "h_l1_bound": w.l1_bound if w else None,
            "worst_tuple": self.violation.to_dict() if self.violation else None,
            "residual": self.violation.residual if self.violation else None,
            "n_tuples": self.n_tuples,
            "notes": dict(self.notes),
        }
