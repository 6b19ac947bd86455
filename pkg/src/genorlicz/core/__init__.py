from .domain import (Ball, DomainError, SamplePlan, SpatialDomain, build_plan, default_balls,
                     default_plan, log_grid, unit_ball_volume)
from .extended import INF, ext_add, ext_mul, safe_ratio
from .family import (Classification, EquivalenceCertificate, EquivalenceViolation,
                     GrowthEstimate, PhiFamily, check_equivalence, classify, estimate_growth,
                     evaluate)
from .gallery import GALLERY, make_family

__all__ = [
    "Ball", "DomainError", "SamplePlan", "SpatialDomain", "build_plan", "default_balls",
    "default_plan", "log_grid", "unit_ball_volume", "INF", "ext_add", "ext_mul", "safe_ratio",
    "Classification", "EquivalenceCertificate", "EquivalenceViolation", "GrowthEstimate",
    "PhiFamily", "check_equivalence", "classify", "estimate_growth", "evaluate", "GALLERY",
    "make_family",
]
