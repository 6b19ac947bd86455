from .checks import (check_A0, check_A1, check_A2_max, check_A2_new, check_A2_old, check_A2_phi,
                     construct_bounded_witness, diverges, search_witness, verify)
from .report import HOLDS, VIOLATED, ConditionReport, ViolationRecord
from .witness import HFunction, UsageError, Witness, decaying_h, indicator_h, parametric_h, zero_h
from .search import Certificate, SearchOutcome, counterexample_search
from .suite import SuiteResult, implication_suite
from .transforms import transform_witness, transport_conjugate, transport_equivalent

__all__ = [
    "check_A0", "check_A1", "check_A2_max", "check_A2_new", "check_A2_old", "check_A2_phi",
    "construct_bounded_witness", "diverges", "search_witness", "verify", "HOLDS", "VIOLATED",
    "ConditionReport", "ViolationRecord", "HFunction", "UsageError", "Witness", "decaying_h",
    "indicator_h", "parametric_h", "zero_h", "Certificate", "SearchOutcome",
    "counterexample_search", "SuiteResult", "implication_suite", "transform_witness",
    "transport_conjugate", "transport_equivalent",
]
