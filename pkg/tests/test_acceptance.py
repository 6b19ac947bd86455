"""One test group per acceptance criterion; the terminal summary lists each verdict."""

import math
import time
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from genorlicz.cli import main
from genorlicz.conditions import (HOLDS, Witness, check_A0, check_A1, check_A2_new, check_A2_old,
                                  construct_bounded_witness, counterexample_search,
                                  implication_suite, indicator_h, search_witness,
                                  transform_witness)
from genorlicz.conjugation import biconjugate_family, conjugate_values, inverse_product_check
from genorlicz.core import build_plan, check_equivalence, make_family
from genorlicz.inversion import inverse_grid, verify_inverse_identities
from genorlicz.modular import bump, density_experiment, envelope_domain, sample_function

from conftest import ALL_GALLERY, STRONG_GALLERY, default_plan_for, gallery_family
from test_inversion import brute_force_inverse
from test_modular import L2_MOLLIFICATION_ERROR

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
WEB_FAMILIES = ("orlicz_power", "variable_exponent", "double_phase")
EPSILONS = [0.2 / 2 ** k for k in range(5)]


def criterion(number, title):
    return pytest.mark.criterion(number, title)


# 1 ------------------------------------------------------------------------

@criterion(1, "counterexample reproduction (< 10 s)")
def test_counterexample_reproduction(example):
    start = time.perf_counter()
    plan = build_plan(example.domain)
    sigma = 1.0
    old = check_A2_old(example, Witness(1.0, indicator_h(example.domain, sigma), sigma), plan)
    assert old.label == "holds_on_samples (vacuous)"
    out = counterexample_search(example, "A2phi", 1e-3, 10.0, sigma, plan)
    elapsed = time.perf_counter() - start
    assert out.found
    c = out.certificate
    t, y_norm = c.arg, float(np.linalg.norm(c.y))
    bound = c.beta_floor ** 2 * t ** 2 / (t ** 2 / y_norm + 2 * c.h_sup_cap)
    assert float(np.linalg.norm(c.x)) < bound
    assert c.lhs > c.rhs
    assert elapsed < 10.0


# 2 ------------------------------------------------------------------------

@criterion(2, "equivalence web, zero inconsistencies (< 60 s, >= 1e4 tuples)")
def test_equivalence_web():
    start = time.perf_counter()
    results = {}
    for name in WEB_FAMILIES:
        fam = gallery_family(name)
        results[name] = implication_suite(fam, build_plan(fam.domain), 1.0)
    elapsed = time.perf_counter() - start
    for name, res in results.items():
        assert res.consistent, (name, res.inconsistencies)
        assert all(a.consistent for a in res.arrows)
        for form in ("A2new", "A2phi", "A2max", "A2old4", "A2old5"):
            assert res.tuples(form) >= 10_000, (name, form)
    assert elapsed < 60.0


# 3 ------------------------------------------------------------------------

@criterion(3, "decay condition with small h implies (A0) with the transformed constant")
@pytest.mark.parametrize("name", ALL_GALLERY)
def test_old_form_implies_A0(name):
    fam, plan = gallery_family(name), default_plan_for(name)
    rep = search_witness("A2old", fam, 1.0, plan, h_sup_cap=0.5)
    if rep.verdict != HOLDS or rep.vacuous:
        pytest.skip(f"{name} does not pass the old form with a nonvacuous witness")
    assert rep.witness.sup_bound <= 0.5
    a0 = check_A0(fam, plan)
    assert a0.holds
    bound = transform_witness("A2old4", "A0", rep.witness,
                              inverse_at_one=(a0.notes["inv_at_one_min"],
                                              a0.notes["inv_at_one_max"]))
    assert a0.beta >= bound.beta * (1 - 1e-9)


# 4 ------------------------------------------------------------------------

@criterion(4, "bounded-domain witness passes the new form with the exact constant")
@pytest.mark.parametrize("name", ALL_GALLERY)
@pytest.mark.parametrize("sigma", [0.5, 1.0, 4.0])
def test_bounded_domain_witness(name, sigma):
    fam, plan = gallery_family(name), default_plan_for(name)
    a0 = check_A0(fam, plan)
    if not a0.holds:
        pytest.skip(f"{name} is not (A0)-certified")
    w = construct_bounded_witness(fam, sigma, a0.beta, fam.a)
    assert w.beta == a0.beta ** 2 / max(1.0, fam.a * sigma)
    assert check_A2_new(fam, w, plan).holds


# 5 ------------------------------------------------------------------------

@criterion(5, "(A1) implies (A0) and the new form on a bounded domain")
def test_local_condition_implies_rest():
    fam, plan = gallery_family("variable_exponent"), default_plan_for("variable_exponent")
    a1 = check_A1(fam, plan)
    assert a1.holds
    assert check_A0(fam, plan).holds
    assert search_witness("A2new", fam, 1.0, plan).holds
    res = implication_suite(fam, plan, 1.0)
    assert res.verdicts["A1"]
    assert not [i for i in res.inconsistencies if i["kind"] == "A1_not_implying"]


# 6 ------------------------------------------------------------------------

@criterion(6, "conjugate machinery")
@pytest.mark.parametrize("name", STRONG_GALLERY)
def test_fenchel_young_on_plan(name):
    fam, plan = gallery_family(name), default_plan_for(name)
    xs = plan.x_points[::4]
    s = plan.t_grid[::4]
    t = plan.t_grid[::8]
    star = conjugate_values(fam, np.repeat(xs, len(t), axis=0), np.tile(t, len(xs)))
    star = star.reshape(len(xs), len(t))
    phi = fam.grid(xs, s)
    st_ = s[None, :, None] * t[None, None, :]
    assert np.all(st_ <= phi[:, :, None] + star[:, None, :] + 1e-9 * (1 + st_))


@criterion(6, "conjugate machinery")
@pytest.mark.parametrize("name", STRONG_GALLERY)
def test_biconjugate_equivalence(name):
    fam, plan = gallery_family(name), default_plan_for(name)
    res = check_equivalence(fam, biconjugate_family(fam), "valuewise", plan)
    assert res.holds and res.constant <= 1.02


@criterion(6, "conjugate machinery")
@pytest.mark.parametrize("name", STRONG_GALLERY)
def test_product_constant_is_stable(name):
    pc = inverse_product_check(gallery_family(name), default_plan_for(name))
    assert math.isfinite(pc.constant)
    assert pc.constant_refined <= 1.2 * pc.constant
    assert pc.verdict == "holds"


@criterion(6, "conjugate machinery")
def test_product_constant_of_square(power2):
    assert abs(inverse_product_check(power2, default_plan_for("orlicz_power")).constant - 2) < 1e-6


# 7 ------------------------------------------------------------------------

@criterion(7, "left inverse against brute-force scan; strong identities")
@pytest.mark.parametrize("name", ALL_GALLERY)
def test_inverse_against_scan(name):
    fam, plan = gallery_family(name), default_plan_for(name)
    inv = inverse_grid(fam, plan.x_points, plan.tau_grid)
    for i, x in enumerate(plan.x_points):
        ref, cell = brute_force_inverse(fam, x, plan.tau_grid)
        assert np.all(np.abs(inv[i] - ref) <= cell + 1e-12)


@criterion(7, "left inverse against brute-force scan; strong identities")
@pytest.mark.parametrize("name", STRONG_GALLERY)
def test_inverse_identities(name):
    rep = verify_inverse_identities(gallery_family(name), default_plan_for(name))
    assert rep.max_residual < 1e-8


# 8 ------------------------------------------------------------------------

@criterion(8, "mollification converges in the Luxemburg norm (< 30 s)")
def test_density_experiment():
    start = time.perf_counter()
    dom = envelope_domain([-1.0], [1.0])
    f = sample_function(dom, bump(0.0, 1.0, 1.0))
    results = {name: density_experiment(make_family(name, dom), f, EPSILONS)
               for name in ("orlicz_power", "variable_exponent")}
    elapsed = time.perf_counter() - start
    for res in results.values():
        assert res.decreasing
        assert res.rows[-1].norm < 0.1 * res.f_norm
    np.testing.assert_allclose(results["orlicz_power"].norms, L2_MOLLIFICATION_ERROR, rtol=0.02)
    assert elapsed < 30.0


# 9 ------------------------------------------------------------------------

@criterion(9, "two suite runs give byte-identical reports")
def test_suite_determinism(tmp_path):
    outs = []
    for tag in ("first", "second"):
        out = tmp_path / tag
        res = CliRunner().invoke(main, ["suite", "--config",
                                        str(CONFIGS / "double_phase_suite.yaml"),
                                        "--out", str(out)])
        assert res.exit_code == 0, res.output
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir())
    assert names == sorted(p.name for p in outs[1].iterdir())
    for name in names:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
