import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from genorlicz.core import (INF, DomainError, SpatialDomain, build_plan, check_equivalence,
                            classify, estimate_growth, evaluate, ext_add, ext_mul, make_family,
                            safe_ratio)
from genorlicz.core.domain import log_grid

from conftest import ALL_GALLERY, STRONG_GALLERY, default_plan_for, gallery_family, scalar_family


# extended arithmetic ------------------------------------------------------

def test_zero_times_infinity_is_zero():
    assert ext_mul(0.0, INF) == 0.0
    assert ext_mul(INF, 0.0) == 0.0
    assert ext_mul(2.0, INF) == INF
    np.testing.assert_array_equal(ext_mul(np.array([0.0, 3.0]), INF), [0.0, INF])


def test_infinity_absorbs_finite_summands():
    assert ext_add(INF, 5.0) == INF
    assert ext_add(INF, INF) == INF
    assert ext_add(1.5, 2.0) == 3.5


def test_safe_ratio_conventions():
    out = safe_ratio([0.0, INF, 1.0, 6.0], [0.0, INF, 0.0, 3.0])
    assert math.isnan(out[0]) and math.isnan(out[1])
    assert out[2] == INF and out[3] == 2.0


# domains and plans --------------------------------------------------------

def test_punctured_ball_excludes_center():
    dom = SpatialDomain.ball(2, punctured=True)
    assert dom.is_excluded([[0.0, 0.0]])[0]
    assert dom.admissible([[0.1, 0.0]])[0]
    assert not dom.admissible([[1.5, 0.0]])[0]
    with pytest.raises(DomainError):
        dom.require_admissible([0.0, 0.0])


def test_measures():
    assert SpatialDomain.ball(2).measure == pytest.approx(math.pi)
    assert SpatialDomain.ball(3, radius=2).measure == pytest.approx(4 / 3 * math.pi * 8)
    assert SpatialDomain.box((0, 0), (2, 3)).measure == 6.0
    assert SpatialDomain.whole(2).measure == INF


def test_refinement_points_approach_excluded_point():
    dom = SpatialDomain.ball(2, punctured=True)
    dists = [np.min(np.linalg.norm(dom.refinement_points(d), axis=1)) for d in (1, 10, 30)]
    assert dists[0] > dists[1] > dists[2] > 0
    assert dists[2] < 1e-8


def test_default_plan_invariants():
    plan = build_plan(SpatialDomain.ball(2))
    for g in (plan.t_grid, plan.tau_grid):
        assert g[0] == 0 and g.max() >= 1e6
        assert np.all(np.diff(g) > 0)
    assert len(plan.t_grid) == 401
    assert plan.t_grid[1] == pytest.approx(1e-8) and plan.t_grid[-1] == pytest.approx(1e8)
    assert all(1 / b.measure >= 1 for b in plan.ball_family)
    # at least 10^4 (x, y) pairs per condition
    assert len(plan.x_points) ** 2 >= 10_000


def test_plan_rejects_excluded_sample_points():
    dom = SpatialDomain.ball(2, punctured=True)
    plan = build_plan(dom, per_axis=5, seed_depth=1)
    with pytest.raises(ValueError):
        plan.with_points([[0.0, 0.0]])


def test_log_grid():
    g = log_grid(1e-2, 1e2, 5)
    np.testing.assert_allclose(g, [0, 1e-2, 1e-1, 1, 10, 100])


# evaluation ---------------------------------------------------------------

def test_evaluate_examples():
    assert evaluate(gallery_family("orlicz_power"), [0.3, 0.1], 3.0) == 9.0
    assert evaluate(gallery_family("example_1_1"), [0.25, 0.0], 1.0) == pytest.approx(4.0)
    assert evaluate(gallery_family("step"), [0.5, 0.0], 2.0) == INF
    for name in ALL_GALLERY:
        assert evaluate(gallery_family(name), [0.5, 0.0], 0.0) == 0.0


def test_evaluate_rejects_excluded_point(example):
    with pytest.raises(DomainError):
        evaluate(example, [0.0, 0.0], 1.0)
    with pytest.raises(ValueError):
        evaluate(example, [0.5, 0.0], -1.0)


@pytest.mark.parametrize("name", ALL_GALLERY)
def test_gallery_monotone_along_t_grid(name):
    fam, plan = gallery_family(name), default_plan_for(name)
    vals = fam.grid(plan.x_points, plan.t_grid)
    assert np.all(vals[:, 0] == 0)
    assert np.all(vals[:, 1:] >= vals[:, :-1])


# classification -----------------------------------------------------------

@pytest.mark.parametrize("name", STRONG_GALLERY)
def test_strong_gallery_classified_strong(name):
    res = classify(gallery_family(name), default_plan_for(name))
    assert res.strength == "strong" and not res.violations


def test_step_family_is_weak_only():
    res = classify(gallery_family("step"), default_plan_for("step"))
    assert res.strength == "weak"
    assert {v.axiom for v in res.violations} == {"continuous"}


def test_square_root_fails_almost_increasing_ratio():
    fam = scalar_family("sqrt", np.sqrt)
    res = classify(fam, default_plan_for("orlicz_power"))
    assert res.strength is None
    assert "ainc1_ratio" in {v.axiom for v in res.violations}


def test_decreasing_function_rejected():
    fam = scalar_family("decreasing", lambda t: np.where(t > 0, 1.0 / (1.0 + t), 0.0))
    res = classify(fam, default_plan_for("orlicz_power"))
    assert not res.admitted
    assert "increasing" in {v.axiom for v in res.violations}


# growth ------------------------------------------------------------------

def test_growth_of_square():
    g = estimate_growth(gallery_family("orlicz_power"), 2, 2, default_plan_for("orlicz_power"))
    assert g.a_p == pytest.approx(1.0) and g.a_q == pytest.approx(1.0)
    assert g.verdict_p == g.verdict_q == "holds"


def test_growth_of_two_phase_sum():
    fam = scalar_family("sum", lambda t: t ** 2 + t ** 4)
    g = estimate_growth(fam, 2, 4, default_plan_for("orlicz_power"))
    assert g.a_p == pytest.approx(1.0) and g.a_q == pytest.approx(1.0)
    assert g.verdict_p == g.verdict_q == "holds"


def test_growth_example_fails_adec1():
    g = estimate_growth(gallery_family("example_1_1"), 1, 1, default_plan_for("example_1_1"))
    assert g.verdict_q == "fails"


@pytest.mark.parametrize("name", STRONG_GALLERY)
def test_ainc1_constant_matches_declared(name):
    fam = gallery_family(name)
    g = estimate_growth(fam, 1, 1, default_plan_for(name))
    assert math.isfinite(g.a_p) and g.a_p <= 1.05 * fam.a


def test_growth_rejects_nonpositive_exponent(power2):
    with pytest.raises(ValueError):
        estimate_growth(power2, 0, 2, default_plan_for("orlicz_power"))


# equivalence -------------------------------------------------------------

def test_equivalence_identity_and_scaling():
    plan = default_plan_for("orlicz_power")
    phi = scalar_family("sq", lambda t: t ** 2)
    psi = scalar_family("twice", lambda t: 2 * t ** 2)
    for kind in ("valuewise", "argumentwise"):
        assert check_equivalence(phi, phi, kind, plan).constant == 1.0
    arg = check_equivalence(phi, psi, "argumentwise", plan)
    assert arg.holds and arg.constant == pytest.approx(math.sqrt(2), rel=1e-9)
    val = check_equivalence(phi, psi, "valuewise", plan)
    assert val.constant == pytest.approx(2.0)


def test_equivalence_is_symmetric():
    plan = default_plan_for("orlicz_power")
    phi = scalar_family("sq", lambda t: t ** 2)
    psi = scalar_family("twice", lambda t: 2 * t ** 2)
    for kind in ("≈", "≃"):
        assert (check_equivalence(phi, psi, kind, plan).constant
                == pytest.approx(check_equivalence(psi, phi, kind, plan).constant, rel=1e-9))


def test_different_growth_not_equivalent():
    plan = default_plan_for("orlicz_power")
    phi = scalar_family("sq", lambda t: t ** 2)
    psi = scalar_family("cube", lambda t: t ** 3)
    for kind in ("valuewise", "argumentwise"):
        res = check_equivalence(phi, psi, kind, plan)
        assert not res.holds
        assert res.t >= 1e6 or res.t <= 1e-6


@given(st.floats(1.0, 6.0))
def test_evaluate_power_is_homogeneous(p):
    fam = make_family("orlicz_power", p=p)
    t = np.array([0.5, 1.0, 3.0])
    np.testing.assert_allclose(fam.values([[0.1, 0.1]], 2 * t), 2 ** p * fam.values([[0.1, 0.1]], t))
