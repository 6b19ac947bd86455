import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from genorlicz.conditions import search_witness, transport_conjugate, verify
from genorlicz.conjugation import (ConjugateQuery, biconjugate_family, biconjugate_values,
                                   conjugate, conjugate_family, conjugate_inverse_values,
                                   conjugate_values, inverse_product_check)
from genorlicz.core import build_plan, check_equivalence, classify, make_family
from genorlicz.inversion import inverse_values

from conftest import STRONG_GALLERY, default_plan_for, gallery_family, scalar_family, small_plan

ORIGIN = (0.0, 0.0)

# sup_s {s t - phi(x, s)} from a scipy bounded search in log s after a dense
# scan, computed once and frozen here
FROZEN_CONJUGATES = [
    ("double_phase", (0.5, 0.0), 1.0, 0.22080928726567736),
    ("double_phase", (0.5, 0.0), 10.0, 9.186549475148873),
    ("double_phase", (-0.8, 0.3), 3.0, 1.9537626282573748),
    ("variable_exponent", (0.0, 0.0), 2.0, 1.0886621079036347),
    ("variable_exponent", (0.9, 0.0), 0.5, 0.1830984073551583),
]


def test_closed_form_conjugates():
    half_square = scalar_family("half_square", lambda s: s ** 2 / 2)
    assert conjugate(ConjugateQuery(half_square, ORIGIN, 3.0)) == pytest.approx(4.5, rel=1e-10)
    quartic = scalar_family("quartic", lambda s: s ** 4 / 4)
    assert conjugate(ConjugateQuery(quartic, ORIGIN, 1.0)) == pytest.approx(0.75, rel=1e-10)
    linear = scalar_family("linear", lambda s: s)
    assert conjugate(ConjugateQuery(linear, ORIGIN, 0.5)) == 0.0
    assert conjugate(ConjugateQuery(linear, ORIGIN, 2.0)) == math.inf


def test_large_finite_conjugate_is_not_infinite():
    # t^1.2 at t = 731 has a finite conjugate of about 1.02e16
    fam = make_family("orlicz_power", p=1.2)
    expected = 0.2 * 1.2 ** -6 * 731.0 ** 6
    assert conjugate_values(fam, [ORIGIN], [731.0])[0] == pytest.approx(expected, rel=1e-8)


def test_example_family_conjugate(example):
    # phi = t^2/|x| has phi* = |x| t^2 / 4
    pts = default_plan_for("example_1_1").x_points[::7]
    t = np.geomspace(1e-3, 1e3, len(pts))
    r = np.linalg.norm(pts, axis=1)
    np.testing.assert_allclose(conjugate_values(example, pts, t), r * t ** 2 / 4, rtol=1e-9)


@pytest.mark.parametrize("name,x,t,expected", FROZEN_CONJUGATES)
def test_conjugate_frozen_oracle(name, x, t, expected):
    assert conjugate_values(gallery_family(name), [x], [t])[0] == pytest.approx(expected, rel=1e-10)


def test_conjugate_at_zero_is_zero():
    for name in STRONG_GALLERY:
        assert conjugate_values(gallery_family(name), [[0.5, 0.0]], [0.0])[0] == 0.0


@pytest.mark.parametrize("name", STRONG_GALLERY)
def test_fenchel_young_on_samples(name):
    fam, plan = gallery_family(name), small_plan(name)
    xs = plan.x_points
    s = plan.positive_t
    t = plan.positive_t[::3]
    star = conjugate_values(fam, np.repeat(xs, len(t), axis=0), np.tile(t, len(xs)))
    star = star.reshape(len(xs), len(t))
    phi = fam.grid(xs, s)
    st_ = s[None, :, None] * t[None, None, :]
    rhs = phi[:, :, None] + star[:, None, :] + 1e-9 * (1 + st_)
    assert np.all(st_ <= rhs)


@pytest.mark.parametrize("name", STRONG_GALLERY)
def test_conjugate_increasing_in_t(name):
    fam, plan = gallery_family(name), small_plan(name)
    v = conjugate_values(fam, np.repeat(plan.x_points[:5], len(plan.t_grid), axis=0),
                         np.tile(plan.t_grid, 5)).reshape(5, -1)
    assert np.all(np.diff(v, axis=1) >= 0)


def test_conjugate_family_is_weak_phi():
    fam = conjugate_family(gallery_family("double_phase"))
    assert classify(fam, small_plan("double_phase")).admitted


def test_conjugate_inverse_closed_form(power2):
    tau = np.geomspace(1e-8, 1e8, 33)
    # phi* = t^2/4, so its inverse is 2 sqrt(tau)
    np.testing.assert_allclose(conjugate_inverse_values(power2, [ORIGIN], tau), 2 * np.sqrt(tau),
                               rtol=1e-9)
    assert conjugate_inverse_values(power2, [ORIGIN], [0.0])[0] == 0.0


def test_product_constant_of_square(power2):
    pc = inverse_product_check(power2, default_plan_for("orlicz_power"))
    assert abs(pc.constant - 2.0) < 1e-6
    assert pc.verdict == "holds"


def test_product_constant_of_linear_is_finite():
    linear = scalar_family("linear", lambda s: s)
    pc = inverse_product_check(linear, default_plan_for("orlicz_power"))
    assert math.isfinite(pc.constant) and pc.verdict == "holds"


def test_product_at_zero_level_is_degenerate(power2):
    tau = np.array([0.0])
    prod = inverse_values(power2, [ORIGIN], tau) * conjugate_inverse_values(power2, [ORIGIN], tau)
    assert prod[0] == 0.0


def test_biconjugate_of_self_dual_family():
    half_square = scalar_family("half_square", lambda s: s ** 2 / 2)
    plan = small_plan("orlicz_power")
    res = check_equivalence(half_square, biconjugate_family(half_square), "valuewise", plan)
    assert res.holds and res.constant <= 1 + 1e-3


def test_biconjugate_pointwise(power2):
    t = np.geomspace(1e-4, 1e4, 9)
    np.testing.assert_allclose(biconjugate_values(power2, [ORIGIN], t), t ** 2, rtol=1e-3)


def test_quartic_conjugate_matches_closed_form():
    quartic = scalar_family("quartic", lambda s: s ** 4 / 4)
    closed = scalar_family("closed", lambda t: 0.75 * t ** (4 / 3))
    res = check_equivalence(conjugate_family(quartic), closed, "valuewise", small_plan("orlicz_power"))
    assert res.holds and res.constant <= 1.01


@pytest.mark.parametrize("name", ["orlicz_power", "variable_exponent", "double_phase"])
def test_decay_condition_transfers_to_conjugate(name):
    fam = gallery_family(name)
    plan = build_plan(fam.domain, per_axis=5, grid_points=40, seed_depth=2, refinement_depth=6)
    rep = search_witness("A2new", fam, 1.0, plan)
    assert rep.holds
    pc = inverse_product_check(fam, plan)
    w_star = transport_conjugate(rep.witness, pc.constant)
    assert w_star.beta == pytest.approx(rep.witness.beta / pc.constant ** 2)
    assert verify("A2new", conjugate_family(fam), w_star, plan).holds


@given(st.floats(1.2, 5.0), st.floats(1e-3, 1e3))
def test_power_conjugate_closed_form(p, t):
    fam = make_family("orlicz_power", p=p)
    q = p / (p - 1)
    expected = (p - 1) * p ** (-q) * t ** q
    assert conjugate_values(fam, [ORIGIN], [t])[0] == pytest.approx(expected, rel=1e-8)


@given(st.sampled_from(STRONG_GALLERY), st.floats(1e-4, 1e4), st.floats(1e-4, 1e4))
def test_fenchel_young_property(name, s, t):
    fam = gallery_family(name)
    x = [[0.3, -0.2]]
    lhs = s * t
    rhs = fam.values(x, [s])[0] + conjugate_values(fam, x, [t])[0]
    assert lhs <= rhs + 1e-9 * (1 + lhs)
