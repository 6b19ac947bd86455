import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from genorlicz.core import make_family
from genorlicz.inversion import (BRACKET_CAP, InverseQuery, UnboundedInverseError,
                                 inverse_adec1_check, inverse_grid, inverse_values, left_inverse,
                                 verify_inverse_identities, zero_plateau)

from conftest import ALL_GALLERY, STRONG_GALLERY, default_plan_for, gallery_family, scalar_family

SCAN = np.concatenate([[0.0], np.geomspace(1e-12, 1e12, 10_000)])


def brute_force_inverse(family, x, taus):
    """First scan point with phi >= tau, and the width of the cell ending there."""
    vals = family.values(np.asarray(x)[None, :], SCAN)
    idx = np.searchsorted(vals, taus, side="left")
    assert np.all(idx < len(SCAN)), "scan too short"
    hi = SCAN[idx]
    lo = SCAN[np.maximum(idx - 1, 0)]
    return hi, hi - lo


@pytest.mark.parametrize("name", ALL_GALLERY)
def test_left_inverse_matches_grid_scan(name):
    fam, plan = gallery_family(name), default_plan_for(name)
    taus = plan.tau_grid
    inv = inverse_grid(fam, plan.x_points, taus)
    for i, x in enumerate(plan.x_points):
        ref, cell = brute_force_inverse(fam, x, taus)
        assert np.all(np.abs(inv[i] - ref) <= cell + 1e-12)


def test_spec_examples(power2, example):
    assert left_inverse(InverseQuery(power2, (0.1, 0.2), 4.0)) == pytest.approx(2.0, rel=1e-10)
    assert left_inverse(InverseQuery(example, (0.25, 0.0), 1.0)) == pytest.approx(0.5, rel=1e-10)
    for name in ALL_GALLERY:
        assert left_inverse(InverseQuery(gallery_family(name), (0.5, 0.0), 0.0)) == 0.0


def test_step_inverse_is_jump_location():
    fam = gallery_family("step")
    out = inverse_values(fam, [[0.2, 0.2]], [1e-8, 1.0, 1e8])
    np.testing.assert_allclose(out, 1.0, rtol=1e-9)


def test_query_validation(power2):
    with pytest.raises(ValueError):
        InverseQuery(power2, (0.0, 0.0), -1.0)
    with pytest.raises(ValueError):
        InverseQuery(power2, (0.0, 0.0), 1.0, abs_tol=0.0)


def test_unreachable_level_raises():
    saturating = scalar_family("sat", lambda t: 1 - np.exp(-t), strength="weak")
    with pytest.raises(UnboundedInverseError):
        inverse_values(saturating, [[0.0, 0.0]], [2.0])


def test_infinite_level_returns_cap(power2):
    assert inverse_values(power2, [[0.0, 0.0]], [np.inf])[0] == BRACKET_CAP


def test_ties_resolve_to_left_endpoint():
    # phi = 1 on [1, 2], so inf{t : phi >= 1} = 1
    flat = scalar_family("flat", lambda t: np.where(t < 1, t, np.where(t <= 2, 1.0, t - 1.0)),
                         strength="weak")
    assert inverse_values(flat, [[0.0, 0.0]], [1.0])[0] == pytest.approx(1.0, rel=1e-9)
    # the strict inverse gives the right endpoint sup{s : phi <= 1} = 2
    assert inverse_values(flat, [[0.0, 0.0]], [1.0], strict=True)[0] == pytest.approx(2.0, rel=1e-9)


def test_zero_plateau():
    shifted = scalar_family("shifted", lambda t: np.maximum(0.0, t - 1.0))
    assert zero_plateau(shifted, (0.0, 0.0)).t0 == pytest.approx(1.0, rel=1e-9)
    assert zero_plateau(gallery_family("orlicz_power"), (0.0, 0.0)).t0 == 0.0
    for x in default_plan_for("example_1_1").x_points[::10]:
        assert zero_plateau(gallery_family("example_1_1"), x).t0 == 0.0


@pytest.mark.parametrize("name", STRONG_GALLERY)
def test_inverse_identities_on_strong_families(name):
    rep = verify_inverse_identities(gallery_family(name), default_plan_for(name))
    assert rep.max_residual < 1e-8
    assert rep.checked_tau > 10_000


def test_identity_round_trip_examples(power2):
    assert power2.values([[0, 0]], inverse_values(power2, [[0, 0]], [9.0]))[0] == pytest.approx(9.0)
    sum_phase = scalar_family("sum", lambda t: t ** 2 + t ** 4)
    v = sum_phase.values([[0, 0]], [1.3])
    assert inverse_values(sum_phase, [[0, 0]], v)[0] == pytest.approx(1.3, rel=1e-10)
    # inside a zero plateau the round trip is not the identity, which is why it is skipped
    shifted = scalar_family("shifted", lambda t: np.maximum(0.0, t - 1.0))
    assert inverse_values(shifted, [[0, 0]], shifted.values([[0, 0]], [0.5]))[0] == 0.0


def test_identities_refused_for_weak_family():
    with pytest.raises(ValueError):
        verify_inverse_identities(gallery_family("step"), default_plan_for("step"))


def test_adec1_examples():
    rep = inverse_adec1_check(gallery_family("orlicz_power"), default_plan_for("orlicz_power"))
    assert rep.constant == pytest.approx(1.0) and rep.doubling_ok
    linear = scalar_family("linear", lambda t: t)
    rep = inverse_adec1_check(linear, default_plan_for("orlicz_power"))
    assert rep.doubling_ratio == pytest.approx(1.0, rel=1e-9) and rep.doubling_ok
    dp = gallery_family("double_phase")
    rep = inverse_adec1_check(dp, default_plan_for("double_phase"))
    assert rep.constant <= 1.05 * dp.a and rep.doubling_ok


@given(st.floats(1.0, 8.0), st.floats(1e-6, 1e6))
def test_power_inverse_closed_form(p, tau):
    fam = make_family("orlicz_power", p=p)
    assert inverse_values(fam, [[0.0, 0.0]], [tau])[0] == pytest.approx(tau ** (1 / p), rel=1e-9)


@given(st.sampled_from(ALL_GALLERY), st.lists(st.floats(0, 1e7), min_size=2, max_size=8))
def test_inverse_monotone_in_level(name, taus):
    fam = gallery_family(name)
    taus = np.sort(np.asarray(taus))
    out = inverse_values(fam, [[0.3, -0.4]], taus)
    assert np.all(np.diff(out) >= -1e-10 * out[1:])


@given(st.sampled_from(ALL_GALLERY), st.floats(1e-8, 1e8))
def test_inverse_is_deterministic_and_batch_independent(name, tau):
    fam = gallery_family(name)
    alone = inverse_values(fam, [[0.3, 0.1]], [tau])[0]
    batch = inverse_values(fam, [[0.3, 0.1]] * 3, [1e-3, tau, 5e5])[1]
    assert alone == batch == inverse_values(fam, [[0.3, 0.1]], [tau])[0]
