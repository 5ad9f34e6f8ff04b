import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from morreykit import growth as gr

XS = gr.default_x_samples((-2.0,), (2.0,), 9)
RS = np.logspace(-4, 4, 41)


def test_power_law_values():
    phi = gr.power_law(-0.25)
    assert phi(np.array([[3.0]]), 16.0)[0] == pytest.approx(0.5)


def test_variable_exponent_switches_at_unit_radius():
    phi = gr.variable_exponent("-0.25 + 0.125*sin(x)", -0.25)
    x = np.array([[1.0]])
    lam = -0.25 + 0.125 * math.sin(1.0)
    assert phi(x, 0.01)[0] == pytest.approx(0.01**lam)
    assert phi(x, 100.0)[0] == pytest.approx(100.0**-0.25)


def test_variable_exponent_from_table():
    phi = gr.variable_exponent((np.array([-1.0, 1.0]), np.array([-0.5, -0.1])), -0.3)
    assert phi(np.array([[0.0]]), 0.5)[0] == pytest.approx(0.5**-0.3)


def test_doubling_constant_of_power_law():
    rep = gr.check_doubling(gr.power_law(-0.5), gr.doubling_samples(XS, RS))
    assert rep.passed
    assert rep.constant == pytest.approx(math.sqrt(2), rel=1e-12)


@pytest.mark.parametrize("lam", [-0.5, -0.25, -0.1])
def test_czc_constant_matches_closed_form(lam):
    rep = gr.check_czc(gr.power_law(lam), XS, RS)
    assert rep.passed
    assert rep.constant == pytest.approx(1 / abs(lam), rel=1e-4)


def test_czc_ratio_matches_quadrature_for_variable_exponent():
    phi = gr.variable_exponent("-0.3 + 0.1*cos(x)", -0.4)
    X, R = np.array([[0.7], [0.7], [-1.2]]), np.array([0.01, 0.5, 3.0])
    got = gr.czc_ratios(phi, X, R)
    for x, r, g in zip(X, R, got):
        f = lambda t: phi(x.reshape(1, 1), t)[0] / t  # noqa: E731
        pieces = [(r, 1.0)] if r < 1 else []
        val = sum(integrate.quad(f, a, b, limit=200)[0] for a, b in pieces)
        val += integrate.quad(f, max(r, 1.0), np.inf, limit=200)[0]
        assert g == pytest.approx(val / phi(x.reshape(1, 1), r)[0], rel=1e-5)


def test_constant_growth_fails_czc_and_has_no_epsilon():
    phi = gr.constant(1.0)
    assert not gr.check_czc(phi, XS, RS).passed
    assert gr.find_czc_epsilon(phi, XS, RS) is None


def test_czc_epsilon_of_power_law():
    found = gr.find_czc_epsilon(gr.power_law(-0.5), XS, RS, cap=1e3)
    assert found is not None
    # phi r^eps = r^(eps - 1/2) has CZ-C constant 1/(1/2 - eps) <= 1000
    assert 0.49 < found.eps <= 0.499 + 1e-9
    assert found.constant == pytest.approx(1 / (0.5 - found.eps), rel=1e-3)


def test_czc_epsilon_of_constant_exponent_variable():
    found = gr.find_czc_epsilon(gr.variable_exponent(-0.75, -0.75), XS, RS, cap=4.0)
    assert found.eps == pytest.approx(0.5, abs=1e-6)


def test_step_exponent_fails_nearness_and_log_holder():
    lam = lambda pts: np.where(pts[:, 0] < 0, -0.5, -0.25)  # noqa: E731
    phi = gr.variable_exponent(lam, -0.25)
    # centres accumulating at the jump so that every small radius straddles it
    xs = np.concatenate([-np.logspace(-5, -1, 9), np.logspace(-5, -1, 9)]).reshape(-1, 1)
    assert not gr.check_nearness(phi, gr.nearness_samples(xs, RS[RS < 1])).passed
    assert not gr.check_log_holder(lam, gr.log_holder_samples(np.array([[0.0], [0.5]]))).passed


def test_smooth_exponent_is_log_holder():
    lam = gr.variable_exponent("-0.25 + 0.125*sin(x)", -0.25).params["lam_fn"]
    rep = gr.check_log_holder(lam, gr.log_holder_samples(XS))
    assert rep.passed and rep.constant < 1.0


def test_increasing_power_fails_almost_decreasing():
    rep = gr.check_gdec(gr.power_law(0.1), 2.0, gr.monotone_samples(XS, RS[::2]))
    assert not rep.passed


def test_gdec_for_admissible_power():
    rep = gr.check_gdec(gr.power_law(-0.25), 2.0, gr.monotone_samples(XS, RS[::2]))
    assert rep.passed and rep.constant == pytest.approx(1.0)


def test_lim_conditions():
    assert gr.check_lim_conditions(gr.power_law(-0.25), 2.0).passed
    rep = gr.check_lim_conditions(gr.lp_growth(1, 2.0), 2.0)
    assert not rep.passed and not rep.details["lim2"].passed and rep.details["lim1"].passed
    assert not gr.check_lim_conditions(gr.constant(1.0), 2.0).details["lim1"].passed


def test_derived_growth_functions():
    phi = gr.power_law(-0.25)
    d1, d2 = gr.derive_phi12(phi, 0.1)
    x, r = np.array([[2.0]]), 0.5
    assert d1(x, r)[0] == pytest.approx(0.5**-0.25 * 0.5**0.1)
    assert d2(x, r)[0] == pytest.approx(0.5**-0.25 * (0.5 / 2.5) ** 0.1)
    with pytest.raises(gr.GrowthError):
        gr.derive_phi12(phi, 0.0)


def test_nearness_rejects_far_samples():
    with pytest.raises(gr.GrowthError):
        gr.check_nearness(gr.power_law(-0.25), (np.array([[0.0]]), np.array([[2.0]]), np.array([1.0])))


@settings(max_examples=25, deadline=None)
@given(st.floats(-0.95, -0.05))
def test_power_law_doubling_constant_property(lam):
    rep = gr.check_doubling(gr.power_law(lam), gr.doubling_samples(XS[:3], RS[::4]))
    assert rep.constant == pytest.approx(2 ** abs(lam), rel=1e-9)


def test_measured_constants_keys():
    c = gr.measured_constants(gr.power_law(-0.25), 2.0, XS[:3])
    assert set(c) == {"C_DC", "C_NC", "C_AI", "C_AD"}
    assert c["C_NC"] == pytest.approx(1.0)
