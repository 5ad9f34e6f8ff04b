import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from morreykit import growth as gr
from morreykit.grid import Ball, GridFunction, make_ball_family
from morreykit.morrey import (DECREASING, GROWING, STALLED, WindowError, Windows, a_functional, aitken_limit,
                              classify_trend, closure_conditions, default_windows, indicator_norm_constant,
                              morrey_norm, morrey_sup)
from morreykit.testfunctions import Bump, Gaussian, Indicator, PowerSingularity

H = 2.0**-8
BOX = ((-8.0,), (8.0,))


def gauss(h=H):
    return Gaussian().sample(*BOX, h)


def test_lp_degenerate_case_matches_quadrature():
    f = gauss()
    lp = math.sqrt(integrate.quad(lambda x: math.exp(-2 * x * x), -np.inf, np.inf)[0])
    assert morrey_norm(f, gr.lp_growth(1, 2.0), 2.0) == pytest.approx(lp / math.sqrt(2), rel=0.02)


def test_constant_growth_gives_max_norm():
    assert morrey_norm(gauss(), gr.constant(1.0), 2.0) == pytest.approx(1.0, rel=0.02)


def test_power_growth_norm_of_singular_function():
    # M_2(|y|^-1/4 chi, B(0,r)) / r^-1/4 = sqrt(2) for every r <= 1
    f = PowerSingularity(-0.25).sample(*BOX, 2.0**-10, 2.0)
    norm, ball = morrey_sup(f, gr.power_law(-0.25), 2.0)
    assert norm == pytest.approx(math.sqrt(2), rel=1e-3)
    assert abs(ball.center[0]) < ball.radius


def test_indicator_norm_matches_closed_form():
    # sup over balls of M_p(chi_B)/phi equals phi(B)^-1 when phi = r^lam, lam in [-d/p, 0]
    ball = Ball((0.0,), 1.0)
    phi = gr.power_law(-0.25)
    fam = make_ball_family((-2.0,), (2.0,), 2.0**-7, 2.0**-7, 4.0, 2.0**0.25, "proportional", 0.125)
    assert indicator_norm_constant(phi, 2.0, ball, fam, 2.0**-7) == pytest.approx(1.0, rel=0.02)


def test_aitken_limit_of_geometric_sequence():
    assert aitken_limit(1.0 + 0.5, 1.0 + 0.25, 1.0 + 0.125) == pytest.approx(1.0)


@pytest.mark.parametrize("vals,label", [
    ([1.0, 0.5, 0.25, 0.125], DECREASING),
    ([1.0, 1.0, 1.0, 1.0], STALLED),
    ([1.0, 2.0, 3.0, 4.0], GROWING),
    ([2.0, 1.5, 1.25, 1.125], STALLED),
])
def test_classify_trend(vals, label):
    assert classify_trend(vals, 0.05)[0] == label


def test_classify_trend_ignores_rounding_noise():
    assert classify_trend([1.0, 1.0 + 1e-15, 1.0 + 2e-15], 0.05)[0] == STALLED


def test_smooth_bump_has_vanishing_closure_diagnostics():
    f = Bump((0.0,), 1.0).sample((-4.0,), (4.0,), 2.0**-12)
    rep = a_functional(f, gr.power_law(-0.25), 2.0, default_windows(f, 2.0**16))
    assert rep.diagnostics["small_r"].trend == DECREASING
    assert rep.diagnostics["far_x"].holds
    assert rep.term_large_r < 0.05 * rep.norm


def test_singular_function_stalls_at_sqrt2():
    f = PowerSingularity(-0.25).sample(*BOX, 2.0**-10, 2.0)
    cond = closure_conditions(f, gr.power_law(-0.25), 2.0)
    assert cond["i"].trend == STALLED
    assert cond["i"].extreme == pytest.approx(math.sqrt(2), rel=1e-6)


def test_constant_growth_stalls_small_radius_condition():
    f = Indicator((0.0,), 1.0).sample((-4.0,), (4.0,), 2.0**-8)
    cond = closure_conditions(f, gr.constant(1.0), 2.0)
    assert cond["i"].trend == STALLED and cond["i"].extreme >= 0.9


def test_lp_growth_stalls_large_radius_condition():
    f = gauss()
    cond = closure_conditions(f, gr.lp_growth(1, 2.0), 2.0)
    assert cond["ii"].trend == STALLED
    assert cond["ii"].extreme == pytest.approx(f.lp_norm(2) / math.sqrt(2), rel=0.05)


def test_windows_validate():
    f = gauss()
    good = default_windows(f)
    with pytest.raises(WindowError):
        Windows((H / 4,) * 3, good.large_radii, good.far_radii, good.shells).validate(f)
    with pytest.raises(WindowError):
        Windows(good.small_radii, good.large_radii, good.far_radii, (1.0, 2.0, 4.0, 64.0)).validate(f)
    with pytest.raises(WindowError):
        Windows(good.small_radii[:2], good.large_radii, good.far_radii, good.shells).validate(f)


SMALL = (-2.0,), (2.0,)
FAM = make_ball_family(*SMALL, 2.0**-5, 2.0**-5, 4.0, 2.0, "proportional", 0.25)
PHI = gr.power_law(-0.25)
arrays = st.lists(st.floats(-3, 3), min_size=128, max_size=128).map(np.array)


def grid(v):
    return GridFunction(*SMALL, 2.0**-5, v)


@settings(max_examples=25, deadline=None)
@given(arrays, st.floats(-5, 5))
def test_norm_is_absolutely_homogeneous(v, c):
    assert morrey_norm(grid(v) * c, PHI, 2.0, FAM) == pytest.approx(abs(c) * morrey_norm(grid(v), PHI, 2.0, FAM),
                                                                    rel=1e-9, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(arrays, arrays, st.sampled_from([1.0, 1.5, 2.0, 3.0]))
def test_norm_triangle_inequality(u, v, p):
    f, g = grid(u), grid(v)
    assert morrey_norm(f + g, PHI, p, FAM) <= (morrey_norm(f, PHI, p, FAM) + morrey_norm(g, PHI, p, FAM)) * (1 + 1e-9)


@settings(max_examples=15, deadline=None)
@given(arrays)
def test_norm_monotone_in_family(v):
    coarse = make_ball_family(*SMALL, 2.0**-5, 2.0**-3, 1.0, 2.0, "proportional", 0.25)
    f = grid(v)
    # the coarse family is a sub-family (same radii prefix, same centres)
    assert morrey_norm(f, PHI, 2.0, coarse) <= morrey_norm(f, PHI, 2.0, FAM) * (1 + 1e-12)


def test_dimension_mismatch_raises():
    f = GridFunction((-1.0, -1.0), (1.0, 1.0), 0.125, np.ones((16, 16)))
    with pytest.raises(Exception):
        morrey_norm(f, gr.power_law(-0.25, 1), 2.0)
