import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from morreykit import growth as gr
from morreykit.czo import (CZCViolation, Setup, apply_at_point, apply_czo, check_standard_kernel,
                           closure_preservation_suite, custom_kernel, hilbert_kernel, l2_ratio,
                           operator_bound_suite, riesz_kernel, transpose_identity_suite)
from morreykit.grid import GridFunction
from morreykit.testfunctions import Bump, Gaussian, Indicator


def test_hilbert_kernel_constants():
    rep = check_standard_kernel(hilbert_kernel())
    assert rep.sk1 == pytest.approx(1 / math.pi, rel=1e-9)
    assert rep.sk2 <= 4 / math.pi * (1 + 1e-6)
    assert rep.dini == pytest.approx(1.0)


def test_riesz_kernel_size_constant():
    rep = check_standard_kernel(riesz_kernel(1))
    assert rep.sk1 <= 1 / (2 * math.pi) * (1 + 1e-9)
    assert rep.sk1 == pytest.approx(1 / (2 * math.pi), rel=1e-2)


def test_hilbert_closed_form_for_indicator():
    h = 2.0**-8
    f = Indicator((0.0,), 1.0).sample((-4.0,), (4.0,), h)
    Tf = apply_czo(hilbert_kernel(), f)
    x = Tf.cell_centers()[:, 0]
    ok = np.minimum(np.abs(x - 1), np.abs(x + 1)) > 0.1
    exact = np.log(np.abs((x[ok] + 1) / (x[ok] - 1))) / math.pi
    assert np.max(np.abs(Tf.values[ok] - exact) / np.maximum(np.abs(exact), 1e-300)) < 0.02


def test_riesz_matches_quadrature_away_from_support():
    h = 2.0**-4
    f = Gaussian(center=(0.0, 0.0), width=0.5).sample((-2.0, -2.0), (2.0, 2.0), h)
    Tf = apply_czo(riesz_kernel(1), f, (-2.0, -2.0), (6.0, 2.0))
    pts = Tf.cell_centers()
    i = int(np.argmin(np.sum((pts - np.array([4.03125, 0.03125])) ** 2, axis=1)))
    x0, x1 = pts[i]

    def integrand(y1, y0):
        z0, z1 = x0 - y0, x1 - y1
        return np.exp(-(y0 * y0 + y1 * y1) / 0.25) * z0 / (2 * math.pi * (z0 * z0 + z1 * z1) ** 1.5)

    oracle = integrate.dblquad(integrand, -2, 2, -2, 2)[0]
    assert Tf.values.ravel()[i] == pytest.approx(oracle, rel=1e-3)


def test_fft_and_direct_paths_agree(rng):
    f = GridFunction((-1.0,), (1.0,), 2.0**-5, rng.normal(size=64))
    K = hilbert_kernel()
    slow = custom_kernel(K.kernel, 1)
    assert np.allclose(apply_czo(K, f).values, apply_czo(slow, f).values, atol=1e-10)


def test_apply_at_point_agrees_with_grid_evaluation():
    f = Bump((0.0,), 1.0).sample((-2.0,), (2.0,), 2.0**-6)
    Tf = apply_czo(hilbert_kernel(), f)
    i = 150
    x = Tf.cell_centers()[i]
    assert apply_at_point(hilbert_kernel(), f, x, 0.3) == pytest.approx(Tf.values[i], rel=1e-10, abs=1e-12)


def test_l2_ratio_is_close_to_one():
    f = Bump((0.3,), 0.7).sample((-2.0,), (2.0,), 2.0**-7)
    assert l2_ratio(hilbert_kernel(), f, (-64.0,), (64.0,)) == pytest.approx(1.0, abs=0.03)


def test_transpose_identity():
    fs = [Bump((-1.0,), 0.5).sample((-2.0,), (0.0,), 2.0**-6)]
    gs = [Gaussian(center=(1.5,)).sample((0.5,), (3.0,), 2.0**-6)]
    assert transpose_identity_suite(hilbert_kernel(), fs, gs).passed


def test_operator_needs_czc():
    setup = Setup((-2.0,), (2.0,), 2.0**-6, (-8.0,), (8.0,))
    with pytest.raises(CZCViolation):
        operator_bound_suite(hilbert_kernel(), gr.constant(1.0), 2.0, [Bump((0.0,), 1.0)], setup)


def test_operator_bound_is_stable_under_refinement():
    setup = Setup((-2.0,), (2.0,), 2.0**-6, (-8.0,), (8.0,))
    rep = operator_bound_suite(hilbert_kernel(), gr.power_law(-0.25), 2.0, [Bump((0.0,), 1.0)], setup)
    assert rep.passed and math.isfinite(rep.max_ratio)


def test_closure_preservation_expected_failure_for_lp_growth():
    setup = Setup((-2.0,), (2.0,), 2.0**-7, (-8.0,), (8.0,))
    rep = closure_preservation_suite(hilbert_kernel(), gr.lp_growth(1, 2.0), 2.0, [Bump((0.0,), 1.0)], setup)
    assert rep.expected_failure and not rep.passed


def test_delta_must_resolve_grid():
    f = Bump((0.0,), 1.0).sample((-2.0,), (2.0,), 2.0**-6)
    with pytest.raises(ValueError):
        apply_czo(hilbert_kernel(), f, delta=2.0**-6)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=64, max_size=64), st.lists(st.floats(-2, 2), min_size=64, max_size=64),
       st.floats(-3, 3))
def test_operator_is_linear(u, v, c):
    K = hilbert_kernel()
    f = GridFunction((-1.0,), (1.0,), 2.0**-5, np.array(u))
    g = GridFunction((-1.0,), (1.0,), 2.0**-5, np.array(v))
    lhs = apply_czo(K, f * c + g).values
    rhs = (apply_czo(K, f) * c + apply_czo(K, g)).values
    assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.max(np.abs(rhs), initial=0)))
