import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from morreykit import growth as gr
from morreykit.approx import (ApproximationCertificate, MollifierKernel, ad_constant, approximate, mollifier_bound_suite,
                              mollify)
from morreykit.grid import GridFunction
from morreykit.testfunctions import Gaussian, Indicator, PowerSingularity

PHI = gr.power_law(-0.25)


@pytest.mark.parametrize("d", [1, 2])
def test_kernel_normalisation_matches_quadrature(d):
    K = MollifierKernel(d)
    if d == 1:
        total = integrate.quad(lambda y: K(np.array([[y]]))[0], -1, 1)[0]
    else:
        total = integrate.quad(lambda s: 2 * math.pi * s * K(np.array([[s, 0.0]]))[0], 0, 1)[0]
    assert total == pytest.approx({1: 2.0, 2: math.pi}[d], rel=1e-8)


def test_kernel_is_bounded_by_two():
    assert MollifierKernel(1).normalization == pytest.approx(15 / 8)
    assert MollifierKernel(2).normalization == pytest.approx(2.0)


@pytest.mark.parametrize("d", [1, 2])
def test_stencil_has_unit_mass(d):
    w = MollifierKernel(d).stencil(0.3, 0.05)
    assert np.sum(w) * 0.05**d == pytest.approx(1.0, rel=1e-12)


def test_mollify_preserves_integral_and_support():
    f = Indicator((0.0,), 1.0).sample((-4.0,), (4.0,), 2.0**-7)
    g = mollify(f, 0.25)
    assert np.sum(g.values) == pytest.approx(np.sum(f.values), rel=1e-10)
    x = g.cell_centers()[:, 0]
    assert not np.any(g.values[np.abs(x) > 1.25 + 2.0**-7])


def test_mollify_matches_quadrature_oracle():
    f = Gaussian().sample((-6.0,), (6.0,), 2.0**-8)
    t = 0.5
    g = mollify(f, t)
    K = MollifierKernel(1)
    for x0 in (0.0, 0.7, -1.3):
        i = int(np.argmin(np.abs(g.cell_centers()[:, 0] - x0)))
        xc = g.cell_centers()[i, 0]
        oracle = integrate.quad(lambda y: K(np.array([[y / t]]))[0] / (2 * t) * math.exp(-(xc - y) ** 2), -t, t)[0]
        assert g.values[i] == pytest.approx(oracle, rel=1e-4)


def test_mollify_rejects_under_resolved_scale():
    f = Gaussian().sample((-2.0,), (2.0,), 0.1)
    with pytest.raises(ValueError, match="under-resolved"):
        mollify(f, 0.1)


def test_ad_constant_of_decreasing_power():
    assert ad_constant(PHI) == pytest.approx(1.0)


def test_mollifier_bound_on_indicator():
    f = Indicator((0.0,), 1.0).sample((-8.0,), (8.0,), 2.0**-8)
    rep = mollifier_bound_suite(f, PHI, 2.0, np.geomspace(4 * f.h, 2.0, 6))
    assert rep.passed
    assert rep.bound == pytest.approx(2 * math.sqrt(2))


def test_approximate_certificate_for_singular_function():
    f = PowerSingularity(-0.25).sample((-8.0,), (8.0,), 2.0**-8, 2.0)
    g, cert = approximate(f, PHI, 2.0, 0.25)
    assert isinstance(cert, ApproximationCertificate)
    cert.check()
    assert cert.lp_error < cert.C_eps * cert.eps
    x = g.cell_centers()[:, 0]
    assert not np.any(g.values[np.abs(x) >= cert.s + cert.t + g.h])
    assert np.all(np.isfinite(g.values))


def test_approximate_rejects_bad_eps():
    f = Gaussian().sample((-8.0,), (8.0,), 2.0**-6)
    with pytest.raises(ValueError):
        approximate(f, PHI, 2.0, 0.0)


@settings(max_examples=10, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=64, max_size=64), st.lists(st.floats(-2, 2), min_size=64, max_size=64),
       st.floats(-3, 3))
def test_mollify_is_linear(u, v, c):
    f = GridFunction((-1.0,), (1.0,), 2.0**-5, np.array(u))
    g = GridFunction((-1.0,), (1.0,), 2.0**-5, np.array(v))
    lhs = mollify(f * c + g, 0.2).values
    rhs = (mollify(f, 0.2) * c + mollify(g, 0.2)).values
    assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.max(np.abs(rhs), initial=0)))
