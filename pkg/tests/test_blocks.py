import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morreykit import growth as gr
from morreykit.blocks import (Block, BlockError, block_bound, block_norm_upper_bound, build_covering, conjugate,
                              decompose, indicator_block, lq_norm, pairing_bound_suite, partial_sum_l1loc,
                              validate_block)
from morreykit.grid import Ball, GridFunction, integrate_product
from morreykit.testfunctions import Bump, Gaussian

PHI = gr.power_law(-0.25)
BOX = ((-4.0,), (4.0,))
H = 2.0**-6


def test_conjugate():
    assert conjugate(2.0) == 2.0
    assert conjugate(math.inf) == 1.0
    assert conjugate(3.0) == pytest.approx(1.5)
    with pytest.raises(BlockError):
        conjugate(1.0)


def test_indicator_block_is_extremal():
    ball = Ball((0.0,), 1.0)
    b = indicator_block(ball, PHI, *BOX, H)
    chk = validate_block(b, ball, PHI, 2.0)
    assert chk.passed and abs(chk.slack) < 1e-9
    # pairing with chi_B: int b chi_B = 1/phi(B) = ||chi_B||_{L_{2,phi}} * (normalised)
    chi = GridFunction(*BOX, H, ball.contains(b.cell_centers()).astype(float))
    assert integrate_product(b, chi) == pytest.approx(1.0 / PHI.at_ball(ball), rel=1e-9)


def test_block_violations_are_named():
    ball = Ball((0.0,), 1.0)
    b = indicator_block(ball, PHI, *BOX, H)
    assert validate_block(b * 1.01, ball, PHI, 2.0).reason == "size violation"
    assert validate_block(b, Ball((0.5,), 1.0), PHI, 2.0).reason == "support violation"


def test_block_bound_closed_form():
    ball = Ball((1.0,), 0.5)
    assert block_bound(ball, PHI, 2.0) == pytest.approx(1 / (1.0**0.5 * 0.5**-0.25))
    assert block_bound(ball, PHI, math.inf) == pytest.approx(1 / (1.0 * 0.5**-0.25))


def brute_force_overlap(n, d, rng, m=4000):
    """Max over random points of #{integer k : |x / 3^(n-1) - k| < 3 sqrt(d)}."""
    step, R = 3.0 ** (n - 1), 3.0 * math.sqrt(d)
    best = 0
    off = np.arange(-math.ceil(R) - 1, math.ceil(R) + 2)
    grid = np.stack(np.meshgrid(*[off] * d, indexing="ij"), axis=-1).reshape(-1, d)
    for x in rng.uniform(-2, 2, size=(m, d)) * 3.0**n:
        y = x / step
        k = np.floor(y) + grid
        best = max(best, int(np.sum(np.sum((y - k) ** 2, axis=1) < R * R)))
    return best


@pytest.mark.parametrize("n", [-1, 0, 1])
def test_covering_overlap_matches_brute_force_1d(n, rng):
    cov = build_covering(n, (-3.0,), (3.0,))
    assert cov.covers
    assert cov.overlap == brute_force_overlap(n, 1, rng)


def test_covering_overlap_2d(rng):
    cov = build_covering(0, (-2.0, -2.0), (2.0, 2.0), scan_points=40000)
    assert cov.covers
    assert cov.overlap == brute_force_overlap(0, 2, rng, m=20000)


def test_decomposition_reconstructs_and_blocks_are_valid():
    f = Bump((0.0,), 1.0).sample(*BOX, H)
    for q in (2.0, math.inf):
        dec = decompose(f, PHI, q, 0)
        assert np.max(np.abs(dec.reconstruct().values - f.values)) < 1e-12
        assert all(validate_block(b.b, b.ball, PHI, q).passed for _, b in dec.terms)
        assert dec.coefficient_sum > 0


def test_decomposition_2d():
    f = Gaussian(center=(0.0, 0.0)).sample((-2.0, -2.0), (2.0, 2.0), 2.0**-4)
    dec = decompose(f, gr.power_law(-0.5, 2), 2.0, 0)
    assert np.max(np.abs(dec.reconstruct().values - f.values)) < 1e-12


def test_pairing_bound_on_random_blocks(rng):
    blocks = []
    for _ in range(10):
        c, r = rng.uniform(-2, 2), rng.uniform(0.1, 1.0)
        ball = Ball((c,), r)
        b = indicator_block(ball, PHI, *BOX, H)
        v = b.values * rng.uniform(-1, 1, size=b.values.shape)
        v *= block_bound(ball, PHI, 2.0) / lq_norm(b.with_values(v), 2.0)
        blocks.append(Block(b.with_values(v), ball, 2.0))
    battery = [Gaussian(rng.uniform(0.5, 2), rng.uniform(0.3, 1.5), (rng.uniform(-2, 2),)).sample(*BOX, H)
               for _ in range(4)]
    rep = pairing_bound_suite(blocks, battery, PHI, 2.0)
    assert rep.passed and rep.max_ratio <= 1.001


def test_partial_sum_l1loc_chain():
    f = Bump((0.0,), 1.0).sample(*BOX, H)
    rep = partial_sum_l1loc(decompose(f, PHI, 2.0, 0), Ball((0.3,), 0.5), PHI)
    assert rep.passed and rep.lhs <= rep.holder_chain <= rep.bound * (1 + 1e-9)


def test_block_norm_upper_bound_is_finite():
    f = Bump((0.0,), 1.0).sample(*BOX, H)
    total, n = block_norm_upper_bound(f, PHI, 2.0)
    assert math.isfinite(total) and n in (-1, 0, 1)


@settings(max_examples=20, deadline=None)
@given(st.floats(-2, 2), st.floats(0.1, 1.5), st.floats(0.1, 10.0))
def test_scaled_indicator_block_validity(c, r, scale):
    ball = Ball((c,), r)
    b = indicator_block(ball, PHI, *BOX, H) * scale
    expected = scale <= 1 + 1e-6
    # discretisation: the covered cell volume differs from |B| by at most one cell
    covered = H * np.count_nonzero(b.values)
    tol = abs(math.sqrt(covered / ball.volume) - 1)
    if abs(scale - 1) > tol + 1e-6:
        assert validate_block(b, ball, PHI, 2.0).passed == expected
