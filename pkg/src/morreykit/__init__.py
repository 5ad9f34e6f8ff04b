"""Numerical toolkit for generalized Morrey spaces with variable growth functions."""

from .grid import Ball, BallFamily, GridFunction, ball_mean_p, integrate_product, make_ball_family, sample
from .growth import GrowthFunction, constant, derive_phi12, lp_growth, power_law, variable_exponent
from .morrey import a_functional, closure_conditions, distance_bounds, morrey_norm
from .approx import approximate, mollify
from .blocks import build_covering, decompose, validate_block
from .czo import apply_czo, hilbert_kernel, riesz_kernel

__all__ = [
    "Ball", "BallFamily", "GridFunction", "ball_mean_p", "integrate_product", "make_ball_family", "sample",
    "GrowthFunction", "constant", "derive_phi12", "lp_growth", "power_law", "variable_exponent",
    "a_functional", "closure_conditions", "distance_bounds", "morrey_norm",
    "approximate", "mollify", "build_covering", "decompose", "validate_block",
    "apply_czo", "hilbert_kernel", "riesz_kernel",
]
