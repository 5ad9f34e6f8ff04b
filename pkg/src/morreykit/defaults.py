"""Every numeric default used by the command-line driver, in one table.

Library functions take these as explicit arguments; nothing below is read
implicitly by the numerical modules.
"""

DEFAULTS = {
    # grid
    "grid.lower": [-8.0],
    "grid.upper": [8.0],
    "grid.h": 2.0**-8,
    # ball family
    "family.rho": 2.0,
    "family.kappa": 0.25,
    # A-functional windows
    "windows.large_scale": 1.0,
    "windows.threshold_frac": 0.05,
    # growth-function checks
    "growth.cap": 1e6,
    "growth.r_min": 1e-4,
    "growth.r_max": 1e4,
    "growth.r_count": 81,
    "growth.x_count": 21,
    "growth.czc_r_inf": 1e8,
    "growth.czc_eps_cap": 1e3,
    # approximation
    "approx.eps": 0.25,
    "approx.bisection_steps": 20,
    # blocks
    "blocks.q": 2.0,
    "blocks.n": 0,
    # operators
    "czo.kernel": "hilbert",
    "czo.delta_cells": 2,
    "czo.battery_size": 5,
    # tolerances of the CLI assertions
    "tol.norm_identity": 0.02,
    "tol.stability": 0.25,
    "tol.reconstruction": 1e-9,
}
