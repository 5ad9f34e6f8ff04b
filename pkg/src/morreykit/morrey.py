"""Morrey norms, the A functional and closure diagnostics.

Limits are unobservable on a grid; each of the three asymptotic terms of A is
replaced by its value on the extreme rung of a finite window plus a trend over
the last three rungs (see :func:`classify_trend`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Ball, BallFamily, BallSums, GridError, GridFunction, default_family, lattice, center_spacing
from .growth import GrowthFunction

DECREASING = "decreasing-to-zero"
STALLED = "stalled"
GROWING = "growing"


class WindowError(ValueError):
    pass


def _ratio_sup(sums: BallSums, phi: GrowthFunction, r: float, centers: np.ndarray):
    """(max ratio, argmax center) of M_p(f, B(c, r)) / phi(c, r) over ``centers``."""
    if len(centers) == 0:
        return 0.0, None
    ratios = sums.means(centers, r) / phi(centers, r)
    k = int(np.argmax(ratios))
    return float(ratios[k]), tuple(float(v) for v in centers[k])


def morrey_sup(f: GridFunction, phi: GrowthFunction, p: float, family: BallFamily | None = None):
    """(norm, argmax ball) of sup_B M_p(f, B) / phi(B) over ``family``."""
    family = default_family(f) if family is None else family
    if family.d != f.d or phi.d != f.d:
        raise GridError("dimension mismatch between function, family and growth function")
    sums = BallSums(f, p)
    best, ball = 0.0, None
    for r, centers in family:
        if r < f.h / 2:
            raise GridError("ball under-resolved: radius < h/2")
        val, c = _ratio_sup(sums, phi, r, centers)
        if val > best:
            best, ball = val, Ball(c, r)
    return best, ball


def morrey_norm(f: GridFunction, phi: GrowthFunction, p: float, family: BallFamily | None = None) -> float:
    """||f||_{L_{p,phi}} over the ball family (default: h .. box diameter ladder)."""
    return morrey_sup(f, phi, p, family)[0]


# ---------------------------------------------------------------------------
# windows and trends


@dataclass(frozen=True)
class Windows:
    """Scale windows standing in for the three limits of A.

    ``small_radii`` are ordered towards 0, ``large_radii`` towards infinity,
    ``shells`` are increasing |x| edges (len >= 4) with ``far_radii`` the
    radii swept for the far-center term.
    """

    small_radii: tuple
    large_radii: tuple
    far_radii: tuple
    shells: tuple
    kappa: float = 0.25
    threshold_frac: float = 0.05

    def validate(self, f: GridFunction) -> None:
        if len(self.small_radii) < 3 or len(self.large_radii) < 3 or len(self.shells) < 4:
            raise WindowError("each window needs at least three rungs")
        if min(self.small_radii) < f.h / 2 - 1e-15 or min(self.far_radii) < f.h / 2 - 1e-15:
            raise WindowError("window outside resolvable range: radius < h/2")
        if max(self.shells) > box_scale(f) * (1 + 1e-9):
            raise WindowError("window outside resolvable range: shell beyond the box")


def box_scale(f: GridFunction) -> float:
    """Largest |coordinate| reached by the box (its half-width for a centered box)."""
    return float(max(max(abs(l), abs(u)) for l, u in zip(f.lower, f.upper)))


def default_windows(f: GridFunction, large_scale: float = 1.0, threshold_frac: float = 0.05) -> Windows:
    """h*{8,4,2,1}; L*{1,2,4}*large_scale; shells L*{1/8,1/4,1/2,1} with radii up to L/8."""
    h, L = f.h, box_scale(f)
    small = tuple(h * k for k in (8, 4, 2, 1))
    large = tuple(L * large_scale * k for k in (1, 2, 4))
    r_far_max = L / 8
    far = []
    r = 8 * h
    while r <= r_far_max * (1 + 1e-12):
        far.append(r)
        r *= 2
    if not far:
        far = [max(h, r_far_max)]
    return Windows(small, large, tuple(far), tuple(L * k for k in (0.125, 0.25, 0.5, 1.0)),
                   threshold_frac=threshold_frac)


def aitken_limit(v1: float, v2: float, v3: float) -> float:
    """Aitken delta-squared extrapolation of three successive values."""
    d1, d2 = v2 - v1, v3 - v2
    den = d2 - d1
    if den == 0 or abs(d2) >= abs(d1):
        return v3
    return v3 - d2 * d2 / den


def classify_trend(values, zero_tol: float) -> tuple[str, float]:
    """Classify the last three rung values; returns (label, extrapolated limit).

    ``decreasing-to-zero``: the extrapolated limit is <= ``zero_tol``;
    ``growing``: increasing with non-shrinking increments; ``stalled`` otherwise.
    """
    v1, v2, v3 = (float(v) for v in list(values)[-3:])
    if max(v1, v2, v3) <= zero_tol * 1e-9:
        return DECREASING, 0.0
    d1, d2 = v2 - v1, v3 - v2
    # rounding-level differences are no trend
    noise = 1e-9 * max(abs(v1), abs(v2), abs(v3))
    d1 = 0.0 if abs(d1) <= noise else d1
    d2 = 0.0 if abs(d2) <= noise else d2
    if d1 == 0 and d2 == 0:
        return (DECREASING, v3) if v3 <= zero_tol else (STALLED, v3)
    if d1 > 0 and d2 > 0 and d2 >= 0.9 * d1:
        return GROWING, math.inf
    if d1 < 0 and d2 < 0 and abs(d2) >= abs(d1):
        limit = max(0.0, v3 + d2)  # accelerating decrease
    else:
        limit = max(0.0, aitken_limit(v1, v1 + d1, v1 + d1 + d2))
    if limit <= zero_tol and d1 <= 0 and d2 <= 0:
        return DECREASING, limit
    return STALLED, limit


@dataclass
class Diagnostic:
    name: str
    rungs: list
    values: list
    witnesses: list
    extreme: float
    trend: str
    limit: float
    threshold: float

    @property
    def holds(self) -> bool:
        """Numerical surrogate of the limit condition: decreasing and below threshold."""
        return self.trend == DECREASING and self.extreme <= self.threshold


@dataclass
class AFunctionalReport:
    term_small_r: float
    term_large_r: float
    term_far_x: float
    A: float
    witnesses: dict
    windows: Windows
    diagnostics: dict = field(default_factory=dict)
    norm: float = 0.0

    def rows(self):
        """(term, rung, value) rows for CSV output."""
        out = []
        for key, diag in self.diagnostics.items():
            for rung, val in zip(diag.rungs, diag.values):
                out.append((key, rung, val))
        return out


def _window_values(f, phi, p, windows: Windows):
    sums = BallSums(f, p)
    kappa = windows.kappa

    def centers_for(r, lower=f.lower, upper=f.upper):
        return lattice(lower, upper, center_spacing(r, f.h, kappa))

    small, small_w = [], []
    for r in windows.small_radii:
        v, c = _ratio_sup(sums, phi, r, centers_for(r))
        small.append(v)
        small_w.append(Ball(c, r) if c else None)
    large, large_w = [], []
    for r in windows.large_radii:
        v, c = _ratio_sup(sums, phi, r, centers_for(r))
        large.append(v)
        large_w.append(Ball(c, r) if c else None)
    edges = windows.shells
    far, far_w = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        best, wit = 0.0, None
        for r in windows.far_radii:
            # lattice over the enclosing box, restricted to the shell lo <= |x| < hi
            pts = lattice(tuple(-hi for _ in f.lower), tuple(hi for _ in f.lower), center_spacing(r, f.h, kappa))
            norm = np.sqrt(np.sum(pts**2, axis=1))
            pts = pts[(norm >= lo) & (norm < hi)]
            v, c = _ratio_sup(sums, phi, r, pts)
            if v > best:
                best, wit = v, Ball(c, r)
        far.append(best)
        far_w.append(wit)
    return (small, small_w), (large, large_w), (far, far_w)


def a_functional(f: GridFunction, phi: GrowthFunction, p: float, windows: Windows | None = None,
                 norm: float | None = None, family: BallFamily | None = None) -> AFunctionalReport:
    """Extreme-rung surrogate of A_{p,phi}(f) with per-term trends.

    ``norm`` (||f||_{L_{p,phi}}) scales the decreasing-to-zero threshold; it is
    computed over ``family`` when not supplied.
    """
    windows = default_windows(f) if windows is None else windows
    windows.validate(f)
    if norm is None:
        norm = morrey_norm(f, phi, p, family)
    thr = windows.threshold_frac * norm
    (small, sw), (large, lw), (far, fw) = _window_values(f, phi, p, windows)
    diags = {}
    spec = {
        "small_r": (list(windows.small_radii), small, sw),
        "large_r": (list(windows.large_radii), large, lw),
        "far_x": ([f"{a:g}-{b:g}" for a, b in zip(windows.shells[:-1], windows.shells[1:])], far, fw),
    }
    for key, (rungs, vals, wits) in spec.items():
        trend, limit = classify_trend(vals, thr)
        diags[key] = Diagnostic(key, rungs, vals, wits, vals[-1], trend, limit, thr)
    A = max(small[-1], large[-1], far[-1])
    return AFunctionalReport(small[-1], large[-1], far[-1], A,
                             {"small_r": sw[-1], "large_r": lw[-1], "far_x": fw[-1]},
                             windows, diags, norm)


def closure_conditions(f: GridFunction, phi: GrowthFunction, p: float, windows: Windows | None = None,
                       norm: float | None = None) -> dict:
    """The three closure conditions (small r, large r, far x) as diagnostics."""
    rep = a_functional(f, phi, p, windows, norm)
    return {"i": rep.diagnostics["small_r"], "ii": rep.diagnostics["large_r"],
            "iii": rep.diagnostics["far_x"]}


# ---------------------------------------------------------------------------
# indicator bound and distance sandwich


def indicator_norm_constant(phi: GrowthFunction, p: float, ball: Ball, family: BallFamily, h: float) -> float:
    """Measured C with ||chi_B||_{L_{p,phi}} = C / phi(B) on ``family``."""
    from .grid import sample

    d = ball.d
    pad = 2 * ball.radius
    lower = tuple(c - pad for c in ball.center)
    upper = tuple(c + pad for c in ball.center)
    chi = sample(lambda x: ball.contains(x).astype(float), lower, upper, h)
    return morrey_norm(chi, phi, p, family) * phi.at_ball(ball)


@dataclass
class DistanceEstimate:
    lower: float
    upper: float
    approximant: GridFunction | None
    certificate: object = None
    tolerance: float = 0.05

    @property
    def consistent(self) -> bool:
        return self.lower <= self.upper * (1 + self.tolerance)


def distance_bounds(f: GridFunction, phi: GrowthFunction, p: float, eps: float,
                    windows: Windows | None = None, family: BallFamily | None = None,
                    tolerance: float = 0.05, **approx_options) -> DistanceEstimate:
    """lower = A(f), upper = ||f - g|| for the constructive approximant g."""
    from .approx import approximate

    windows = default_windows(f) if windows is None else windows
    family = default_family(f) if family is None else family
    rep = a_functional(f, phi, p, windows, family=family)
    g, cert = approximate(f, phi, p, eps, windows=windows, family=family, **approx_options)
    return DistanceEstimate(rep.A, cert.error_norm, g, cert, tolerance)
