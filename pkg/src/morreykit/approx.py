"""Mollification and the truncate-then-mollify approximation algorithm."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .grid import BallFamily, BallSums, GridFunction, ball_volume, center_spacing, default_family, lattice, radius_ladder
from .growth import GrowthFunction, check_almost_monotone, check_doubling, default_x_samples, doubling_samples, monotone_samples
from .morrey import Windows, a_functional, box_scale, default_windows, morrey_norm


class ApproximationError(RuntimeError):
    """Raised when the ladders cannot certify the construction at this resolution."""

    def __init__(self, message: str, predicate: str | None = None):
        super().__init__(message if predicate is None else f"{message} (failing predicate: {predicate})")
        self.predicate = predicate


@dataclass(frozen=True)
class MollifierKernel:
    """Radial bump ``c (1 - |y|^2)^k`` on the unit ball, normalized to integral |B(0,1)|.

    k = 2 in d = 1 (c = 15/8); in d = 2 that profile would need c = 3 > 2, so
    k = 1 is used there (c = 2), keeping 0 <= eta <= 2.
    """

    d: int = 1

    @property
    def power(self) -> int:
        return 2 if self.d == 1 else 1

    @property
    def normalization(self) -> float:
        k = self.power
        if self.d == 1:
            integral = 2.0 * math.gamma(k + 1) * math.sqrt(math.pi) / (2 * math.gamma(k + 1.5))
        else:
            integral = math.pi / (k + 1)
        return float(ball_volume(self.d, 1.0)) / integral

    def __call__(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float).reshape(len(y), -1)
        s2 = np.sum(y**2, axis=1)
        return np.where(s2 < 1, self.normalization * np.clip(1 - s2, 0, None) ** self.power, 0.0)

    def stencil(self, t: float, h: float) -> np.ndarray:
        """Discrete eta_t on the grid offsets, renormalized so that sum * h^d = 1."""
        m = int(math.ceil(t / h))
        axes = [np.arange(-m, m + 1) * h] * self.d
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([a.ravel() for a in mesh], axis=1) / t
        w = self(pts).reshape([2 * m + 1] * self.d)
        return w / (np.sum(w) * h**self.d)


def mollify(f: GridFunction, t: float, kernel: MollifierKernel | None = None) -> GridFunction:
    """eta_t * f on the grid of ``f`` (values beyond the box are dropped)."""
    if t < 2 * f.h * (1 - 1e-12):
        raise ValueError("kernel under-resolved: t < 2h")
    kernel = MollifierKernel(f.d) if kernel is None else kernel
    w = kernel.stencil(t, f.h)
    out = fftconvolve(f.values, w, mode="same") * f.cell_volume
    # exact zeros off the t-neighbourhood of supp f
    reach = fftconvolve((f.values != 0).astype(float), (w > 0).astype(float), mode="same")
    out[reach < 0.5] = 0.0
    return f.with_values(out)


@dataclass
class MollifierReport:
    ts: list
    ratios: list
    bound: float
    C_AD: float

    @property
    def max_ratio(self) -> float:
        return max(self.ratios) if self.ratios else 0.0

    @property
    def passed(self) -> bool:
        return self.max_ratio <= self.bound


def ad_constant(phi: GrowthFunction, xs=None) -> float:
    xs = default_x_samples(d_box(phi.d)[0], d_box(phi.d)[1]) if xs is None else xs
    return check_almost_monotone(phi, "AD", monotone_samples(xs), cap=math.inf).constant


def d_box(d: int):
    return tuple([-2.0] * d), tuple([2.0] * d)


def mollifier_bound_suite(f: GridFunction, phi: GrowthFunction, p: float, ts,
                          family: BallFamily | None = None, kernel: MollifierKernel | None = None,
                          C_AD: float | None = None) -> MollifierReport:
    """||eta_t * f|| / ||f|| over ``ts`` against 2 * 2^{d/p} * C_AD."""
    family = default_family(f) if family is None else family
    C_AD = ad_constant(phi) if C_AD is None else C_AD
    bound = 2 * 2 ** (f.d / p) * C_AD
    base = morrey_norm(f, phi, p, family)
    ratios = []
    for t in ts:
        if base == 0:
            ratios.append(0.0)
            continue
        ratios.append(morrey_norm(mollify(f, t, kernel), phi, p, family) / base)
    return MollifierReport(list(ts), ratios, bound, C_AD)


# ---------------------------------------------------------------------------
# construction


@dataclass
class ApproximationCertificate:
    i_eps: int
    k_eps: int
    j_eps: int
    s: float
    C_eps: float
    t: float
    lp_error: float
    error_norm: float
    A: float
    eps: float
    C_1: float
    predicates: dict = field(default_factory=dict)

    def check(self) -> None:
        assert self.i_eps < self.k_eps < self.j_eps
        assert self.t < 2.0 ** (self.i_eps - 1)
        assert self.s == 2.0 ** (self.j_eps + 2)

    def items(self):
        return [("i_eps", self.i_eps), ("k_eps", self.k_eps), ("j_eps", self.j_eps), ("s", self.s),
                ("C_eps", self.C_eps), ("t", self.t), ("lp_error", self.lp_error),
                ("error_norm", self.error_norm), ("A", self.A), ("eps", self.eps), ("C_1", self.C_1)]


class _Rungs:
    """Per-radius ratios M_p(f, B(c, r)) / phi(c, r) on proportional lattices."""

    def __init__(self, f, phi, p, radii, kappa):
        sums = BallSums(f, p)
        self.radii = np.asarray(sorted(set(float(r) for r in radii)))
        self.centers, self.ratios = [], []
        for r in self.radii:
            c = lattice(f.lower, f.upper, center_spacing(r, f.h, kappa))
            self.centers.append(c)
            self.ratios.append(sums.means(c, r) / phi(c, r))

    def sup_where(self, radius_ok, center_ok=None) -> float:
        best = 0.0
        for r, c, q in zip(self.radii, self.centers, self.ratios):
            if not radius_ok(r):
                continue
            sel = q if center_ok is None else q[center_ok(c, r)]
            if len(sel):
                best = max(best, float(np.max(sel)))
        return best


def _lp_error_on_ball(a: GridFunction, b: GridFunction, s: float, p: float) -> float:
    pts = a.cell_centers()
    inside = (np.sqrt(np.sum(pts**2, axis=1)) < s).reshape(a.shape)
    diff = np.abs(a.values - b.values) ** p * inside
    return float(np.sum(diff) * a.cell_volume) ** (1.0 / p)


def approximate(f: GridFunction, phi: GrowthFunction, p: float, eps: float,
                windows: Windows | None = None, family: BallFamily | None = None,
                kernel: MollifierKernel | None = None, C_1: float | None = None,
                bisection_steps: int = 20):
    """Truncate-then-mollify approximant g of f with its certificate.

    Thresholds: i_eps is the largest dyadic exponent whose small-radius
    predicate holds (so that the mollification scale t >= 2h is admissible),
    k_eps > i_eps the smallest whose large-radius predicate holds, and
    j_eps > k_eps the smallest whose far-ball predicate holds.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    windows = default_windows(f) if windows is None else windows
    family = default_family(f) if family is None else family
    norm = morrey_norm(f, phi, p, family)
    A = a_functional(f, phi, p, windows, norm=norm).A
    if C_1 is None:
        xs = default_x_samples(f.lower, f.upper, 21)
        C_1 = check_doubling(phi, doubling_samples(xs), cap=math.inf).constant
    h = f.h
    lo_exp = math.floor(math.log2(h))
    hi_exp = math.ceil(math.log2(max(max(family.radii), max(windows.large_radii))))
    radii = list(family.radii) + list(windows.large_radii) + [2.0**e for e in range(lo_exp, hi_exp + 1)]
    rungs = _Rungs(f, phi, p, [r for r in radii if r >= h / 2], family.kappa)
    margin = A + eps
    preds = {}

    # i_eps: largest exponent (at most the box scale) with sup_{r <= 2^i} < A + eps,
    # so that the mollification scale t in [2h, 2^{i-1}) is as coarse as allowed;
    # k_eps > i_eps: smallest exponent with sup_{r >= 2^k} < A + eps
    top = min(hi_exp, math.ceil(math.log2(box_scale(f))))
    i_eps = None
    for i in range(lo_exp, top + 1):
        val = rungs.sup_where(lambda r, i=i: r <= 2.0**i * (1 + 1e-12))
        if val < margin:
            i_eps, preds["B1"] = i, val
        else:
            break
    if i_eps is None or 2.0 ** (i_eps - 1) <= 2 * h:
        raise ApproximationError("insufficient resolution for eps", "B1: sup over r <= 2^i_eps")
    k_eps = None
    for k in range(i_eps + 1, hi_exp + 2):
        val = rungs.sup_where(lambda r, k=k: r >= 2.0**k * (1 - 1e-12))
        if val < margin:
            k_eps, preds["B2"] = k, val
            break
    if k_eps is None:
        raise ApproximationError("insufficient resolution for eps", "B2: sup over r >= 2^k_eps")
    far_margin = C_1 * A + eps
    j_eps = None
    for j in range(k_eps + 1, hi_exp + 8):
        R = 2.0**j

        def far(c, r, R=R):
            return np.sqrt(np.sum(c**2, axis=1)) >= R + r

        val = rungs.sup_where(lambda r: True, far)
        if val < far_margin:
            j_eps, preds["B3"] = j, val
            break
    if j_eps is None:
        raise ApproximationError("insufficient resolution for eps", "B3: far balls")
    s = 2.0 ** (j_eps + 2)

    pts = f.cell_centers()
    inside = (np.sqrt(np.sum(pts**2, axis=1)) < s).reshape(f.shape)
    f1 = f.with_values(np.where(inside, f.values, 0.0))

    # C_eps: inf |B|^{1/p} phi(B) over family balls with 2^{i-1} <= r <= 2^{k-1}, B inside B(0, s)
    C_eps = math.inf
    for r in radius_ladder(2.0 ** (i_eps - 1), 2.0 ** (k_eps - 1), 2.0):
        c = lattice(f.lower, f.upper, center_spacing(r, h, family.kappa))
        c = c[np.sqrt(np.sum(c**2, axis=1)) + r <= s]
        if len(c):
            C_eps = min(C_eps, float(np.min(ball_volume(f.d, r) ** (1 / p) * phi(c, r))))
    if not np.isfinite(C_eps):
        raise ApproximationError("insufficient resolution for eps", "C_eps: no admissible ball")
    target = C_eps * eps

    def err(t):
        return _lp_error_on_ball(f1, mollify(f1, t, kernel), s, p)

    t_hi = 2.0 ** (i_eps - 1)
    t = 2.0 ** (i_eps - 2)
    e = err(t)
    if e >= target:
        lo, hi = 2 * h, t
        e_lo = err(lo)
        if e_lo >= target:
            raise ApproximationError("insufficient resolution for eps", "L^p mollification error at t = 2h")
        e = e_lo
        for _ in range(bisection_steps):
            mid = 0.5 * (lo + hi)
            e_mid = err(mid)
            if e_mid < target:
                lo, e = mid, e_mid
            else:
                hi = mid
        t = lo
    assert t < t_hi
    g = mollify(f1, t, kernel)
    error_norm = morrey_norm(f - g, phi, p, family)
    cert = ApproximationCertificate(i_eps, k_eps, j_eps, s, C_eps, t, e, error_norm, A, eps, C_1, preds)
    cert.check()
    return g, cert
