"""Growth functions phi(x, r) and sampled checks of their structural conditions.

Every check works on a finite witness set and returns a
:class:`ConditionReport`; a check passes when the best constant over the set
is finite and at most ``cap``.  Constants are additionally probed for
divergence along the scale that the condition quantifies over (per-decade
maxima that keep increasing without slowing down are reported as unbounded).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .expr import compile_expression

DEFAULT_CAP = 1e6
DEFAULT_R_SAMPLES = np.logspace(-4, 4, 81)
CZC_R_INF = 1e8
CZC_EPS_CAP = 1e3


class GrowthError(ValueError):
    pass


def _points(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    if x.ndim == 1:
        x = x.reshape(-1, d) if d > 1 else x.reshape(-1, 1)
    return x


@dataclass(frozen=True)
class GrowthFunction:
    """A positive function of center and radius.

    ``family`` is one of ``power``, ``variable``, ``constant``, ``lp``,
    ``derived1``, ``derived2``, ``custom``; ``params`` holds the family's
    parameters (``lam``, ``lam_fn``, ``lam_star``, ``c``, ``base``, ``eps``...).
    """

    family: str
    d: int
    params: dict = field(default_factory=dict, compare=False)

    def __call__(self, x, r) -> np.ndarray:
        pts = _points(x, self.d)
        r = np.broadcast_to(np.asarray(r, dtype=float), (len(pts),)) if np.ndim(r) else np.full(len(pts), float(r))
        fam, par = self.family, self.params
        if fam in ("power", "lp"):
            return r ** par["lam"]
        if fam == "constant":
            return np.full(len(pts), par["c"])
        if fam == "variable":
            lam = np.asarray(par["lam_fn"](pts), dtype=float)
            return np.where(r < 1, r**lam, r ** par["lam_star"])
        if fam == "derived1":
            return par["base"](pts, r) * r ** par["eps"]
        if fam == "derived2":
            ax = np.sqrt(np.sum(pts**2, axis=1))
            return par["base"](pts, r) * (r / (ax + r)) ** par["eps"]
        if fam == "custom":
            return np.asarray(par["fn"](pts, r), dtype=float)
        raise GrowthError(f"unknown growth family {fam!r}")

    def at_ball(self, ball) -> float:
        return float(self(np.asarray([ball.center]), ball.radius)[0])

    @property
    def tail_exponent(self) -> float | None:
        """Exponent a with phi(x, t) ~ t^a as t -> infinity, when known in closed form."""
        fam, par = self.family, self.params
        if fam in ("power", "lp"):
            return par["lam"]
        if fam == "constant":
            return 0.0
        if fam == "variable":
            return par["lam_star"]
        if fam == "derived1":
            base = par["base"].tail_exponent
            return None if base is None else base + par["eps"]
        if fam == "derived2":
            return par["base"].tail_exponent
        return None

    def describe(self) -> str:
        par = self.params
        if self.family in ("power", "lp"):
            return f"{self.family}(lam={par['lam']!r})"
        if self.family == "constant":
            return f"constant(c={par['c']!r})"
        if self.family == "variable":
            return f"variable(lam={par.get('lam_source', '<fn>')}, lam_star={par['lam_star']!r})"
        if self.family in ("derived1", "derived2"):
            return f"{self.family}({par['base'].describe()}, eps={par['eps']!r})"
        return "custom"


def power_law(lam: float, d: int = 1) -> GrowthFunction:
    return GrowthFunction("power", d, {"lam": float(lam)})


def lp_growth(d: int, p: float) -> GrowthFunction:
    """phi = r^{-d/p}, for which the Morrey space is L^p."""
    return GrowthFunction("lp", d, {"lam": -d / p})


def constant(c: float = 1.0, d: int = 1) -> GrowthFunction:
    if c <= 0:
        raise GrowthError("constant growth must be positive")
    return GrowthFunction("constant", d, {"c": float(c)})


def variable_exponent(lam, lam_star: float, d: int = 1) -> GrowthFunction:
    """phi(x,r) = r^{lam(x)} for r < 1 and r^{lam_star} for r >= 1.

    ``lam`` is a callable on points ``(N, d)``, an expression string, or a
    sampled table ``(xs, values)`` (d = 1, linear interpolation).
    """
    source = None
    if isinstance(lam, str):
        source = lam
        lam_fn = compile_expression(lam)
    elif isinstance(lam, tuple) and len(lam) == 2:
        xs, vals = (np.asarray(a, dtype=float) for a in lam)
        source = "table"

        def lam_fn(pts, xs=xs, vals=vals):
            return np.interp(np.asarray(pts)[:, 0], xs, vals)
    elif callable(lam):
        lam_fn = lam
    else:
        lam_fn = lambda pts, c=float(lam): np.full(len(pts), c)  # noqa: E731
        source = repr(float(lam))
    return GrowthFunction("variable", d, {"lam_fn": lam_fn, "lam_star": float(lam_star),
                                          "lam_source": source})


def custom(fn: Callable, d: int = 1) -> GrowthFunction:
    return GrowthFunction("custom", d, {"fn": fn})


def derive_phi12(phi: GrowthFunction, eps: float) -> tuple[GrowthFunction, GrowthFunction]:
    """phi1 = phi r^eps and phi2 = phi r^eps / (|x| + r)^eps."""
    if eps <= 0:
        raise GrowthError("eps must be positive")
    d1 = GrowthFunction("derived1", phi.d, {"base": phi, "eps": float(eps)})
    d2 = GrowthFunction("derived2", phi.d, {"base": phi, "eps": float(eps)})
    return d1, d2


# ---------------------------------------------------------------------------
# reports and sample sets


@dataclass
class ConditionReport:
    name: str
    passed: bool
    constant: float
    cap: float = DEFAULT_CAP
    witness: tuple | None = None
    details: dict = field(default_factory=dict)

    def rows(self):
        """(name, value, bound, pass) rows, sub-reports included."""
        out = [(self.name, self.constant, self.cap, self.passed)]
        for sub in self.details.get("subreports", []):
            out.extend(sub.rows())
        return out


def default_x_samples(lower=(-2.0,), upper=(2.0,), n: int = 21) -> np.ndarray:
    lower = np.atleast_1d(lower)
    upper = np.atleast_1d(upper)
    if len(lower) == 1:
        return np.linspace(lower[0], upper[0], n).reshape(-1, 1)
    m = max(3, int(round(math.sqrt(n))) * 2 + 1)
    axes = [np.linspace(l, u, m) for l, u in zip(lower, upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([a.ravel() for a in mesh], axis=1)


def doubling_samples(xs, rs=DEFAULT_R_SAMPLES):
    """Triples (x, r, s) with s/r in {1/2, 2^-1/2, 2^1/2, 2}."""
    xs = np.asarray(xs, dtype=float).reshape(len(xs), -1)
    facs = np.array([0.5, 2**-0.5, 2**0.5, 2.0])
    X = np.repeat(xs, len(rs) * len(facs), axis=0)
    R = np.tile(np.repeat(rs, len(facs)), len(xs))
    S = R * np.tile(facs, len(xs) * len(rs))
    return X, R, S


def nearness_samples(xs, rs=DEFAULT_R_SAMPLES):
    """Triples (x, y, r) with y = x + r*u*e, |u| <= 1, e a unit direction."""
    xs = np.asarray(xs, dtype=float).reshape(len(xs), -1)
    d = xs.shape[1]
    dirs = [np.eye(d)[k] for k in range(d)]
    if d == 2:
        dirs.append(np.array([1.0, 1.0]) / math.sqrt(2))
    us = [-1.0, -0.5, -0.25, 0.25, 0.5, 1.0]
    X, Y, R = [], [], []
    for x in xs:
        for r in rs:
            for e in dirs:
                for u in us:
                    X.append(x)
                    Y.append(x + r * u * e)
                    R.append(r)
    return np.array(X), np.array(Y), np.array(R)


def monotone_samples(xs, rs=DEFAULT_R_SAMPLES):
    """Pairs r < s from ``rs`` at each x."""
    xs = np.asarray(xs, dtype=float).reshape(len(xs), -1)
    i, j = np.triu_indices(len(rs), k=1)
    X = np.repeat(xs, len(i), axis=0)
    R = np.tile(rs[i], len(xs))
    S = np.tile(rs[j], len(xs))
    return X, R, S


def _decade_maxima(key: np.ndarray, vals: np.ndarray, towards: str) -> list[float]:
    """Max of ``vals`` per decade of ``key``, ordered towards 0 or infinity."""
    dec = np.floor(np.log10(key) + 1e-9).astype(int)
    keys, counts = np.unique(dec, return_counts=True)
    # sparsely populated edge decades are unreliable witnesses of a trend
    full = keys[counts >= 0.5 * np.median(counts)]
    out = []
    for k in sorted(full.tolist(), reverse=(towards == "zero")):
        out.append(float(np.max(vals[dec == k])))
    return out


def diverges(seq: list[float], rel_tol: float = 1e-3) -> bool:
    """True when the last three entries increase without the increments shrinking."""
    if len(seq) < 3:
        return False
    c1, c2, c3 = seq[-3:]
    if not all(np.isfinite([c1, c2, c3])):
        return True
    d1, d2 = c2 - c1, c3 - c2
    return d1 > rel_tol * abs(c3) and d2 > rel_tol * abs(c3) and d2 >= 0.9 * d1


def _finish(name, vals, witnesses, cap, probes, extra=None) -> ConditionReport:
    if len(vals) == 0:
        raise GrowthError("empty sample set")
    k = int(np.argmax(vals))
    C = float(vals[k])
    unbounded = any(diverges(seq) for seq in probes)
    details = {"unbounded": unbounded, "probes": probes}
    if extra:
        details.update(extra)
    if unbounded:
        C = math.inf
    passed = bool(np.isfinite(C) and C <= cap)
    return ConditionReport(name, passed, C, cap, tuple(np.atleast_1d(w[k]).tolist() for w in witnesses), details)


def check_doubling(phi: GrowthFunction, samples, cap: float = DEFAULT_CAP) -> ConditionReport:
    X, R, S = samples
    if len(R) == 0:
        raise GrowthError("empty sample set")
    a, b = phi(X, R), phi(X, S)
    q = np.maximum(a / b, b / a)
    probes = [_decade_maxima(R, q, "zero"), _decade_maxima(R, q, "inf")]
    return _finish("DC", q, (X, R, S), cap, probes)


def check_nearness(phi: GrowthFunction, samples, cap: float = DEFAULT_CAP) -> ConditionReport:
    X, Y, R = samples
    if len(R) == 0:
        raise GrowthError("empty sample set")
    dist = np.sqrt(np.sum((np.asarray(X) - np.asarray(Y)) ** 2, axis=1))
    if np.any(dist > R + 1e-9 * (R + np.abs(np.asarray(X)).max(axis=1))):
        raise GrowthError("nearness samples need |x - y| <= r")
    a, b = phi(X, R), phi(Y, R)
    q = np.maximum(a / b, b / a)
    probes = [_decade_maxima(R, q, "zero"), _decade_maxima(R, q, "inf")]
    return _finish("NC", q, (X, Y, R), cap, probes)


def check_almost_monotone(phi, direction: str, samples, cap: float = DEFAULT_CAP,
                          name: str | None = None) -> ConditionReport:
    """AI: phi(x,r) <= C phi(x,s); AD: phi(x,s) <= C phi(x,r); for r < s."""
    X, R, S = samples
    if len(R) == 0:
        raise GrowthError("empty sample set")
    if np.any(R >= S):
        raise GrowthError("monotonicity samples need r < s")
    a, b = phi(X, R), phi(X, S)
    if direction == "AI":
        q = a / b
    elif direction == "AD":
        q = b / a
    else:
        raise GrowthError("direction must be 'AI' or 'AD'")
    q = np.maximum(q, 1.0)
    probes = [_decade_maxima(S / R, q, "inf")]
    return _finish(name or direction, q, (X, R, S), cap, probes)


def check_gdec(phi: GrowthFunction, p: float, samples, cap: float = DEFAULT_CAP) -> ConditionReport:
    """r^{d/p} phi almost increasing and phi almost decreasing."""
    d = phi.d
    scaled = custom(lambda x, r: np.asarray(r) ** (d / p) * phi(x, r), d)
    ai = check_almost_monotone(scaled, "AI", samples, cap, name="AI[r^(d/p)phi]")
    ad = check_almost_monotone(phi, "AD", samples, cap, name="AD[phi]")
    C = max(ai.constant, ad.constant)
    return ConditionReport("Gdec", ai.passed and ad.passed, C, cap, ai.witness if ai.constant >= ad.constant else ad.witness,
                           {"subreports": [ai, ad], "C_AI": ai.constant, "C_AD": ad.constant})


def check_log_holder(lam: Callable, samples, cap: float = DEFAULT_CAP) -> ConditionReport:
    """sup |lam(x) - lam(y)| log(e/|x-y|) over pairs with 0 < |x-y| < 1."""
    X, Y = samples
    X = np.asarray(X, dtype=float).reshape(len(X), -1)
    Y = np.asarray(Y, dtype=float).reshape(len(Y), -1)
    dist = np.sqrt(np.sum((X - Y) ** 2, axis=1))
    ok = (dist > 0) & (dist < 1)
    if not np.any(ok):
        raise GrowthError("empty sample set")
    X, Y, dist = X[ok], Y[ok], dist[ok]
    q = np.abs(lam(X) - lam(Y)) * np.log(math.e / dist)
    probes = [_decade_maxima(dist, q, "zero")]
    rep = _finish("log-Holder", q, (X, Y), cap, probes)
    if rep.constant == 0.0:
        rep.passed = True
    return rep


def log_holder_samples(xs, dists=np.logspace(-8, -0.1, 40)):
    xs = np.asarray(xs, dtype=float).reshape(len(xs), -1)
    d = xs.shape[1]
    X, Y = [], []
    for x in xs:
        for t in dists:
            for s in (-1.0, 1.0):
                e = np.zeros(d)
                e[0] = s
                X.append(x - 0.5 * t * e)
                Y.append(x + 0.5 * t * e)
    return np.array(X), np.array(Y)


# ---------------------------------------------------------------------------
# integral conditions


def _log_integral(phi, X, a, b, n):
    """int_a^b phi(x,t) dt/t per sample, Simpson in log t; a, b arrays."""
    from scipy.integrate import simpson

    s = np.linspace(0.0, 1.0, n)
    la, lb = np.log(a), np.log(b)
    U = la[:, None] + (lb - la)[:, None] * s[None, :]
    T = np.exp(U)
    m = len(a)
    vals = phi(np.repeat(X, n, axis=0), T.ravel()).reshape(m, n)
    return simpson(vals, x=U, axis=1)


def czc_ratios(phi: GrowthFunction, X, R, r_inf: float = CZC_R_INF, nodes: int = 257) -> np.ndarray:
    """(int_r^inf phi(x,t) dt/t) / phi(x,r), truncated at r_inf plus a power-law tail."""
    X = np.asarray(X, dtype=float).reshape(len(X), -1)
    R = np.asarray(R, dtype=float)
    total = np.zeros(len(R))
    lo = R.copy()
    # split at t = 1 where the variable-exponent family switches branch
    mid = np.where((R < 1) & (r_inf > 1), 1.0, R)
    part = mid > lo
    if np.any(part):
        total[part] += _log_integral(phi, X[part], lo[part], mid[part], nodes)
    total += _log_integral(phi, X, np.maximum(mid, lo), np.full(len(R), r_inf), nodes)
    alpha = phi.tail_exponent
    end = phi(X, r_inf)
    if alpha is None:
        alpha_est = np.log(end / phi(X, r_inf / 2)) / math.log(2)
    else:
        alpha_est = np.full(len(R), float(alpha))
    with np.errstate(divide="ignore"):
        tail = np.where(alpha_est < 0, end / np.abs(alpha_est), np.inf)
    return (total + tail) / phi(X, R)


def check_czc(phi: GrowthFunction, xs, rs=DEFAULT_R_SAMPLES, r_inf: float = CZC_R_INF,
              cap: float = DEFAULT_CAP) -> ConditionReport:
    xs = np.asarray(xs, dtype=float).reshape(len(xs), -1)
    rs = np.asarray(rs, dtype=float)
    rs = rs[rs < r_inf]
    X = np.repeat(xs, len(rs), axis=0)
    R = np.tile(rs, len(xs))
    q = czc_ratios(phi, X, R, r_inf)
    probes = [_decade_maxima(R, q, "zero"), _decade_maxima(R, q, "inf")]
    return _finish("CZ-C", q, (X, R), cap, probes, {"r_inf": r_inf})


@dataclass
class CzcEpsilon:
    eps: float
    constant: float
    iterations: int


def find_czc_epsilon(phi: GrowthFunction, xs, rs=DEFAULT_R_SAMPLES, cap: float = CZC_EPS_CAP,
                     iterations: int = 40) -> CzcEpsilon | None:
    """Largest eps in (0, 1] (by bisection) with phi r^eps passing CZ-C at ``cap``.

    Returns ``None`` when phi itself fails CZ-C.
    """
    base = check_czc(phi, xs, rs, cap=cap)
    if not base.passed:
        return None

    def test(eps):
        return check_czc(derive_phi12(phi, eps)[0], xs, rs, cap=cap)

    top = test(1.0)
    if top.passed:
        return CzcEpsilon(1.0, top.constant, 0)
    lo, hi, lo_c = 0.0, 1.0, base.constant
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        rep = test(mid)
        if rep.passed:
            lo, lo_c = mid, rep.constant
        else:
            hi = mid
    if lo == 0.0:
        return None
    return CzcEpsilon(lo, lo_c, iterations)


def czc_constant(phi: GrowthFunction, eps: float, xs, rs=DEFAULT_R_SAMPLES) -> float:
    """Measured constant of int_r^inf phi t^eps dt/t <= C phi r^eps."""
    target = phi if eps == 0 else derive_phi12(phi, eps)[0]
    return check_czc(target, xs, rs, cap=math.inf).constant


def check_lim_conditions(phi: GrowthFunction, p: float, Ms=(1.0, 4.0),
                         small_r=np.logspace(-1, -8, 15), large_r=np.logspace(1, 8, 15),
                         min_exponent: float = 1e-2) -> ConditionReport:
    """Trend tests for inf_{B(0,M)} phi(x,r) -> inf (r -> 0) and r^{d/p} phi(0,r) -> inf (r -> inf).

    The sampled quantity must increase strictly along the ladder and its fitted
    log-log growth exponent must be at least ``min_exponent``.
    """
    d = phi.d

    def trend(q, r, name):
        q = np.asarray(q, dtype=float)
        grow = np.polyfit(np.log(r), np.log(q), 1)[0]
        exponent = -grow if r[-1] < r[0] else grow
        increasing = bool(np.all(np.diff(q) > 0))
        ok = increasing and exponent >= min_exponent
        return ConditionReport(name, ok, float(exponent), min_exponent, None,
                               {"values": q.tolist(), "radii": np.asarray(r).tolist()})

    subs = []
    for M in Ms:
        xs = default_x_samples(tuple([-M] * d), tuple([M] * d), 21)
        xs = xs[np.sqrt(np.sum(xs**2, axis=1)) < M]
        q = [float(np.min(phi(xs, r))) for r in small_r]
        subs.append(trend(q, small_r, f"lim1[M={M:g}]"))
    origin = np.zeros((1, d))
    q2 = [float(r ** (d / p) * phi(origin, r)[0]) for r in large_r]
    lim2 = trend(q2, large_r, "lim2")
    lim1_ok = all(s.passed for s in subs)
    lim1 = ConditionReport("lim1", lim1_ok, min(s.constant for s in subs), min_exponent, None,
                           {"subreports": subs})
    return ConditionReport("lim", lim1_ok and lim2.passed, min(lim1.constant, lim2.constant),
                           min_exponent, None, {"subreports": [lim1, lim2], "lim1": lim1, "lim2": lim2})


def inf_at_unit_radius(phi: GrowthFunction, xs) -> float:
    """inf_x phi(x, 1) over the sample set (hypothesis of the closure criterion)."""
    return float(np.min(phi(np.asarray(xs).reshape(len(xs), -1), 1.0)))


def measured_constants(phi: GrowthFunction, p: float, xs, rs=None) -> dict:
    """C_DC, C_NC, C_AI (of r^{d/p} phi), C_AD on a default sample set."""
    rs = DEFAULT_R_SAMPLES if rs is None else rs
    dc = check_doubling(phi, doubling_samples(xs, rs), cap=math.inf)
    nc = check_nearness(phi, nearness_samples(xs, rs[::4]), cap=math.inf)
    g = check_gdec(phi, p, monotone_samples(xs, rs[::2]), cap=math.inf)
    return {"C_DC": dc.constant, "C_NC": nc.constant, "C_AI": g.details["C_AI"],
            "C_AD": g.details["C_AD"]}
