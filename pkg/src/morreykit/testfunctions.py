"""Analytic test functions and their grid sampling.

Each spec is a small frozen dataclass with ``sample(lower, upper, h, p)``.
Only :class:`PowerSingularity` uses ``p``: in d = 1 its cells carry the exact
cell average of ``|f|^p`` (so ball integrals of ``|f|^p`` over cell-exact balls
are exact); in d = 2 the singular cell is evaluated at an offset of h/4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .expr import compile_expression
from .grid import GridFunction, sample


def _norm(points, center):
    pts = np.asarray(points, dtype=float).reshape(len(points), -1)
    return np.sqrt(np.sum((pts - np.asarray(center, dtype=float)) ** 2, axis=1))


@dataclass(frozen=True)
class Gaussian:
    amplitude: float = 1.0
    width: float = 1.0
    center: tuple = (0.0,)

    def __call__(self, points):
        return self.amplitude * np.exp(-((_norm(points, self.center) / self.width) ** 2))

    def sample(self, lower, upper, h, p=2.0) -> GridFunction:
        return sample(self, lower, upper, h)


@dataclass(frozen=True)
class Bump:
    """C-infinity bump ``a*exp(1 - 1/(1 - s^2))``, ``s = |x-c|/R``; max value ``a``."""

    center: tuple = (0.0,)
    radius: float = 1.0
    amplitude: float = 1.0

    def __call__(self, points):
        s2 = (_norm(points, self.center) / self.radius) ** 2
        out = np.zeros_like(s2)
        inside = s2 < 1
        out[inside] = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - s2[inside]))
        return out

    def sample(self, lower, upper, h, p=2.0) -> GridFunction:
        return sample(self, lower, upper, h)


@dataclass(frozen=True)
class Indicator:
    center: tuple = (0.0,)
    radius: float = 1.0
    amplitude: float = 1.0

    def __call__(self, points):
        return np.where(_norm(points, self.center) < self.radius, self.amplitude, 0.0)

    def sample(self, lower, upper, h, p=2.0) -> GridFunction:
        return sample(self, lower, upper, h)


@dataclass(frozen=True)
class PowerSingularity:
    """``|x - c|^exponent * chi_{B(c, radius)}``."""

    exponent: float
    radius: float = 1.0
    center: tuple = (0.0,)

    def __call__(self, points):
        r = _norm(points, self.center)
        with np.errstate(divide="ignore"):
            out = np.where(r < self.radius, r**self.exponent, 0.0)
        return out

    def sample(self, lower, upper, h, p=2.0) -> GridFunction:
        lower = np.atleast_1d(lower)
        if len(lower) == 1:
            return self._sample_1d(lower, upper, h, p)
        g = sample(self, lower, upper, h)
        vals = g.values.copy()
        bad = ~np.isfinite(vals)
        if np.any(bad):
            pts = g.cell_centers()[bad.ravel()] + 0.25 * h
            vals[bad] = self(pts)
        return g.with_values(vals)

    def _sample_1d(self, lower, upper, h, p):
        a = self.exponent * p
        if a <= -1:
            raise ValueError("|f|^p is not locally integrable")
        g = sample(lambda x: np.zeros(len(x)), lower, upper, h)
        c = g.axis_centers(0) - float(np.atleast_1d(self.center)[0])
        lo = np.clip(c - h / 2, -self.radius, self.radius)
        hi = np.clip(c + h / 2, -self.radius, self.radius)

        def prim(y):
            return np.sign(y) * np.abs(y) ** (a + 1) / (a + 1)

        avg = np.maximum(prim(hi) - prim(lo), 0.0) / h
        return g.with_values(avg ** (1.0 / p))


@dataclass(frozen=True)
class Expression:
    source: str

    def __call__(self, points):
        return compile_expression(self.source)(points)

    def sample(self, lower, upper, h, p=2.0) -> GridFunction:
        return sample(self, lower, upper, h)


def smooth_battery(n: int, rng: np.random.Generator, d: int = 1, amplitude: float = 1.0,
                   spread: float = 1.5, radius_range=(0.2, 1.5)) -> list:
    """``n`` random smooth compactly supported functions (sums of bumps)."""
    out = []
    for _ in range(n):
        k = int(rng.integers(1, 4))
        terms = []
        for _ in range(k):
            c = tuple(rng.uniform(-spread, spread, size=d))
            R = float(rng.uniform(*radius_range))
            a = float(rng.uniform(-amplitude, amplitude))
            terms.append(Bump(c, R, a))
        out.append(BumpSum(tuple(terms)))
    return out


@dataclass(frozen=True)
class BumpSum:
    terms: tuple

    def __call__(self, points):
        return sum(t(points) for t in self.terms)

    def sample(self, lower, upper, h, p=2.0) -> GridFunction:
        return sample(self, lower, upper, h)

    @property
    def max_amplitude(self) -> float:
        return sum(abs(t.amplitude) for t in self.terms)


def gaussian_lp_norm(p: float, d: int = 1) -> float:
    """``||exp(-|x|^2)||_{L^p(R^d)}`` in closed form."""
    return (math.pi / p) ** (d / (2 * p))
