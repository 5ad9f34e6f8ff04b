"""Grid functions, balls and ball quadrature.

A :class:`GridFunction` stores samples at the cell centers of a uniform grid
over an axis-aligned box and is extended by zero outside the box.  All ball
averages use the cell-indicator rule: a cell contributes iff its center lies
in the (open) ball, and the sum is divided by the analytic ball volume.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np

# volume of the unit ball, d = 1, 2
UNIT_BALL_VOLUME = {1: 2.0, 2: math.pi}

_CHUNK = 1 << 17
_THREADS = 1


class GridError(ValueError):
    """Raised for malformed grids, balls or families."""


def set_threads(n: int) -> None:
    """Set the worker count used for ball-mean evaluation."""
    global _THREADS
    _THREADS = max(1, int(n))


def get_threads() -> int:
    return _THREADS


def ball_volume(d: int, r):
    return UNIT_BALL_VOLUME[d] * np.asarray(r, dtype=float) ** d


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise GridError(f"ball radius must be positive, got {self.radius!r}")
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))

    @property
    def d(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        return float(ball_volume(self.d, self.radius))

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, self.d)
        dist2 = np.sum((pts - np.asarray(self.center)) ** 2, axis=1)
        return dist2 < self.radius**2

    def dilate(self, factor: float) -> "Ball":
        return Ball(self.center, self.radius * factor)


@dataclass(frozen=True)
class GridFunction:
    """Samples at cell centers of ``[lower, upper]`` with spacing ``h``."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    h: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "h", float(self.h))
        d = len(lower)
        if d not in (1, 2) or len(upper) != d:
            raise GridError("only d = 1 or d = 2 boxes are supported")
        if not self.h > 0:
            raise GridError("grid spacing must be positive")
        shape = grid_shape(lower, upper, self.h)
        vals = np.array(self.values, dtype=float)
        if vals.shape != shape:
            raise GridError(f"values have shape {vals.shape}, grid needs {shape}")
        if not np.all(np.isfinite(vals)):
            raise GridError("grid samples must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def d(self) -> int:
        return len(self.lower)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    def axis_centers(self, axis: int) -> np.ndarray:
        n = self.shape[axis]
        return self.lower[axis] + (np.arange(n) + 0.5) * self.h

    def cell_centers(self) -> np.ndarray:
        """All cell centers, row-major, shape ``(N, d)``."""
        axes = [self.axis_centers(a) for a in range(self.d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.lower, self.upper, self.h, values)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c: float) -> "GridFunction":
        return self.with_values(self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self) -> "GridFunction":
        return self.with_values(-self.values)

    def lp_norm(self, p: float) -> float:
        if math.isinf(p):
            return float(np.max(np.abs(self.values))) if self.values.size else 0.0
        return float(np.sum(np.abs(self.values) ** p) * self.cell_volume) ** (1.0 / p)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def support_radius(self) -> float:
        """Smallest R with every nonzero cell center in the closed ball B(0, R)."""
        nz = self.values != 0
        if not np.any(nz):
            return 0.0
        pts = self.cell_centers()[nz.ravel()]
        return float(np.max(np.sqrt(np.sum(pts**2, axis=1))))

    def mask_ball(self, ball: Ball) -> "GridFunction":
        """``f * chi_B`` with the cell-indicator rule."""
        inside = ball.contains(self.cell_centers()).reshape(self.shape)
        return self.with_values(np.where(inside, self.values, 0.0))

    def embed(self, lower, upper) -> "GridFunction":
        """Zero-extend (or crop) onto an aligned box with the same spacing."""
        lower = tuple(float(v) for v in np.atleast_1d(lower))
        upper = tuple(float(v) for v in np.atleast_1d(upper))
        shape = grid_shape(lower, upper, self.h)
        out = np.zeros(shape)
        src, dst = [], []
        for a in range(self.d):
            off = (self.lower[a] - lower[a]) / self.h
            k = int(round(off))
            if abs(off - k) > 1e-6:
                raise GridError("boxes are not aligned to a common grid")
            lo = max(0, k)
            hi = min(shape[a], k + self.shape[a])
            if hi <= lo:
                return GridFunction(lower, upper, self.h, out)
            dst.append(slice(lo, hi))
            src.append(slice(lo - k, hi - k))
        out[tuple(dst)] = self.values[tuple(src)]
        return GridFunction(lower, upper, self.h, out)

    def boundary_max(self) -> float:
        """Largest |value| on the outermost layer of cells."""
        v = np.abs(self.values)
        parts = [v[0], v[-1]] if self.d == 1 else [v[0, :], v[-1, :], v[:, 0], v[:, -1]]
        return float(max(np.max(np.atleast_1d(x)) for x in parts))


def grid_shape(lower: Sequence[float], upper: Sequence[float], h: float) -> tuple[int, ...]:
    shape = []
    for lo, up in zip(lower, upper):
        n = (up - lo) / h
        k = int(round(n))
        if k < 1 or abs(n - k) > 1e-9 * max(1.0, abs(n)):
            raise GridError(f"box side {up - lo!r} is not an integer multiple of h={h!r}")
        shape.append(k)
    return tuple(shape)


def _check_same_grid(f: GridFunction, g: GridFunction) -> None:
    if f.lower != g.lower or f.upper != g.upper or f.h != g.h:
        raise GridError("grid functions live on different grids")


def sample(fn: Callable[[np.ndarray], np.ndarray], lower, upper, h: float) -> GridFunction:
    """Sample ``fn`` at cell centers; ``fn`` receives points of shape ``(N, d)``."""
    lower = tuple(float(v) for v in np.atleast_1d(lower))
    upper = tuple(float(v) for v in np.atleast_1d(upper))
    shape = grid_shape(lower, upper, h)
    axes = [lower[a] + (np.arange(shape[a]) + 0.5) * h for a in range(len(shape))]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = np.asarray(fn(pts), dtype=float).reshape(shape)
    return GridFunction(lower, upper, h, vals)


def zeros(lower, upper, h: float) -> GridFunction:
    lower = tuple(np.atleast_1d(lower))
    upper = tuple(np.atleast_1d(upper))
    return GridFunction(lower, upper, h, np.zeros(grid_shape(lower, upper, h)))


# ---------------------------------------------------------------------------
# ball quadrature


def _index_range(x, r, lower: float, h: float, n: int):
    """Inclusive index range of cells whose centers satisfy |c - x| < r."""
    rr = r - 1e-9 * h
    lo = np.floor((x - rr - lower) / h - 0.5).astype(np.int64) + 1
    hi = np.ceil((x + rr - lower) / h - 0.5).astype(np.int64) - 1
    return np.clip(lo, 0, n), np.clip(hi, -1, n - 1)


class BallSums:
    """Prefix sums of ``|f|^p h^d`` answering ball integrals in O(1) (d=1)
    or O(r/h) (d=2) per ball."""

    def __init__(self, f: GridFunction, p: float):
        if p < 1:
            raise GridError("invalid exponent: p must be >= 1")
        self.f = f
        self.p = float(p)
        w = np.abs(f.values) ** self.p * f.cell_volume
        if f.d == 1:
            self.cum = np.concatenate([[0.0], np.cumsum(w)])
        else:
            self.cum = np.concatenate([np.zeros((w.shape[0], 1)), np.cumsum(w, axis=1)], axis=1)

    def integrals(self, centers: np.ndarray, r: float) -> np.ndarray:
        """``int_B |f|^p`` for balls ``B(c, r)``, one per row of ``centers``."""
        centers = np.asarray(centers, dtype=float).reshape(-1, self.f.d)
        m = len(centers)
        if m <= _CHUNK:
            return self._integrals(centers, r)
        chunks = [centers[i : i + _CHUNK] for i in range(0, m, _CHUNK)]
        if _THREADS > 1:
            with ThreadPoolExecutor(_THREADS) as ex:
                parts = list(ex.map(lambda c: self._integrals(c, r), chunks))
        else:
            parts = [self._integrals(c, r) for c in chunks]
        return np.concatenate(parts)

    def _integrals(self, centers: np.ndarray, r: float) -> np.ndarray:
        f = self.f
        if f.d == 1:
            n = f.shape[0]
            lo, hi = _index_range(centers[:, 0], r, f.lower[0], f.h, n)
            out = self.cum[hi + 1] - self.cum[np.minimum(lo, hi + 1)]
            return np.maximum(out, 0.0)
        n0, n1 = f.shape
        j_lo, j_hi = _index_range(centers[:, 0], r, f.lower[0], f.h, n0)
        out = np.zeros(len(centers))
        nrows = int(np.max(j_hi - j_lo + 1, initial=0))
        rr = r - 1e-9 * f.h
        for k in range(nrows):
            j = j_lo + k
            ok = j <= j_hi
            if not np.any(ok):
                continue
            jj = j[ok]
            dx = f.lower[0] + (jj + 0.5) * f.h - centers[ok, 0]
            half = np.sqrt(np.maximum(rr * rr - dx * dx, 0.0))
            lo, hi = _index_range(centers[ok, 1], half + 1e-9 * f.h, f.lower[1], f.h, n1)
            hi = np.where(half > 0, hi, lo - 1)
            seg = self.cum[jj, hi + 1] - self.cum[jj, np.minimum(lo, hi + 1)]
            out[ok] += np.maximum(seg, 0.0)
        return out

    def means(self, centers: np.ndarray, r: float) -> np.ndarray:
        """``M_p(f, B(c, r))`` for each center."""
        vol = float(ball_volume(self.f.d, r))
        return (self.integrals(centers, r) / vol) ** (1.0 / self.p)


def ball_mean_p(f: GridFunction, ball: Ball, p: float) -> float:
    """p-th power mean of |f| over ``ball`` (cell-indicator quadrature)."""
    if p < 1:
        raise GridError("invalid exponent: p must be >= 1")
    if ball.d != f.d:
        raise GridError("ball and grid dimensions differ")
    if ball.radius < f.h / 2:
        raise GridError("ball under-resolved: radius < h/2")
    return float(BallSums(f, p).means(np.asarray([ball.center]), ball.radius)[0])


def integrate_product(f: GridFunction, g: GridFunction) -> float:
    """Riemann sum of ``f*g`` over the intersection of the two boxes."""
    if f.d != g.d:
        raise GridError("mismatched dimensions")
    if abs(f.h - g.h) > 1e-12 * f.h:
        raise GridError("grid spacings differ")
    lower = tuple(max(a, b) for a, b in zip(f.lower, g.lower))
    upper = tuple(min(a, b) for a, b in zip(f.upper, g.upper))
    if any(u <= l for l, u in zip(lower, upper)):
        return 0.0
    fv = f.embed(lower, upper).values
    gv = g.embed(lower, upper).values
    return float(np.sum(fv * gv) * f.cell_volume)


# ---------------------------------------------------------------------------
# center lattices and ball families


def lattice(lower, upper, spacing: float, pad: float = 0.0) -> np.ndarray:
    """Origin-anchored lattice points ``j*spacing`` inside the padded box."""
    axes = []
    for lo, up in zip(lower, upper):
        j0 = math.ceil((lo - pad) / spacing - 1e-9)
        j1 = math.floor((up + pad) / spacing + 1e-9)
        axes.append(np.arange(j0, j1 + 1) * spacing)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def center_spacing(r: float, h: float, kappa: float) -> float:
    """Lattice spacing for radius ``r``: a multiple of h/2 close to ``kappa*r``."""
    return 0.5 * h * max(1, int(math.floor(kappa * r / (0.5 * h) + 1e-9)))


@dataclass(frozen=True)
class BallFamily:
    """Finite multiscale surrogate for "all balls": a radius ladder and, per
    radius, a lattice of centers."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    h: float
    radii: np.ndarray
    stride_rule: str = "proportional"
    kappa: float = 0.25

    @property
    def d(self) -> int:
        return len(self.lower)

    def centers(self, r: float) -> np.ndarray:
        if self.stride_rule == "dense":
            shape = grid_shape(self.lower, self.upper, self.h)
            axes = [self.lower[a] + (np.arange(shape[a]) + 0.5) * self.h for a in range(self.d)]
            mesh = np.meshgrid(*axes, indexing="ij")
            return np.stack([m.ravel() for m in mesh], axis=1)
        if self.stride_rule == "half":
            return lattice(self.lower, self.upper, 0.5 * self.h)
        return lattice(self.lower, self.upper, center_spacing(r, self.h, self.kappa))

    def __iter__(self) -> Iterator[tuple[float, np.ndarray]]:
        for r in self.radii:
            yield float(r), self.centers(float(r))

    def __len__(self) -> int:
        return int(sum(len(c) for _, c in self))


def radius_ladder(r_min: float, r_max: float, rho: float) -> np.ndarray:
    if not 1 < rho <= 2:
        raise GridError("ladder ratio must lie in (1, 2]")
    if r_max < r_min * (1 - 1e-12):
        raise GridError("empty radius ladder")
    k = int(math.floor(math.log(r_max / r_min) / math.log(rho) + 1e-9))
    return r_min * rho ** np.arange(k + 1)


def make_ball_family(lower, upper, h: float, r_min: float, r_max: float,
                     rho: float = 2.0, stride_rule: str = "proportional",
                     kappa: float = 0.25) -> BallFamily:
    lower = tuple(float(v) for v in np.atleast_1d(lower))
    upper = tuple(float(v) for v in np.atleast_1d(upper))
    if r_min < h * (1 - 1e-12):
        raise GridError("r_min must be at least h")
    if stride_rule not in ("dense", "half", "proportional"):
        raise GridError(f"unknown stride rule {stride_rule!r}")
    if stride_rule == "proportional" and not 0 < kappa <= 1:
        raise GridError("kappa must lie in (0, 1]")
    diam = math.sqrt(sum((u - l) ** 2 for l, u in zip(lower, upper)))
    if r_max > diam * (1 + 1e-12):
        raise GridError("r_max exceeds the diameter of the padded domain")
    radii = radius_ladder(r_min, r_max, rho)
    return BallFamily(lower, upper, float(h), radii, stride_rule, float(kappa))


def default_family(f: GridFunction, rho: float = 2.0, kappa: float = 0.25) -> BallFamily:
    """Ladder from h to the box diameter over the box of ``f``."""
    diam = math.sqrt(sum((u - l) ** 2 for l, u in zip(f.lower, f.upper)))
    return make_ball_family(f.lower, f.upper, f.h, f.h, diam, rho, "proportional", kappa)


# ---------------------------------------------------------------------------
# text format


def save_grid(f: GridFunction, path) -> None:
    """Write ``f`` in the columnar text format (bit-exact via ``repr``)."""
    lines = [
        f"d {f.d}",
        "lower " + " ".join(repr(v) for v in f.lower),
        "upper " + " ".join(repr(v) for v in f.upper),
        f"h {f.h!r}",
    ]
    lines.extend(repr(float(v)) for v in f.values.ravel())
    Path(path).write_text("\n".join(lines) + "\n")


def load_grid(path) -> GridFunction:
    text = Path(path).read_text().splitlines()
    header = {}
    for line in text[:4]:
        key, _, rest = line.partition(" ")
        header[key] = rest.split()
    try:
        d = int(header["d"][0])
        lower = tuple(float(v) for v in header["lower"])
        upper = tuple(float(v) for v in header["upper"])
        h = float(header["h"][0])
    except (KeyError, IndexError, ValueError) as exc:
        raise GridError(f"malformed grid file header in {path}") from exc
    if len(lower) != d or len(upper) != d:
        raise GridError("header dimension mismatch")
    shape = grid_shape(lower, upper, h)
    vals = np.array([float(v) for v in text[4:] if v.strip()])
    if vals.size != int(np.prod(shape)):
        raise GridError(f"expected {int(np.prod(shape))} samples, found {vals.size}")
    return GridFunction(lower, upper, h, vals.reshape(shape))
