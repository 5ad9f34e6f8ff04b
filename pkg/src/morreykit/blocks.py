"""[phi,q]-blocks, the 3^n covering and single-scale block decompositions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Ball, BallFamily, BallSums, GridFunction, ball_volume, default_family, integrate_product
from .growth import GrowthFunction
from .morrey import morrey_norm


class BlockError(ValueError):
    pass


def conjugate(q: float) -> float:
    """q' with 1/q + 1/q' = 1 (q = inf gives 1)."""
    if q <= 1:
        raise BlockError("exponent must exceed 1")
    return 1.0 if math.isinf(q) else q / (q - 1)


def lq_norm(f: GridFunction, q: float) -> float:
    return f.max_abs() if math.isinf(q) else f.lp_norm(q)


def block_bound(ball: Ball, phi: GrowthFunction, q: float) -> float:
    """1 / (|B|^{1/q'} phi(B))."""
    return 1.0 / (ball.volume ** (1.0 / conjugate(q)) * phi.at_ball(ball))


@dataclass(frozen=True)
class Block:
    b: GridFunction
    ball: Ball
    q: float

    @property
    def norm(self) -> float:
        return lq_norm(self.b, self.q)


@dataclass
class BlockCheck:
    passed: bool
    slack: float
    reason: str = ""


def _support_inside(b: GridFunction, ball: Ball) -> bool:
    nz = (b.values != 0).ravel()
    if not np.any(nz):
        return True
    return bool(np.all(ball.contains(b.cell_centers()[nz])))


def validate_block(b: GridFunction, ball: Ball, phi: GrowthFunction, q: float, rtol: float = 1e-6) -> BlockCheck:
    """Support in ``ball`` and ||b||_q <= (1 + rtol) / (|B|^{1/q'} phi(B)).

    ``slack`` is the relative margin 1 - ||b||_q / bound (0 in the equality case).
    """
    bound = block_bound(ball, phi, q)
    slack = 1.0 - lq_norm(b, q) / bound
    if not _support_inside(b, ball):
        return BlockCheck(False, slack, "support violation")
    if slack < -rtol:
        return BlockCheck(False, slack, "size violation")
    return BlockCheck(True, slack)


def indicator_block(ball: Ball, phi: GrowthFunction, lower, upper, h: float) -> GridFunction:
    """chi_B / (|B| phi(B)), the equality case of the size condition."""
    from .grid import sample

    c = 1.0 / (ball.volume * phi.at_ball(ball))
    return sample(lambda x: c * ball.contains(x).astype(float), lower, upper, h)


# ---------------------------------------------------------------------------
# covering


@dataclass
class Covering:
    n: int
    d: int
    base_centers: np.ndarray
    base_radius: float
    centers: np.ndarray
    radius: float
    overlap: int
    covers: bool
    window: tuple = field(default=((), ()))

    def balls(self):
        return [Ball(tuple(c), self.radius) for c in self.centers]


def _lattice_points(lower, upper, step, pad):
    axes = [np.arange(math.ceil((lo - pad) / step - 1e-9), math.floor((up + pad) / step + 1e-9) + 1) * step
            for lo, up in zip(lower, upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def overlap_counts(centers: np.ndarray, radius: float, points: np.ndarray) -> np.ndarray:
    """Number of open balls B(c, radius) containing each point."""
    out = np.zeros(len(points), dtype=np.int64)
    for c in centers:
        out += np.sum((points - c) ** 2, axis=1) < radius * radius
    return out


def build_covering(n: int, lower, upper, scan_points: int = 997) -> Covering:
    """Balls S_i^n = 3 B_i^{n-1} = B(3^{n-1} m, 3^n sqrt(d)) meeting the window.

    The overlap bound is measured by scanning a generic (irrationally offset)
    point set of the window.
    """
    lower = tuple(float(v) for v in np.atleast_1d(lower))
    upper = tuple(float(v) for v in np.atleast_1d(upper))
    d = len(lower)
    R = 3.0**n * math.sqrt(d)
    centers = _lattice_points(lower, upper, 3.0 ** (n - 1), R)
    base = _lattice_points(lower, upper, 3.0**n, R)
    per_axis = scan_points if d == 1 else int(round(math.sqrt(scan_points)))
    axes = [lo + (up - lo) * ((np.arange(per_axis) + 0.5 / math.sqrt(2)) / per_axis) for lo, up in zip(lower, upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    counts = overlap_counts(centers, R, pts)
    return Covering(n, d, base, R / 1.0, centers, R, int(counts.max()), bool(counts.min() >= 1), (lower, upper))


# ---------------------------------------------------------------------------
# decompositions


@dataclass
class BlockDecomposition:
    terms: list  # (lambda_j, Block)
    n: int
    grid: GridFunction  # the decomposed function (fixes the reconstruction grid)

    @property
    def coefficient_sum(self) -> float:
        return float(sum(lam for lam, _ in self.terms))

    def reconstruct(self) -> GridFunction:
        out = np.zeros(self.grid.shape)
        for lam, blk in self.terms:
            out += lam * blk.b.embed(self.grid.lower, self.grid.upper).values
        return self.grid.with_values(out)


def _crop_box(f: GridFunction, ball: Ball):
    """Grid-aligned sub-box of ``f``'s box containing the ball."""
    lo, up = [], []
    for a in range(f.d):
        i0 = max(0, math.floor((ball.center[a] - ball.radius - f.lower[a]) / f.h))
        i1 = min(f.shape[a], math.ceil((ball.center[a] + ball.radius - f.lower[a]) / f.h))
        lo.append(f.lower[a] + i0 * f.h)
        up.append(f.lower[a] + max(i1, i0 + 1) * f.h)
    return tuple(lo), tuple(up)


def decompose(f: GridFunction, phi: GrowthFunction, q: float, n: int, window=None) -> BlockDecomposition:
    """Single-scale decomposition f = sum lambda_i b_i over the S_i^n covering.

    psi_i = w_i / sum_k w_k with tents w_i = (R - |x - c_i|)_+; b_i = f psi_i / nu_i
    and lambda_i = nu_i = ||f psi_i||_q |S_i|^{1/q'} phi(S_i).
    """
    lower, upper = (f.lower, f.upper) if window is None else (tuple(np.atleast_1d(window[0])), tuple(np.atleast_1d(window[1])))
    pts = f.cell_centers()
    vals = f.values.ravel()
    nz = vals != 0
    inside = np.all((pts >= np.asarray(lower)) & (pts <= np.asarray(upper)), axis=1)
    if np.any(nz & ~inside):
        raise BlockError("support escapes window")
    cov = build_covering(n, lower, upper)
    R = cov.radius
    qp = conjugate(q)
    idx = np.nonzero(nz)[0]
    P = pts[idx]
    weights = []
    total = np.zeros(len(idx))
    for c in cov.centers:
        w = np.clip(R - np.sqrt(np.sum((P - c) ** 2, axis=1)), 0.0, None)
        weights.append(w)
        total += w
    if np.any(total <= 0):
        raise BlockError("covering does not reach the support")
    terms = []
    for c, w in zip(cov.centers, weights):
        if not np.any(w > 0):
            continue
        ball = Ball(tuple(float(v) for v in c), R)
        piece = np.zeros(len(vals))
        piece[idx] = vals[idx] * w / total
        if not np.any(piece != 0):
            continue
        lo, up = _crop_box(f, ball)
        part = f.with_values(piece.reshape(f.shape)).embed(lo, up)
        nu = lq_norm(part, q) * ball.volume ** (1.0 / qp) * phi.at_ball(ball)
        terms.append((nu, Block(part * (1.0 / nu), ball, q)))
    return BlockDecomposition(terms, n, f)


# ---------------------------------------------------------------------------
# suites


def _norm_with_balls(g: GridFunction, phi, p: float, family: BallFamily, balls) -> float:
    """||g||_{L_{p,phi}} over ``family`` enlarged by ``balls``."""
    best = morrey_norm(g, phi, p, family)
    if balls:
        sums = BallSums(g, p)
        for ball in balls:
            m = sums.means(np.asarray([ball.center]), ball.radius)[0]
            best = max(best, float(m / phi.at_ball(ball)))
    return best


@dataclass
class PairingReport:
    ratios: list
    violations: int
    tol: float

    @property
    def max_ratio(self) -> float:
        return max(self.ratios) if self.ratios else 0.0

    @property
    def passed(self) -> bool:
        return self.violations == 0


def pairing_bound_suite(blocks, battery, phi: GrowthFunction, q: float, family: BallFamily | None = None,
                        tol: float = 1e-3) -> PairingReport:
    """|int b g| <= (1 + tol) ||g||_{L_{q',phi}} for every (block, g) pair.

    The norm of g is taken over ``family`` plus the blocks' own balls, so the
    sup in the bound includes the ball used by the Holder step.
    """
    qp = conjugate(q)
    ratios, bad = [], 0
    for blk in blocks:
        for g in battery:
            fam = default_family(g) if family is None else family
            lhs = abs(integrate_product(blk.b, g))
            rhs = _norm_with_balls(g, phi, qp, fam, [blk.ball])
            if rhs == 0:
                ratio = 0.0 if lhs == 0 else math.inf
            else:
                ratio = lhs / rhs
            ratios.append(ratio)
            if ratio > 1 + tol:
                bad += 1
    return PairingReport(ratios, bad, tol)


@dataclass
class L1locReport:
    lhs: float
    holder_chain: float
    constant: float
    bound: float
    passed: bool


def partial_sum_l1loc(decomp: BlockDecomposition, ball: Ball, phi: GrowthFunction,
                      constant_cap: float | None = None) -> L1locReport:
    """int_B sum lambda_j |b_j| <= sum lambda_j |B cap B_j|^{1/p}/(|B_j|^{1/p} phi(B_j)) <= C sum lambda_j / phi(B).

    p is the conjugate exponent of the blocks' q; ``constant`` is the measured
    C = max_j phi(B) |B cap B_j|^{1/p} / (|B_j|^{1/p} phi(B_j)), checked
    against ``constant_cap`` when given.
    """
    if not decomp.terms:
        return L1locReport(0.0, 0.0, 0.0, 0.0, True)
    grid = decomp.grid
    mask = ball.contains(grid.cell_centers()).reshape(grid.shape)
    lhs, chain, C = 0.0, 0.0, 0.0
    phiB = phi.at_ball(ball)
    for lam, blk in decomp.terms:
        p = conjugate(blk.q)
        bj = blk.b.embed(grid.lower, grid.upper)
        lhs += lam * float(np.sum(np.abs(bj.values) * mask) * grid.cell_volume)
        inter = float(np.sum(mask & ball_mask(grid, blk.ball)) * grid.cell_volume)
        beta = inter ** (1.0 / p) / (blk.ball.volume ** (1.0 / p) * phi.at_ball(blk.ball))
        chain += lam * beta
        C = max(C, beta * phiB)
    total = decomp.coefficient_sum
    bound = C * total / phiB
    ok = lhs <= chain * (1 + 1e-9) and chain <= bound * (1 + 1e-9)
    if constant_cap is not None:
        ok = ok and C <= constant_cap
    return L1locReport(lhs, chain, C, bound, ok)


def ball_mask(grid: GridFunction, ball: Ball) -> np.ndarray:
    return ball.contains(grid.cell_centers()).reshape(grid.shape)


def block_norm_upper_bound(f: GridFunction, phi: GrowthFunction, q: float, scales=(-1, 0, 1)):
    """min over candidate scales of the coefficient sum (an upper bound of ||f||_{B^{[phi,q]}})."""
    best = (math.inf, None)
    for n in scales:
        try:
            dec = decompose(f, phi, q, n)
        except BlockError:
            continue
        if dec.coefficient_sum < best[0]:
            best = (dec.coefficient_sum, n)
    return best
