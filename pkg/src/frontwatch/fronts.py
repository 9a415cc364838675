"""Front curves as graphs x2 = f(x1) over a window, and saddle detection.

A front pair is two level curves of the convected scalar, sampled as
graphs f+ and f- on m uniform x1 points in [a, b] with f- < f+ pointwise.
Graph values are kept continuous (unwrapped) across the x2 = 0 seam, so
they may lie slightly outside [0, 2*pi).

Two evolution routes exist and should agree for resolved runs: extraction
from the scalar field at each output time, and direct advection of the
graphs by df/dt = u2(x1, f) - (df/dx1) * u1(x1, f).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .errors import FrontBreakdownError, FrontCollapseError, FrontLostError
from .grid import BicubicSampler, RealField, TWO_PI, derivative, to_real, to_spectral
from .integrator import rk4_step


@dataclass(frozen=True)
class FrontSpec:
    """Which level curves to track and on what window.

    seed_plus / seed_minus pick the branch at the first extraction: either
    a constant x2 guess or a coarse polyline [(x1, x2), ...] interpolated
    over the window.  m defaults to 2 * n1 at extraction time.
    """

    level_plus: float
    level_minus: float
    a: float
    b: float
    seed_plus: float | np.ndarray = 0.0
    seed_minus: float | np.ndarray = 0.0
    m: int | None = None

    def __post_init__(self):
        if not (0.0 <= self.a < self.b < TWO_PI):
            raise ValueError(
                f"window must satisfy 0 <= a < b < 2*pi, got [{self.a}, {self.b}]"
            )
        if self.m is not None and self.m < 4:
            raise ValueError("m must be at least 4")

    def seed_values(self, which: str, x1: np.ndarray) -> np.ndarray:
        seed = self.seed_plus if which == "plus" else self.seed_minus
        if np.ndim(seed) == 0:
            return np.full_like(x1, float(seed))
        poly = np.asarray(seed, dtype=np.float64)
        if poly.ndim != 2 or poly.shape[1] != 2:
            raise ValueError("seed polyline must have shape (k, 2)")
        return np.interp(x1, poly[:, 0], poly[:, 1])


@dataclass(frozen=True)
class FrontGraphPair:
    """Sampled graphs of the two front curves at one time."""

    x1: np.ndarray
    f_plus: np.ndarray
    f_minus: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        x1 = np.asarray(self.x1, dtype=np.float64)
        fp = np.asarray(self.f_plus, dtype=np.float64)
        fm = np.asarray(self.f_minus, dtype=np.float64)
        if not (x1.shape == fp.shape == fm.shape) or x1.ndim != 1:
            raise ValueError("x1, f_plus, f_minus must be 1D arrays of equal length")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "f_plus", fp)
        object.__setattr__(self, "f_minus", fm)

    @property
    def a(self) -> float:
        return float(self.x1[0])

    @property
    def b(self) -> float:
        return float(self.x1[-1])

    @property
    def m(self) -> int:
        return self.x1.size

    def delta(self) -> np.ndarray:
        return self.f_plus - self.f_minus

    def ordered(self) -> bool:
        return bool(np.all(self.f_minus < self.f_plus))


def check_ordering(pair: FrontGraphPair) -> FrontGraphPair:
    """Raise FrontCollapseError (carrying the pair) unless f- < f+ everywhere."""
    gap = pair.delta()
    if np.all(gap > 0.0):
        return pair
    i = int(np.argmin(gap))
    raise FrontCollapseError(
        f"front ordering violated at t = {pair.t:.6g}: "
        f"f+ - f- = {gap[i]:.3e} at x1 = {pair.x1[i]:.6g}",
        pair=pair,
    )


def _column_crossings(col: np.ndarray, level: float, dx2: float) -> np.ndarray:
    """x2 roots of column values minus level, by linear sub-cell refinement.

    col holds n2 + 1 samples at x2 = j*dx2 including the wrapped endpoint.
    """
    d = col - level
    j = np.arange(d.size - 1)
    hit = (d[:-1] == 0.0) | (d[:-1] * d[1:] < 0.0)
    j = j[hit]
    denom = d[j] - d[j + 1]
    frac = np.where(denom != 0.0, d[j] / np.where(denom == 0.0, 1.0, denom), 0.0)
    return (j + frac) * dx2


def _nearest_branch(roots: np.ndarray, target: float) -> float:
    """Pick the root closest to target, allowing +-2*pi shifts (unwrap)."""
    shifted = np.concatenate([roots - TWO_PI, roots, roots + TWO_PI])
    return float(shifted[np.argmin(np.abs(shifted - target))])


def extract_front_pair(
    theta: RealField,
    spec: FrontSpec,
    prev: FrontGraphPair | None = None,
    *,
    t: float = 0.0,
    sampler: BicubicSampler | None = None,
) -> FrontGraphPair:
    """Locate both level curves by column scan with branch continuation.

    Each x1 sample gets the column of theta values on the grid's x2 nodes
    (bicubic in x1), crossings of each level are refined linearly within
    the cell, and the crossing nearest the previous graph (or the seed at
    the first call) is kept.
    """
    g = theta.grid
    m = spec.m if spec.m is not None else 2 * g.n1
    x1 = np.linspace(spec.a, spec.b, m)
    if sampler is None:
        sampler = BicubicSampler(theta)

    x2_nodes = np.arange(g.n2) * g.dx2
    pts = np.stack(
        [np.repeat(x1, g.n2), np.tile(x2_nodes, m)], axis=-1
    )
    cols = sampler(pts).reshape(m, g.n2)
    cols = np.hstack([cols, cols[:, :1]])  # wrapped endpoint closes the seam

    out = {}
    for which, level in (("plus", spec.level_plus), ("minus", spec.level_minus)):
        if prev is not None:
            prev_f = prev.f_plus if which == "plus" else prev.f_minus
            targets = np.interp(x1, prev.x1, prev_f)
        else:
            targets = spec.seed_values(which, x1)
        f = np.empty(m)
        for i in range(m):
            roots = _column_crossings(cols[i], level, g.dx2)
            if roots.size == 0:
                raise FrontLostError(
                    f"level {level:.6g} not crossed at x1 = {x1[i]:.6g} (t = {t:.6g})"
                )
            f[i] = _nearest_branch(roots, targets[i])
        out[which] = f

    return check_ordering(FrontGraphPair(x1, out["plus"], out["minus"], t=t))


def advect_front_pair(
    pair: FrontGraphPair,
    u,
    dt: float,
    *,
    t0: float | None = None,
    max_slope: float = 1e3,
) -> FrontGraphPair:
    """Advance both graphs one RK4 step of df/dt = u2 - (df/dx1) u1.

    The x1 slope uses centered differences (one-sided at the window ends).
    u is a sampler u(points, t) -> (P, 2).  Non-finite values or slopes
    beyond max_slope raise FrontBreakdownError (graph representability
    lost); an ordering violation raises FrontCollapseError.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    t0 = pair.t if t0 is None else t0
    x1 = pair.x1
    y0 = np.stack([pair.f_plus, pair.f_minus])

    def rhs(t, y):
        slope = np.gradient(y, x1, axis=1, edge_order=2)
        pts = np.stack(
            [np.broadcast_to(x1, y.shape).ravel(), y.ravel()], axis=-1
        )
        uu = u(pts, t).reshape(y.shape + (2,))
        return uu[..., 1] - slope * uu[..., 0]

    y1 = rk4_step(rhs, t0, y0, dt)
    new = FrontGraphPair(x1, y1[0], y1[1], t=t0 + dt)
    if not np.isfinite(y1).all():
        raise FrontBreakdownError(f"non-finite front graph at t = {new.t:.6g}")
    slope = np.gradient(y1, x1, axis=1, edge_order=2)
    if np.abs(slope).max() > max_slope:
        raise FrontBreakdownError(
            f"front slope {np.abs(slope).max():.3g} exceeds {max_slope:.3g} "
            f"at t = {new.t:.6g}: graph representability lost"
        )
    return check_ordering(new)


@dataclass(frozen=True)
class ThicknessReport:
    """Gap statistics of a pair over a sub-window [alpha, beta]."""

    alpha: float
    beta: float
    delta_min: float
    delta_alpha: float
    delta_beta: float
    area: float


def thickness_and_area(
    pair: FrontGraphPair, window: tuple[float, float] | None = None
) -> ThicknessReport:
    """Minimum gap and trapezoid area of f+ - f- over a sub-window.

    Window endpoints need not be sample points; graph values there are
    linearly interpolated, which keeps the quadrature exact for affine
    gaps.  Accepts collapsed pairs (the gap may be zero or negative).
    """
    alpha, beta = (pair.a, pair.b) if window is None else map(float, window)
    if not (pair.a - 1e-12 <= alpha < beta <= pair.b + 1e-12):
        raise ValueError(
            f"window [{alpha}, {beta}] not inside samples [{pair.a}, {pair.b}]"
        )
    x = pair.x1
    d = pair.delta()
    inside = (x > alpha) & (x < beta)
    xs = np.concatenate([[alpha], x[inside], [beta]])
    ds = np.concatenate([[np.interp(alpha, x, d)], d[inside], [np.interp(beta, x, d)]])
    return ThicknessReport(
        alpha=alpha,
        beta=beta,
        delta_min=float(ds.min()),
        delta_alpha=float(ds[0]),
        delta_beta=float(ds[-1]),
        area=float(trapezoid(ds, xs)),
    )


@dataclass(frozen=True)
class SaddlePoint:
    x1: float
    x2: float
    value: float
    hess_det: float


@dataclass(frozen=True)
class SaddleReport:
    points: tuple[SaddlePoint, ...]

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


def _neighborhood_minmax(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lo = a.copy()
    hi = a.copy()
    for s1 in (-1, 0, 1):
        for s2 in (-1, 0, 1):
            r = np.roll(np.roll(a, s1, axis=0), s2, axis=1)
            lo = np.minimum(lo, r)
            hi = np.maximum(hi, r)
    return lo, hi


def find_saddles(f: RealField) -> SaddleReport:
    """Heuristic hyperbolic-saddle locator on the grid.

    Flags grid points where both spectral first derivatives change sign
    within the 3x3 neighborhood and the spectral Hessian determinant is
    negative, refines each by one Newton step on the gradient, and
    deduplicates hits within one grid cell of each other.
    """
    g = f.grid
    F = to_spectral(f)
    fx = to_real(derivative(F, "dx1")).values
    fy = to_real(derivative(F, "dx2")).values
    fxx = to_real(derivative(derivative(F, "dx1"), "dx1")).values
    fyy = to_real(derivative(derivative(F, "dx2"), "dx2")).values
    fxy = to_real(derivative(derivative(F, "dx1"), "dx2")).values
    det = fxx * fyy - fxy**2

    lox, hix = _neighborhood_minmax(fx)
    loy, hiy = _neighborhood_minmax(fy)
    cand = (
        (lox <= 0.0) & (hix >= 0.0) & (lox < hix)
        & (loy <= 0.0) & (hiy >= 0.0) & (loy < hiy)
        & (det < 0.0)
    )
    idx = np.argwhere(cand)
    if idx.size == 0:
        return SaddleReport(points=())

    sampler = BicubicSampler(f)
    cell = max(g.dx1, g.dx2)
    refined = []
    for i, j in idx:
        x = np.array([i * g.dx1, j * g.dx2])
        grad = np.array([fx[i, j], fy[i, j]])
        hess = np.array([[fxx[i, j], fxy[i, j]], [fxy[i, j], fyy[i, j]]])
        if abs(det[i, j]) > 1e-14:
            step = -np.linalg.solve(hess, grad)
            norm = np.hypot(*step)
            if norm > 2 * cell:  # guard against near-singular Hessians
                step *= 2 * cell / norm
            x = x + step
        refined.append((float(np.hypot(*grad)), x % TWO_PI, float(det[i, j])))

    # Candidates flagged around one saddle refine to within a couple of
    # cells of each other; keep the best-converged (smallest gradient) one.
    refined.sort(key=lambda r: (r[0], r[1][0], r[1][1]))
    kept: list[tuple[np.ndarray, float]] = []
    for _, x, d in refined:
        dup = False
        for xk, _ in kept:
            sep = (x - xk + np.pi) % TWO_PI - np.pi
            if np.hypot(*sep) <= 2 * cell:
                dup = True
                break
        if not dup:
            kept.append((x, d))

    kept.sort(key=lambda r: (r[0][0], r[0][1]))
    values = sampler(np.array([x for x, _ in kept]))
    pts = tuple(
        SaddlePoint(x1=float(x[0]), x2=float(x[1]), value=float(v), hess_det=d)
        for (x, d), v in zip(kept, values)
    )
    return SaddleReport(points=pts)
