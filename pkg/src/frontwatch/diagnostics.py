"""All scalar criteria: strip sup-speed, cumulative integrals, the front
area-rate identity, the curve kinematics identity, the shrinking-window
consistency monitor, BKM-type sup norms and the trajectory collision bound.

Samplers follow one convention throughout: u(points, t) -> (P, 2) and
psi(points, t) -> (P,) with points of shape (P, 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .errors import FrontCollapseError
from .fronts import FrontGraphPair, thickness_and_area
from .grid import VectorField, derivative, to_real, to_spectral
from .models import ModelState


# ---------------------------------------------------------------------------
# Strip sup-speed (controlled velocity growth numerator)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StripSupResult:
    """Max |u| over a deterministic lattice filling the front strip.

    The value is a certified lower bound on the true sup; the lattice
    spacings actually used are recorded alongside.
    """

    value: float
    n_x1: int
    n_vert: int
    dx1_lattice: float
    dx2_lattice_max: float


def strip_sup_speed(
    u,
    pair: FrontGraphPair,
    *,
    refine: int = 2,
    dx: float | None = None,
    t: float | None = None,
) -> StripSupResult:
    """Max speed over the strip between the curves at the pair's time.

    The lattice has m*refine columns; each column holds max(4, refine *
    ceil(delta_max/dx)) points spanning f- to f+ inclusive, so both curve
    points are sampled.  dx defaults to the sampler's .dx attribute when
    present, else to the x1 sample spacing.
    """
    if refine < 1:
        raise ValueError("refine must be >= 1")
    gap = pair.delta()
    if np.any(gap <= 0.0):
        raise FrontCollapseError(
            f"strip is collapsed at t = {pair.t:.6g}", pair=pair
        )
    if dx is None:
        dx = getattr(u, "dx", None)
    if dx is None:
        dx = (pair.b - pair.a) / max(pair.m - 1, 1)
    t = pair.t if t is None else t

    n_x1 = pair.m * refine
    x1 = np.linspace(pair.a, pair.b, n_x1)
    fp = np.interp(x1, pair.x1, pair.f_plus)
    fm = np.interp(x1, pair.x1, pair.f_minus)
    n_vert = max(4, int(refine * math.ceil(float(gap.max()) / dx)))
    w = np.linspace(0.0, 1.0, n_vert)
    x2 = fm[:, None] + (fp - fm)[:, None] * w[None, :]
    pts = np.stack(
        [np.broadcast_to(x1[:, None], x2.shape).ravel(), x2.ravel()], axis=-1
    )
    speed = np.linalg.norm(u(pts, t), axis=-1)
    return StripSupResult(
        value=float(speed.max()),
        n_x1=n_x1,
        n_vert=n_vert,
        dx1_lattice=float((pair.b - pair.a) / (n_x1 - 1)),
        dx2_lattice_max=float(gap.max() / (n_vert - 1)),
    )


# ---------------------------------------------------------------------------
# Cumulative integrals
# ---------------------------------------------------------------------------


def cumulative_integral(t: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Trapezoid cumulative integral with I(t[0]) = 0.

    Apply twice for double integrals.  Timestamps must strictly increase.
    """
    t = np.asarray(t, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if t.size == 0:
        return np.zeros(0)
    if t.shape != v.shape:
        raise ValueError("t and v must have the same length")
    if t.size > 1 and not np.all(np.diff(t) > 0.0):
        raise ValueError("timestamps must be strictly increasing")
    return cumulative_trapezoid(v, t, initial=0.0)


# ---------------------------------------------------------------------------
# Front identities
# ---------------------------------------------------------------------------


def _common_axis(pairs: list[FrontGraphPair]) -> tuple[np.ndarray, np.ndarray]:
    if len(pairs) < 2:
        raise ValueError("need at least 2 consecutive pairs")
    x1 = pairs[0].x1
    for p in pairs[1:]:
        if p.x1.shape != x1.shape or not np.allclose(p.x1, x1, atol=1e-12):
            raise ValueError("pairs have mismatched windows or sample counts")
    t = np.array([p.t for p in pairs])
    if not np.all(np.diff(t) > 0.0):
        raise ValueError("pair times must strictly increase")
    return x1, t


def _psi_on_curves(pairs, psi) -> tuple[np.ndarray, np.ndarray]:
    ps, ms = [], []
    for p in pairs:
        pts_p = np.stack([p.x1, p.f_plus], axis=-1)
        pts_m = np.stack([p.x1, p.f_minus], axis=-1)
        ps.append(psi(pts_p, p.t))
        ms.append(psi(pts_m, p.t))
    return np.asarray(ps), np.asarray(ms)


@dataclass(frozen=True)
class ResidualSeries:
    t: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def residual(self) -> np.ndarray:
        return self.lhs - self.rhs

    def max_abs(self) -> float:
        return float(np.abs(self.residual).max())


def area_rate_residual(
    pairs: list[FrontGraphPair],
    psi=None,
    *,
    psi_plus: np.ndarray | None = None,
    psi_minus: np.ndarray | None = None,
) -> ResidualSeries:
    """Residual of the inter-curve area balance.

    For curves moving with the flow, d/dx1 of psi along each curve equals
    df/dt, so integrating over the window gives

        d/dt int_a^b (f+ - f-) dx1
            = psi(b, f+(b)) - psi(a, f+(a)) - psi(b, f-(b)) + psi(a, f-(a)).

    The left side uses second-order time differences of the trapezoid
    area (one-sided at the series ends).  psi values on the curves may be
    passed precomputed as (ntimes, m) arrays instead of a sampler.
    """
    x1, t = _common_axis(pairs)
    if psi_plus is None or psi_minus is None:
        if psi is None:
            raise ValueError("need either a psi sampler or precomputed values")
        psi_plus, psi_minus = _psi_on_curves(pairs, psi)
    area = np.array([trapezoid(p.delta(), x1) for p in pairs])
    lhs = np.gradient(area, t, edge_order=2)
    rhs = (
        psi_plus[:, -1] - psi_plus[:, 0] - psi_minus[:, -1] + psi_minus[:, 0]
    )
    return ResidualSeries(t=t, lhs=lhs, rhs=rhs)


@dataclass(frozen=True)
class CurveResidualSeries:
    t: np.ndarray
    res_plus: np.ndarray   # max-norm over x1 samples, per time
    res_minus: np.ndarray

    def max_abs(self) -> float:
        return float(max(self.res_plus.max(), self.res_minus.max()))


def curve_kinematics_residual(
    pairs: list[FrontGraphPair],
    psi=None,
    *,
    psi_plus: np.ndarray | None = None,
    psi_minus: np.ndarray | None = None,
) -> CurveResidualSeries:
    """Residual of the pointwise curve identity d/dx1 psi(x1, f) = df/dt.

    The x1 derivative of the stream function along each curve (centered
    differences over the samples, one-sided at the window ends) is
    compared with the time derivative of the graph (differences across
    snapshots); the max-norm over samples is reported per curve and time.
    """
    x1, t = _common_axis(pairs)
    if psi_plus is None or psi_minus is None:
        if psi is None:
            raise ValueError("need either a psi sampler or precomputed values")
        psi_plus, psi_minus = _psi_on_curves(pairs, psi)
    fp = np.array([p.f_plus for p in pairs])
    fm = np.array([p.f_minus for p in pairs])
    res = []
    for f, psi_vals in ((fp, psi_plus), (fm, psi_minus)):
        lhs = np.gradient(psi_vals, x1, axis=1, edge_order=2)
        rhs = np.gradient(f, t, axis=0, edge_order=2)
        res.append(np.abs(lhs - rhs).max(axis=1))
    return CurveResidualSeries(t=t, res_plus=res[0], res_minus=res[1])


# ---------------------------------------------------------------------------
# Shrinking-window consistency monitor
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShrinkWindowReport:
    """Time series of the shrinking-window quantities plus a verdict.

    a_tilde(t) = a + tail(t) and b_tilde(t) = b - tail(t), where tail(t)
    is the strip sup-speed integral from t to the run horizon.  Where the
    window is valid (a_tilde < b_tilde inside [a, b]) the area of the gap
    over it and the sign of its time derivative are recorded; for a front
    genuinely moving with a flow of controlled velocity growth that
    derivative cannot be negative.
    """

    t: np.ndarray
    tail_integral: np.ndarray
    a_tilde: np.ndarray
    b_tilde: np.ndarray
    valid: np.ndarray            # bool per time
    area_windowed: np.ndarray    # nan where invalid
    dareadt: np.ndarray          # nan where undefined
    dareadt_sign: np.ndarray     # -1/0/+1, 0 within tolerance; nan-safe int
    t_star: float | None
    area_at_t_star: float | None
    min_dareadt_after_t_star: float | None
    delta_min_end: float
    delta_min_start: float
    collapsed: bool
    consistent: bool
    verdict: str


def shrink_window_monitor(
    times: np.ndarray,
    sup_speed: np.ndarray,
    pairs: list[FrontGraphPair],
    *,
    dadt_tol: float = 1e-6,
    collapse_ratio: float = 0.1,
) -> ShrinkWindowReport:
    """Check observed front thinning against controlled velocity growth.

    The run horizon stands in for the putative singular time.  t_star is
    the first recorded time with a valid shrunken window.  A gap collapse
    (min gap at the horizon below collapse_ratio times its initial value)
    combined with a windowed area derivative below -dadt_tol * A(t_star)
    is flagged as inconsistent: under controlled velocity growth the
    windowed area cannot decrease, so such thinning points at an
    unresolved or genuinely uncontrolled run.
    """
    t = np.asarray(times, dtype=np.float64)
    s = np.asarray(sup_speed, dtype=np.float64)
    if t.size != len(pairs):
        raise ValueError("times and pairs must align")
    x1, t_pairs = _common_axis(pairs) if len(pairs) > 1 else (pairs[0].x1, t)
    if not np.allclose(t, t_pairs, atol=1e-9):
        raise ValueError("pair times must match the sup-speed series")
    a, b = pairs[0].a, pairs[0].b

    total = cumulative_integral(t, s)
    tail = total[-1] - total
    a_tilde = a + tail
    b_tilde = b - tail
    valid = (a_tilde < b_tilde) & (a_tilde >= a - 1e-12) & (b_tilde <= b + 1e-12)

    area_w = np.full(t.size, np.nan)
    for i in np.nonzero(valid)[0]:
        area_w[i] = thickness_and_area(
            pairs[i], window=(a_tilde[i], b_tilde[i])
        ).area

    dareadt = np.full(t.size, np.nan)
    vidx = np.nonzero(valid)[0]
    if vidx.size >= 2:
        seg = np.gradient(area_w[vidx], t[vidx], edge_order=min(2, vidx.size - 1))
        dareadt[vidx] = seg

    delta_min_series = np.array([float(p.delta().min()) for p in pairs])
    delta0, delta_end = float(delta_min_series[0]), float(delta_min_series[-1])
    collapsed = delta_end <= collapse_ratio * delta0

    if vidx.size > 0:
        t_star = float(t[vidx[0]])
        area_star = float(area_w[vidx[0]])
        after = vidx[np.isfinite(dareadt[vidx])]
        min_dadt = float(dareadt[after].min()) if after.size else None
    else:
        t_star = None
        area_star = None
        min_dadt = None

    tol_abs = dadt_tol * (area_star if area_star else 1.0)
    sign = np.zeros(t.size, dtype=int)
    fin = np.isfinite(dareadt)
    sign[fin & (dareadt > tol_abs)] = 1
    sign[fin & (dareadt < -tol_abs)] = -1

    if t_star is None:
        consistent = True
        verdict = (
            "shrinking window never valid: the velocity tail integral exceeds "
            "half the front length (uncontrolled-growth regime over this horizon)"
        )
    else:
        dadt_ok = min_dadt is None or min_dadt >= -tol_abs
        if collapsed and not dadt_ok:
            consistent = False
            verdict = (
                "front collapse with finite strip-speed integral but decreasing "
                "windowed area: inconsistent with the controlled-growth front "
                "criterion; check resolution"
            )
        elif collapsed:
            consistent = True
            verdict = (
                "front thinning with windowed area non-decreasing: consistent "
                "with controlled velocity growth (no sharp front at this horizon)"
            )
        elif not dadt_ok:
            consistent = False
            verdict = (
                "windowed area decreases beyond tolerance without collapse: "
                "check resolution or front choice"
            )
        else:
            consistent = True
            verdict = "no front collapse observed over the run horizon"

    return ShrinkWindowReport(
        t=t,
        tail_integral=tail,
        a_tilde=a_tilde,
        b_tilde=b_tilde,
        valid=valid,
        area_windowed=area_w,
        dareadt=dareadt,
        dareadt_sign=sign,
        t_star=t_star,
        area_at_t_star=area_star,
        min_dareadt_after_t_star=min_dadt,
        delta_min_end=delta_end,
        delta_min_start=delta0,
        collapsed=collapsed,
        consistent=consistent,
        verdict=verdict,
    )


# ---------------------------------------------------------------------------
# BKM-type sup norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BkmSample:
    """Grid sup norms entering the per-model singularity criteria."""

    sup_omega: float | None = None
    sup_grad_theta: float | None = None
    sup_lap_theta: float | None = None


def bkm_snapshot(s: ModelState) -> BkmSample:
    """sup|omega|, sup|grad theta|, sup|lap theta| via spectral derivatives."""
    sup_omega = sup_grad = sup_lap = None
    if s.omega is not None:
        sup_omega = float(np.abs(s.omega.values).max())
    if s.theta is not None:
        th = to_spectral(s.theta)
        tx = to_real(derivative(th, "dx1")).values
        ty = to_real(derivative(th, "dx2")).values
        sup_grad = float(np.hypot(tx, ty).max())
        sup_lap = float(np.abs(to_real(derivative(th, "laplacian")).values).max())
    return BkmSample(sup_omega=sup_omega, sup_grad_theta=sup_grad, sup_lap_theta=sup_lap)


def velocity_gradient_sup(u: VectorField) -> float:
    """Max Frobenius norm of the velocity Jacobian over the grid."""
    g11 = to_real(derivative(to_spectral(u.u1), "dx1")).values
    g12 = to_real(derivative(to_spectral(u.u1), "dx2")).values
    g21 = to_real(derivative(to_spectral(u.u2), "dx1")).values
    g22 = to_real(derivative(to_spectral(u.u2), "dx2")).values
    return float(np.sqrt(g11**2 + g12**2 + g21**2 + g22**2).max())


# ---------------------------------------------------------------------------
# Collision bound and thickness corollary
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundViolation:
    key: str
    t: float
    value: float
    bound: float


@dataclass(frozen=True)
class BoundCheckReport:
    ok: bool
    n_checked: int
    min_margin: float  # min over checks of value / bound (inf if none)
    violations: tuple[BoundViolation, ...]


def _check_exponential_bound(times, integral, series_by_key, tol) -> BoundCheckReport:
    t = np.asarray(times, dtype=np.float64)
    integral = np.asarray(integral, dtype=np.float64)
    violations = []
    min_margin = math.inf
    n = 0
    for key, vals in series_by_key.items():
        vals = np.asarray(vals, dtype=np.float64)
        if vals.shape != t.shape:
            raise ValueError(f"series {key!r} does not align with times")
        bound = vals[0] * np.exp(-integral) * (1.0 - tol)
        with np.errstate(divide="ignore", invalid="ignore"):
            margin = np.where(bound > 0, vals / bound, math.inf)
        min_margin = min(min_margin, float(np.min(margin)))
        n += t.size
        for i in np.nonzero(vals < bound)[0]:
            violations.append(
                BoundViolation(key=key, t=float(t[i]), value=float(vals[i]),
                               bound=float(bound[i]))
            )
    return BoundCheckReport(
        ok=not violations,
        n_checked=n,
        min_margin=min_margin,
        violations=tuple(violations),
    )


def collision_bound(
    times: np.ndarray,
    integral_grad_u: np.ndarray,
    separations: dict[str, np.ndarray],
    *,
    tol: float = 0.02,
) -> BoundCheckReport:
    """Check sep(t) >= sep(0) * exp(-int_0^t sup|grad u|) * (1 - tol).

    Trajectories of a smooth flow cannot approach faster than this
    exponential rate, so any violation beyond the discretization
    allowance tol indicates a numerics problem.
    """
    return _check_exponential_bound(times, integral_grad_u, separations, tol)


def thickness_lower_bound(
    times: np.ndarray,
    integral_grad_u: np.ndarray,
    delta_min: np.ndarray,
    *,
    tol: float = 0.02,
) -> BoundCheckReport:
    """Same exponential bound applied to the minimum front gap.

    Points sharing an x1 on the two curves are particle pairs, so the gap
    inherits the collision bound on resolved runs with valid graphs.
    """
    return _check_exponential_bound(
        times, integral_grad_u, {"delta_min": delta_min}, tol
    )
