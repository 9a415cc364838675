"""Model definitions: velocity recovery and time tendencies.

Every model convects a scalar theta with a divergence-free velocity
u = perp-grad(psi).  The models differ in how psi is recovered from the
state and in the forcing of the vorticity equation:

  passive     psi prescribed as a formula psi(x1, x2, t)
  euler       omega advected, no forcing; psi solves omega = -lap(psi)
  qg          psi = -(-lap)^(-1/2) theta
  boussinesq  d omega/dt = -adv + (-d theta/d x1)
  mhd         d omega/dt = -adv + perp-grad(theta) . grad(lap theta)

Sign conventions: omega = -lap(psi) for the vorticity models, and the QG
inversion carries the extra minus sign, so theta = cos(x1) gives
psi = -cos(x1) and u = (0, sin(x1)).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import GaugeError
from .grid import (
    BicubicSampler,
    GridSpec,
    RealField,
    SpectralField,
    VectorField,
    dealias,
    derivative,
    invert_elliptic,
    perp_gradient,
    to_real,
    to_spectral,
)

PsiFn = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


class ModelKind(Enum):
    PASSIVE = "passive"
    EULER = "euler"
    QG = "qg"
    BOUSSINESQ = "boussinesq"
    MHD = "mhd"

    @property
    def prognostics(self) -> tuple[str, ...]:
        if self in (ModelKind.PASSIVE, ModelKind.QG):
            return ("theta",)
        if self is ModelKind.EULER:
            return ("omega",)
        return ("theta", "omega")

    @property
    def has_theta(self) -> bool:
        return "theta" in self.prognostics

    @property
    def has_omega(self) -> bool:
        return "omega" in self.prognostics


@dataclass(frozen=True)
class HyperdissipationParams:
    """Optional numerical stabilizer -nu * (-lap)^p on each prognostic field.

    nu = 0 reproduces the inviscid equations exactly (the term is skipped,
    not multiplied by zero).
    """

    nu: float = 0.0
    p: int = 4

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError("nu must be >= 0")
        if self.p < 1 or int(self.p) != self.p:
            raise ValueError("p must be an integer >= 1")


HYPER_OFF = HyperdissipationParams()


@dataclass(frozen=True)
class ModelState:
    """Prognostic fields plus time; everything needed to reconstruct u.

    psi_fn is required for the passive model and ignored otherwise;
    psi_source optionally keeps the formula text so states can be
    serialized to snapshots.
    """

    kind: ModelKind
    grid: GridSpec
    t: float = 0.0
    theta: RealField | None = None
    omega: RealField | None = None
    psi_fn: PsiFn | None = None
    psi_source: str | None = None
    hyper: HyperdissipationParams = HYPER_OFF

    def __post_init__(self):
        for name in self.kind.prognostics:
            f = getattr(self, name)
            if f is None:
                raise ValueError(f"{self.kind.value} model requires field {name!r}")
            if f.grid != self.grid:
                raise ValueError(f"field {name!r} not on the state grid")
        if self.kind is ModelKind.PASSIVE and self.psi_fn is None:
            raise ValueError("passive model requires psi_fn")

    def fields(self) -> dict[str, RealField]:
        return {name: getattr(self, name) for name in self.kind.prognostics}

    def with_fields(self, t: float, **arrays: np.ndarray) -> "ModelState":
        updates = {n: RealField(self.grid, a) for n, a in arrays.items()}
        return dataclasses.replace(self, t=t, **updates)


@dataclass(frozen=True)
class Tendency:
    """Time derivatives of the prognostic fields (arrays, not fields)."""

    dtheta: np.ndarray | None = None
    domega: np.ndarray | None = None

    def items(self):
        if self.dtheta is not None:
            yield "theta", self.dtheta
        if self.domega is not None:
            yield "omega", self.domega


def _psi_hat_of_state(s: ModelState) -> SpectralField:
    if s.kind is ModelKind.PASSIVE:
        vals = np.asarray(s.psi_fn(s.grid.x1, s.grid.x2, s.t), dtype=np.float64)
        vals = np.broadcast_to(vals, s.grid.shape)
        psi_hat = to_spectral(RealField(s.grid, np.ascontiguousarray(vals)))
        # zero-mean gauge; a constant offset in psi has no dynamical effect
        c = psi_hat.coeffs.copy()
        c[0, 0] = 0.0
        return SpectralField(s.grid, c)
    if s.kind is ModelKind.QG:
        theta_hat = to_spectral(s.theta)
        inv = invert_elliptic(theta_hat, "neg_inv_sqrt_laplacian")
        return SpectralField(s.grid, -inv.coeffs)
    omega_hat = to_spectral(s.omega)
    return invert_elliptic(omega_hat, "neg_inv_laplacian")


def velocity_of_state(s: ModelState) -> tuple[VectorField, RealField]:
    """Recover (u, psi) from the state via the model's inversion.

    Raises GaugeError if the inverted field has nonzero mean.
    """
    try:
        psi_hat = _psi_hat_of_state(s)
    except GaugeError as e:
        field = "theta" if s.kind is ModelKind.QG else "omega"
        raise GaugeError(f"{s.kind.value} model, field {field}: {e}") from None
    return perp_gradient(psi_hat), to_real(psi_hat)


def _zero_mean(coeffs: np.ndarray) -> np.ndarray:
    coeffs[0, 0] = 0.0
    return coeffs


def _advection(g: GridSpec, u: VectorField, f_hat: SpectralField) -> np.ndarray:
    """Dealiased pseudo-spectral u . grad(f), returned in real space.

    The k = 0 coefficient is zeroed: for divergence-free u the domain
    integral of u . grad(f) vanishes identically, so this only removes
    roundoff drift of the mean.
    """
    fx = to_real(derivative(f_hat, "dx1")).values
    fy = to_real(derivative(f_hat, "dx2")).values
    prod = u.u1.values * fx + u.u2.values * fy
    prod_hat = dealias(to_spectral(RealField(g, prod)))
    return to_real(SpectralField(g, _zero_mean(prod_hat.coeffs.copy()))).values


def _hyper_term(g: GridSpec, f_hat: SpectralField, hyper: HyperdissipationParams):
    return to_real(
        SpectralField(g, -hyper.nu * (g.ksq**hyper.p) * f_hat.coeffs)
    ).values


def tendency(s: ModelState) -> Tendency:
    """Time derivative of each prognostic field at the state's time.

    d theta/dt = -u.grad(theta) for every model carrying theta; the
    vorticity forcing depends on the model (see module docstring).  All
    quadratic products are dealiased by the two-thirds rule.
    """
    g = s.grid
    u, _ = velocity_of_state(s)

    theta_hat = to_spectral(s.theta) if s.kind.has_theta else None
    dtheta = None
    if theta_hat is not None:
        dtheta = -_advection(g, u, theta_hat)

    domega = None
    if s.kind.has_omega:
        omega_hat = to_spectral(s.omega)
        domega = -_advection(g, u, omega_hat)
        if s.kind is ModelKind.BOUSSINESQ:
            domega -= to_real(derivative(theta_hat, "dx1")).values
        elif s.kind is ModelKind.MHD:
            # perp-grad(theta) . grad(lap theta), dealiased like any product
            tx = to_real(derivative(theta_hat, "dx1")).values
            ty = to_real(derivative(theta_hat, "dx2")).values
            lap_hat = derivative(theta_hat, "laplacian")
            lx = to_real(derivative(lap_hat, "dx1")).values
            ly = to_real(derivative(lap_hat, "dx2")).values
            force = -ty * lx + tx * ly
            force_hat = dealias(to_spectral(RealField(g, force)))
            domega += to_real(
                SpectralField(g, _zero_mean(force_hat.coeffs.copy()))
            ).values

    if s.hyper.nu > 0:
        if dtheta is not None:
            dtheta = dtheta + _hyper_term(g, theta_hat, s.hyper)
        if domega is not None:
            domega = domega + _hyper_term(g, to_spectral(s.omega), s.hyper)

    return Tendency(dtheta=dtheta, domega=domega)


class FrozenFlow:
    """Point samplers for the velocity and stream function of one state.

    velocity(points, t) and psi(points, t) ignore t (the flow is the
    state's snapshot); TimeInterpFlow blends two of these linearly for
    sub-step sampling.
    """

    def __init__(self, state: ModelState, mode: str = "bicubic"):
        u, psi = velocity_of_state(state)
        self.t = state.t
        self.dx = state.grid.dx_min
        self.u_field = u
        self.psi_field = psi
        if mode == "bicubic":
            self._u1 = BicubicSampler(u.u1)
            self._u2 = BicubicSampler(u.u2)
            self._psi = BicubicSampler(psi)
        else:
            raise ValueError(f"unknown sampling mode {mode!r}")

    def velocity(self, points: np.ndarray, t: float | None = None) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return np.stack([self._u1(pts), self._u2(pts)], axis=-1)

    def psi(self, points: np.ndarray, t: float | None = None) -> np.ndarray:
        return self._psi(points)

    def max_speed(self) -> float:
        return self.u_field.max_speed()


class TimeInterpFlow:
    """Linear-in-time blend of two FrozenFlow snapshots."""

    def __init__(self, flow0: FrozenFlow, flow1: FrozenFlow):
        if flow1.t <= flow0.t:
            raise ValueError("flow snapshots must be time-ordered")
        self.f0 = flow0
        self.f1 = flow1
        self.dx = flow0.dx

    def _weight(self, t: float) -> float:
        w = (t - self.f0.t) / (self.f1.t - self.f0.t)
        return min(1.0, max(0.0, w))

    def velocity(self, points: np.ndarray, t: float) -> np.ndarray:
        w = self._weight(t)
        return (1.0 - w) * self.f0.velocity(points) + w * self.f1.velocity(points)

    def psi(self, points: np.ndarray, t: float) -> np.ndarray:
        w = self._weight(t)
        return (1.0 - w) * self.f0.psi(points) + w * self.f1.psi(points)


# ---------------------------------------------------------------------------
# Builtin initial data
# ---------------------------------------------------------------------------


def _band_limited_noise(g: GridSpec, seed: int, kmax: int = 3) -> np.ndarray:
    rng = np.random.default_rng(seed)
    white = rng.standard_normal(g.shape)
    hat = np.fft.fft2(white)
    keep = (np.abs(g.k1) <= kmax) & (np.abs(g.k2) <= kmax) & (g.ksq > 0)
    field = np.fft.ifft2(hat * keep).real
    return field / np.abs(field).max()


def _scn_zero(g: GridSpec) -> dict[str, np.ndarray]:
    return {}


def _scn_shear(g: GridSpec) -> dict[str, np.ndarray]:
    c = np.cos(g.x1)
    return {"theta": c, "omega": c.copy()}


def _scn_bands(g: GridSpec) -> dict[str, np.ndarray]:
    return {"theta": np.sin(g.x2)}


def _scn_saddle(g: GridSpec) -> dict[str, np.ndarray]:
    return {"theta": np.sin(g.x1) * np.sin(g.x2)}


def _scn_qg_saddle(g: GridSpec) -> dict[str, np.ndarray]:
    return {"theta": np.sin(g.x1) * np.sin(g.x2) + np.cos(g.x2)}


def _scn_bubble(g: GridSpec) -> dict[str, np.ndarray]:
    s2 = 0.35**2
    bump = np.exp((np.cos(g.x1 - np.pi) - 1.0) / s2) * np.exp(
        (np.cos(g.x2 - np.pi / 2) - 1.0) / s2
    )
    return {"theta": bump - bump.mean()}


def _scn_random(g: GridSpec) -> dict[str, np.ndarray]:
    return {
        "theta": _band_limited_noise(g, seed=12345),
        "omega": _band_limited_noise(g, seed=54321),
    }


SCENARIOS: dict[str, tuple[str, Callable[[GridSpec], dict[str, np.ndarray]]]] = {
    "zero": ("all prognostic fields zero", _scn_zero),
    "shear": ("cos(x1) in every prognostic field; steady for QG and Euler", _scn_shear),
    "bands": ("theta = sin(x2): horizontal level bands", _scn_bands),
    "saddle": ("theta = sin(x1)sin(x2): X-point at each cell corner", _scn_saddle),
    "qg_saddle": (
        "theta = sin(x1)sin(x2) + cos(x2): hyperbolic saddles on the x2=0 line",
        _scn_qg_saddle,
    ),
    "boussinesq_bubble": (
        "symmetric smooth bubble in theta (mean removed), omega = 0",
        _scn_bubble,
    ),
    "random_smooth": (
        "seeded random band-limited fields (|k| <= 3), sup-normalized to 1",
        _scn_random,
    ),
}


def initial_state(
    name: str,
    kind: ModelKind,
    grid: GridSpec,
    *,
    amplitude: float = 1.0,
    psi_fn: PsiFn | None = None,
    psi_source: str | None = None,
    hyper: HyperdissipationParams = HYPER_OFF,
) -> ModelState:
    """Build a documented scenario state for the given model and grid.

    Every produced field is dealiased and, where the model applies an
    elliptic inversion to it, projected to zero mean.
    """
    try:
        _, builder = SCENARIOS[name]
    except KeyError:
        known = ", ".join(sorted(SCENARIOS))
        raise KeyError(f"unknown scenario {name!r}; known: {known}") from None
    built = builder(grid)

    fields = {}
    for fname in kind.prognostics:
        arr = built.get(fname)
        if arr is None:
            arr = np.zeros(grid.shape)
        arr = amplitude * arr
        hat = dealias(to_spectral(RealField(grid, arr)))
        c = hat.coeffs.copy()
        if fname == "omega" or kind is ModelKind.QG:
            c[0, 0] = 0.0
        fields[fname] = to_real(SpectralField(grid, c))

    return ModelState(
        kind=kind,
        grid=grid,
        t=0.0,
        psi_fn=psi_fn,
        psi_source=psi_source,
        hyper=hyper,
        **fields,
    )
