"""Spectral calculus on the doubly periodic square torus of side 2*pi.

Fields live on a uniform n1 x n2 grid with index [i, j] at the point
(i*dx1, j*dx2).  Spectral coefficients use the mean-preserving
normalization: the k = (0, 0) coefficient of a constant field equals that
constant, and a real field f = cos(x1) has coefficients of magnitude 1/2
at k = (+-1, 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import ndimage

from .errors import GaugeError

TWO_PI = 2.0 * np.pi

DerivKind = Literal["dx1", "dx2", "laplacian"]
InversionKind = Literal["neg_inv_laplacian", "neg_inv_sqrt_laplacian"]


class GridSpec:
    """Uniform periodic grid. n1, n2 must be even and at least 8.

    Wavenumbers per axis are the integers [-n/2, n/2 - 1] in FFT order.
    Precomputes the 2D wavenumber meshes, the two-thirds dealias mask and
    the coordinate meshes, all shaped (n1, n2) with axis 0 = x1.
    """

    def __init__(self, n1: int, n2: int | None = None):
        n2 = n1 if n2 is None else n2
        for name, n in (("n1", n1), ("n2", n2)):
            if n < 8 or n % 2 != 0:
                raise ValueError(f"{name} must be even and >= 8, got {n}")
        self.n1 = int(n1)
        self.n2 = int(n2)
        self.dx1 = TWO_PI / self.n1
        self.dx2 = TWO_PI / self.n2

        k1 = np.fft.fftfreq(self.n1, d=1.0 / self.n1)
        k2 = np.fft.fftfreq(self.n2, d=1.0 / self.n2)
        self.k1, self.k2 = np.meshgrid(k1, k2, indexing="ij")
        self.ksq = self.k1**2 + self.k2**2

        # First-derivative multipliers zero the Nyquist mode: i*k at the
        # unpaired -n/2 wavenumber would break Hermitian symmetry.
        k1d = np.where(k1 == -self.n1 // 2, 0.0, k1)
        k2d = np.where(k2 == -self.n2 // 2, 0.0, k2)
        self.ik1 = 1j * np.meshgrid(k1d, k2d, indexing="ij")[0]
        self.ik2 = 1j * np.meshgrid(k1d, k2d, indexing="ij")[1]

        self.dealias_mask = (np.abs(self.k1) <= self.n1 / 3.0) & (
            np.abs(self.k2) <= self.n2 / 3.0
        )

        x1 = np.arange(self.n1) * self.dx1
        x2 = np.arange(self.n2) * self.dx2
        self.x1, self.x2 = np.meshgrid(x1, x2, indexing="ij")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    @property
    def dx_min(self) -> float:
        return min(self.dx1, self.dx2)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GridSpec)
            and self.n1 == other.n1
            and self.n2 == other.n2
        )

    def __hash__(self):
        return hash((self.n1, self.n2))

    def __repr__(self) -> str:
        return f"GridSpec({self.n1}, {self.n2})"


@dataclass(frozen=True)
class RealField:
    """Point values of a real field on a GridSpec; values shape (n1, n2)."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} != grid {self.grid.shape}")
        if not np.isfinite(v).all():
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def mean(self) -> float:
        return float(self.values.mean())


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients of a real field, full fft2 layout (n1, n2)."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != self.grid.shape:
            raise ValueError(f"coeffs shape {c.shape} != grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", c)


@dataclass(frozen=True)
class VectorField:
    """Velocity components on a shared grid."""

    u1: RealField
    u2: RealField

    def __post_init__(self):
        if self.u1.grid != self.u2.grid:
            raise ValueError("vector components on different grids")

    @property
    def grid(self) -> GridSpec:
        return self.u1.grid

    def speed(self) -> np.ndarray:
        return np.hypot(self.u1.values, self.u2.values)

    def max_speed(self) -> float:
        return float(self.speed().max())


def to_spectral(f: RealField) -> SpectralField:
    return SpectralField(f.grid, np.fft.fft2(f.values) / (f.grid.n1 * f.grid.n2))


def to_real(F: SpectralField) -> RealField:
    n = F.grid.n1 * F.grid.n2
    return RealField(F.grid, np.fft.ifft2(F.coeffs * n).real)


def derivative(F: SpectralField, which: DerivKind) -> SpectralField:
    """Exact spectral derivative: multiply by i*k1, i*k2 or -|k|^2."""
    g = F.grid
    if which == "dx1":
        mult = g.ik1
    elif which == "dx2":
        mult = g.ik2
    elif which == "laplacian":
        mult = -g.ksq
    else:
        raise ValueError(f"unknown derivative kind {which!r}")
    return SpectralField(g, F.coeffs * mult)


def mean_coefficient(F: SpectralField) -> complex:
    return complex(F.coeffs[0, 0])


def _check_zero_mean(F: SpectralField) -> None:
    scale = max(1.0, float(np.abs(F.coeffs).max()))
    if abs(F.coeffs[0, 0]) > 1e-12 * scale:
        raise GaugeError(
            f"inversion requires a zero-mean field; k=0 coefficient is "
            f"{F.coeffs[0, 0]:.3e}"
        )


def invert_elliptic(F: SpectralField, kind: InversionKind) -> SpectralField:
    """Invert -Laplacian (or its square root) in the zero-mean gauge.

    neg_inv_laplacian divides each k != 0 coefficient by |k|^2, so the
    output psi satisfies -lap(psi) = f.  neg_inv_sqrt_laplacian divides by
    |k|.  The k = 0 coefficient of the output is set to zero.
    """
    _check_zero_mean(F)
    g = F.grid
    if kind == "neg_inv_laplacian":
        denom = g.ksq.copy()
    elif kind == "neg_inv_sqrt_laplacian":
        denom = np.sqrt(g.ksq)
    else:
        raise ValueError(f"unknown inversion kind {kind!r}")
    denom[0, 0] = 1.0
    out = F.coeffs / denom
    out[0, 0] = 0.0
    return SpectralField(g, out)


def perp_gradient(psi: SpectralField) -> VectorField:
    """u = (-d psi / d x2, d psi / d x1); divergence-free by construction."""
    u1 = to_real(SpectralField(psi.grid, -psi.coeffs * psi.grid.ik2))
    u2 = to_real(SpectralField(psi.grid, psi.coeffs * psi.grid.ik1))
    return VectorField(u1, u2)


def dealias(F: SpectralField) -> SpectralField:
    """Two-thirds rule: zero every coefficient with |k1| > n1/3 or |k2| > n2/3."""
    return SpectralField(F.grid, F.coeffs * F.grid.dealias_mask)


def divergence_max(v: VectorField) -> float:
    d1 = derivative(to_spectral(v.u1), "dx1")
    d2 = derivative(to_spectral(v.u2), "dx2")
    div = to_real(SpectralField(v.grid, d1.coeffs + d2.coeffs))
    return float(np.abs(div.values).max())


def wrap_points(points: np.ndarray) -> np.ndarray:
    """Map points componentwise into [0, 2*pi)."""
    return np.mod(points, TWO_PI)


class BicubicSampler:
    """Off-grid sampling by periodic cubic-spline interpolation.

    Spline coefficients are prefiltered once at construction, so repeated
    calls are cheap and grid nodes are reproduced to roundoff.
    """

    def __init__(self, field: RealField):
        self.grid = field.grid
        self.dx = field.grid.dx_min
        self._coef = ndimage.spline_filter(
            field.values, order=3, mode="grid-wrap", output=np.float64
        )

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        idx = np.stack([pts[:, 0] / self.grid.dx1, pts[:, 1] / self.grid.dx2])
        return ndimage.map_coordinates(
            self._coef, idx, order=3, mode="grid-wrap", prefilter=False
        )


class FourierSampler:
    """Exact evaluation of the truncated Fourier series at arbitrary points.

    O(n1*n2) work per point; intended for validating the bicubic path.
    """

    def __init__(self, F: SpectralField):
        self.grid = F.grid
        self._coeffs = F.coeffs
        self._k1 = np.fft.fftfreq(F.grid.n1, d=1.0 / F.grid.n1)
        self._k2 = np.fft.fftfreq(F.grid.n2, d=1.0 / F.grid.n2)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        e1 = np.exp(1j * np.outer(pts[:, 0], self._k1))
        e2 = np.exp(1j * np.outer(pts[:, 1], self._k2))
        return np.einsum("pa,ab,pb->p", e1, self._coeffs, e2, optimize=True).real


class VectorSampler:
    """Samples both velocity components; returns an array of shape (P, 2)."""

    def __init__(self, v: VectorField, mode: str = "bicubic"):
        if mode == "bicubic":
            self._s1 = BicubicSampler(v.u1)
            self._s2 = BicubicSampler(v.u2)
        elif mode == "fourier":
            self._s1 = FourierSampler(to_spectral(v.u1))
            self._s2 = FourierSampler(to_spectral(v.u2))
        else:
            raise ValueError(f"unknown sampling mode {mode!r}")
        self.grid = v.grid
        self.dx = v.grid.dx_min

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return np.stack([self._s1(pts), self._s2(pts)], axis=-1)


def sample_offgrid(f, points: np.ndarray, mode: str = "bicubic") -> np.ndarray:
    """One-shot off-grid sampling of a RealField or VectorField.

    mode 'bicubic' (default) interpolates from grid values; 'fourier'
    evaluates the truncated series exactly.  Build the sampler classes
    directly when sampling the same field many times.
    """
    if isinstance(f, VectorField):
        return VectorSampler(f, mode=mode)(points)
    if mode == "bicubic":
        return BicubicSampler(f)(points)
    if mode == "fourier":
        return FourierSampler(to_spectral(f))(points)
    raise ValueError(f"unknown sampling mode {mode!r}")
