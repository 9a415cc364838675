"""Fluid trajectories dX/dt = u(X, t) and pair-separation tracking."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParticleAdvectionError
from .grid import TWO_PI, wrap_points
from .integrator import rk4_step


@dataclass(frozen=True)
class ParticleSet:
    """Tracked trajectories: initial labels q, current positions x, pairs.

    Positions live on the torus; separations use the minimum-image metric.
    """

    q: np.ndarray                       # (N, 2) initial positions
    x: np.ndarray                       # (N, 2) current positions
    pairs: tuple[tuple[int, int], ...]  # index pairs for separation tracking
    t: float = 0.0

    def __post_init__(self):
        q = np.atleast_2d(np.asarray(self.q, dtype=np.float64))
        x = np.atleast_2d(np.asarray(self.x, dtype=np.float64))
        if q.shape != x.shape or q.ndim != 2 or q.shape[1] != 2:
            raise ValueError("q and x must both have shape (N, 2)")
        n = q.shape[0]
        for i, j in self.pairs:
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"pair ({i}, {j}) out of range for {n} particles")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "pairs", tuple((int(i), int(j)) for i, j in self.pairs))

    @classmethod
    def from_seeds(cls, seeds, pairs=()) -> "ParticleSet":
        q = np.atleast_2d(np.asarray(seeds, dtype=np.float64))
        return cls(q=q, x=q.copy(), pairs=tuple(pairs))

    def __len__(self) -> int:
        return self.q.shape[0]


def advect_particles(
    p: ParticleSet, u, t: float | None = None, dt: float = 0.0, *, wrap: bool = True
) -> ParticleSet:
    """One RK4 step for every particle under the sampler u(points, t).

    wrap=False keeps unwrapped coordinates (useful for area tracking);
    separations are wrap-independent either way.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    t0 = p.t if t is None else t

    def rhs(s, x):
        return u(x, s)

    x1 = rk4_step(rhs, t0, p.x, dt)
    if not np.isfinite(x1).all():
        bad = np.nonzero(~np.isfinite(x1).all(axis=1))[0]
        raise ParticleAdvectionError(
            f"non-finite particle positions at t = {t0 + dt:.6g}", particle_ids=bad
        )
    if wrap:
        x1 = wrap_points(x1)
    return ParticleSet(q=p.q, x=x1, pairs=p.pairs, t=t0 + dt)


def pair_separations(p: ParticleSet) -> np.ndarray:
    """Periodic Euclidean distance (minimum image) for each declared pair."""
    if not p.pairs:
        return np.zeros(0)
    i = np.array([ij[0] for ij in p.pairs])
    j = np.array([ij[1] for ij in p.pairs])
    d = p.x[i] - p.x[j]
    d = (d + np.pi) % TWO_PI - np.pi
    return np.hypot(d[:, 0], d[:, 1])
