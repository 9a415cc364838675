import numpy as np
import pytest

from frontwatch import (
    GridSpec,
    ModelKind,
    ModelState,
    ParticleSet,
    ParticleAdvectionError,
    RealField,
    FrozenFlow,
    advect_particles,
    pair_separations,
)


def cellular_flow(n=256, amp=1.0):
    g = GridSpec(n)
    s = ModelState(
        kind=ModelKind.PASSIVE,
        grid=g,
        theta=RealField(g, np.zeros(g.shape)),
        psi_fn=lambda x1, x2, t: amp * np.sin(x1) * np.sin(x2),
    )
    return FrozenFlow(s)


class TestAdvection:
    def test_zero_velocity(self):
        p = ParticleSet.from_seeds([[1.0, 2.0], [3.0, 4.0]])
        p2 = advect_particles(p, lambda x, t: np.zeros_like(x), t=0.0, dt=0.5)
        assert np.array_equal(p2.x, p.x)
        assert p2.t == 0.5

    def test_constant_advection(self):
        p = ParticleSet.from_seeds([[1.0, 2.0]])
        u = lambda x, t: np.broadcast_to([1.0, 0.0], x.shape)
        p2 = advect_particles(p, u, t=0.0, dt=0.5)
        assert p2.x[0, 0] == pytest.approx(1.5, abs=1e-14)
        assert p2.x[0, 1] == pytest.approx(2.0)

    def test_wrapping(self):
        p = ParticleSet.from_seeds([[2 * np.pi - 0.1, 0.0]])
        u = lambda x, t: np.broadcast_to([1.0, 0.0], x.shape)
        p2 = advect_particles(p, u, t=0.0, dt=0.5)
        assert p2.x[0, 0] == pytest.approx(0.4, abs=1e-12)

    def test_streamline_conservation(self):
        # psi is constant along steady trajectories; drift stays tiny over [0, 5]
        flow = cellular_flow(256)
        p = ParticleSet.from_seeds([[1.0, 1.0]])
        psi0 = flow.psi(p.x)[0]
        dt = 0.5 * flow.dx
        t, drift = 0.0, 0.0
        while t < 5.0 - 1e-12:
            h = min(dt, 5.0 - t)
            p = advect_particles(p, flow.velocity, t=t, dt=h)
            t += h
            drift = max(drift, abs(flow.psi(p.x)[0] - psi0))
        assert drift <= 1e-6

    def test_area_preservation(self):
        # divergence-free flow preserves the area of a small advected patch
        flow = cellular_flow(128)
        quad = np.array([[1.0, 1.0], [1.1, 1.0], [1.1, 1.1], [1.0, 1.1]])
        p = ParticleSet.from_seeds(quad)

        def shoelace(x):
            area = 0.0
            for i in range(4):
                j = (i + 1) % 4
                area += x[i, 0] * x[j, 1] - x[j, 0] * x[i, 1]
            return abs(area) / 2

        a0 = shoelace(p.x)
        dt = 0.5 * flow.dx
        t = 0.0
        while t < 2.0 - 1e-12:
            h = min(dt, 2.0 - t)
            p = advect_particles(p, flow.velocity, t=t, dt=h, wrap=False)
            t += h
        assert abs(shoelace(p.x) - a0) / a0 <= 0.005

    def test_nonfinite_positions_raise(self):
        p = ParticleSet.from_seeds([[1.0, 1.0], [2.0, 2.0]])

        def bad(x, t):
            u = np.zeros_like(x)
            u[1] = np.inf
            return u

        with pytest.raises(ParticleAdvectionError) as exc:
            advect_particles(p, bad, t=0.0, dt=0.1)
        assert 1 in exc.value.particle_ids

    def test_rejects_nonpositive_dt(self):
        p = ParticleSet.from_seeds([[1.0, 1.0]])
        with pytest.raises(ValueError):
            advect_particles(p, lambda x, t: np.zeros_like(x), dt=0.0)


class TestSeparations:
    def test_coincident_pair(self):
        p = ParticleSet.from_seeds([[1.0, 1.0], [1.0, 1.0]], pairs=[(0, 1)])
        assert pair_separations(p)[0] == 0.0

    def test_half_period(self):
        p = ParticleSet.from_seeds([[0.0, 0.0], [np.pi, 0.0]], pairs=[(0, 1)])
        assert pair_separations(p)[0] == pytest.approx(np.pi)

    def test_minimum_image(self):
        p = ParticleSet.from_seeds(
            [[0.1, 0.0], [2 * np.pi - 0.1, 0.0]], pairs=[(0, 1)]
        )
        assert pair_separations(p)[0] == pytest.approx(0.2, abs=1e-12)

    def test_no_pairs_empty(self):
        p = ParticleSet.from_seeds([[1.0, 1.0]])
        assert pair_separations(p).size == 0

    def test_pair_index_validation(self):
        with pytest.raises(ValueError):
            ParticleSet.from_seeds([[1.0, 1.0]], pairs=[(0, 3)])
