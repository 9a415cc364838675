"""Time stepping: classical RK4 under a CFL constraint, with hooks.

The run loop is sequential and deterministic: identical inputs produce
bit-identical trajectories and hook invocation times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BlowUpError, FrontCollapseError, FrontEventError
from .models import ModelState, Tendency, tendency, velocity_of_state

EPS_SPEED = 1e-12
_EVENT_TOL = 1e-9


@dataclass(frozen=True)
class StepControl:
    """Step-size and cadence policy for a run.

    A CFL-stable step below dt_min is reported as blow-up: the CFL
    condition makes dt collapse when the velocity diverges, which would
    otherwise stall the loop long before values overflow.
    """

    t_end: float
    cfl: float = 0.5
    dt_max: float = math.inf
    dt_min: float = 1e-10
    blowup_sup: float = 1e8
    snapshot_every: float | None = None
    diagnose_every: float | None = None

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must be in (0, 1]")
        if self.t_end < 0.0:
            raise ValueError("t_end must be >= 0")
        if self.dt_max <= 0.0:
            raise ValueError("dt_max must be > 0")
        if not 0.0 < self.dt_min < self.dt_max:
            raise ValueError("dt_min must be in (0, dt_max)")
        if self.blowup_sup <= 0.0:
            raise ValueError("blowup_sup must be > 0")
        for name in ("snapshot_every", "diagnose_every"):
            v = getattr(self, name)
            if v is not None and v <= 0.0:
                raise ValueError(f"{name} must be > 0")


def stable_dt(s: ModelState, ctl: StepControl) -> float:
    """dt = min(dt_max, cfl * dx / max(sup|u|, eps)).

    With hyperdissipation active, dt is additionally capped so that
    nu * k_max^(2p) * dt <= 1/2 over the retained (dealiased) band.
    """
    u, _ = velocity_of_state(s)
    dt = min(ctl.dt_max, ctl.cfl * s.grid.dx_min / max(u.max_speed(), EPS_SPEED))
    if s.hyper.nu > 0:
        ksq_max = float(s.grid.ksq[s.grid.dealias_mask].max())
        dt = min(dt, 0.5 / (s.hyper.nu * ksq_max**s.hyper.p))
    return dt


def rk4_step(f: Callable, t: float, y, dt: float):
    """One classical RK4 step for dy/dt = f(t, y); y is a float or ndarray."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _apply(s: ModelState, tend: Tendency, h: float, t: float) -> ModelState:
    arrays = {name: getattr(s, name).values + h * d for name, d in tend.items()}
    for name, arr in arrays.items():
        if not np.isfinite(arr).all():
            raise BlowUpError(
                f"non-finite values in {name} at t = {t:.6g}", last_state=s
            )
    return s.with_fields(t, **arrays)


def step_rk4(s: ModelState, dt: float) -> ModelState:
    """Advance all prognostic fields by one RK4 step of size dt."""
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    t = s.t
    k1 = tendency(s)
    k2 = tendency(_apply(s, k1, 0.5 * dt, t + 0.5 * dt))
    k3 = tendency(_apply(s, k2, 0.5 * dt, t + 0.5 * dt))
    k4 = tendency(_apply(s, k3, dt, t + dt))
    combo = Tendency(
        dtheta=_rk4_combine(k1.dtheta, k2.dtheta, k3.dtheta, k4.dtheta),
        domega=_rk4_combine(k1.domega, k2.domega, k3.domega, k4.domega),
    )
    return _apply(s, combo, dt / 6.0, t + dt)


def _rk4_combine(a, b, c, d):
    if a is None:
        return None
    return a + 2.0 * b + 2.0 * c + d


@dataclass
class RunResult:
    state: ModelState
    status: str = "clean"  # clean | blowup | front_collapse | front_breakdown
    message: str = ""
    n_steps: int = 0
    snapshot_times: list = field(default_factory=list)
    diagnose_times: list = field(default_factory=list)


def run(
    s0: ModelState,
    ctl: StepControl,
    *,
    on_snapshot: Callable[[ModelState], None] | None = None,
    on_diagnose: Callable[[ModelState], None] | None = None,
    on_step: Callable[[ModelState, ModelState], None] | None = None,
) -> RunResult:
    """Advance s0 to t_end, firing cadenced hooks; never steps past an event.

    Hooks fire at t = t0 and then at integer multiples of their interval;
    the step size is clipped so hook times are hit exactly.  A blow-up or
    a front event raised by a hook halts the run; the result carries the
    last finite state and a status string.
    """
    res = RunResult(state=s0)
    t0 = s0.t
    t_end = t0 + ctl.t_end
    tol = _EVENT_TOL * max(1.0, abs(t_end))

    def next_time(every: float | None, k: int) -> float:
        return math.inf if every is None else t0 + k * every

    snap_k = diag_k = 0
    try:
        if on_snapshot is not None:
            on_snapshot(s0)
            res.snapshot_times.append(s0.t)
        snap_k = 1
        if on_diagnose is not None:
            on_diagnose(s0)
            res.diagnose_times.append(s0.t)
        diag_k = 1

        state = s0
        while t_end - state.t > tol:
            dt = stable_dt(state, ctl)
            if dt < ctl.dt_min:
                raise BlowUpError(
                    f"CFL-stable step {dt:.3e} fell below dt_min {ctl.dt_min:.3e} "
                    f"at t = {state.t:.6g}: velocity blow-up",
                    last_state=state,
                )
            horizon = min(
                t_end,
                next_time(ctl.snapshot_every, snap_k),
                next_time(ctl.diagnose_every, diag_k),
            )
            dt = min(dt, horizon - state.t)
            new = step_rk4(state, dt)
            sup = max(
                float(np.abs(f.values).max()) for f in new.fields().values()
            )
            if sup > ctl.blowup_sup:
                raise BlowUpError(
                    f"field magnitude {sup:.3e} exceeded the sanity bound "
                    f"{ctl.blowup_sup:.3e} at t = {new.t:.6g}",
                    last_state=state,
                )
            res.n_steps += 1
            if on_step is not None:
                on_step(state, new)
            state = new
            res.state = state
            if on_snapshot is not None and (
                state.t >= next_time(ctl.snapshot_every, snap_k) - tol
            ):
                on_snapshot(state)
                res.snapshot_times.append(state.t)
                snap_k += 1
            if on_diagnose is not None and (
                state.t >= next_time(ctl.diagnose_every, diag_k) - tol
            ):
                on_diagnose(state)
                res.diagnose_times.append(state.t)
                diag_k += 1
    except BlowUpError as e:
        res.status = "blowup"
        res.message = str(e)
        if e.last_state is not None:
            res.state = e.last_state
    except FrontEventError as e:
        res.status = "front_collapse" if isinstance(e, FrontCollapseError) else "front_breakdown"
        res.message = str(e)
    return res
