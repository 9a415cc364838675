"""Batch front-end: simulate and diagnose runs, write all artifacts.

Artifacts per run directory:

    config_used.cfg   exact configuration with every default materialized
    snap_NNNNNN.cfs   state snapshots at the snapshot cadence
    diagnostics.csv   one row per diagnostic time, fixed column order,
                      17 significant digits
    fronts.csv        front graph samples: front, t, index, x1, f_plus, f_minus
    particles.csv     t, id, x1, x2 at the diagnostic cadence (if particles)
    report.txt        human-readable verdict referencing each criterion

Exit statuses: 0 clean, 1 config or IO error, 2 blow-up, 3 front-collapse
event, 4 front breakdown.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

import numpy as np

from .config import (
    FrontConfig,
    RunConfig,
    Tolerances,
    parse_config,
    parse_diagnose_config,
    render_config,
)
from .diagnostics import (
    BkmSample,
    bkm_snapshot,
    collision_bound,
    area_rate_residual,
    curve_kinematics_residual,
    cumulative_integral,
    shrink_window_monitor,
    strip_sup_speed,
    thickness_lower_bound,
    velocity_gradient_sup,
)
from .errors import ConfigError, FrontCollapseError, FrontEventError, GaugeError
from .expressions import compile_psi
from .fronts import extract_front_pair, find_saddles, thickness_and_area
from .grid import BicubicSampler
from .integrator import run
from .models import FrozenFlow, ModelState, TimeInterpFlow, initial_state
from .particles import ParticleSet, advect_particles, pair_separations
from .snapshots import read_snapshot, write_snapshot

EXIT_CLEAN = 0
EXIT_CONFIG = 1
EXIT_BLOWUP = 2
EXIT_FRONT_COLLAPSE = 3
EXIT_FRONT_BREAKDOWN = 4

_STATUS_EXIT = {
    "clean": EXIT_CLEAN,
    "blowup": EXIT_BLOWUP,
    "front_collapse": EXIT_FRONT_COLLAPSE,
    "front_breakdown": EXIT_FRONT_BREAKDOWN,
}


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


class FrontTrack:
    """Per-front collection of pairs, strip sups and psi-on-curve samples."""

    def __init__(self, fc: FrontConfig):
        self.fc = fc
        self.pairs = []
        self.strips = []
        self.psi_plus = []
        self.psi_minus = []

    def observe(self, scalar_field, flow: FrozenFlow, t: float, sampler=None):
        prev = self.pairs[-1] if self.pairs else None
        pair = extract_front_pair(
            scalar_field, self.fc.spec, prev, t=t, sampler=sampler
        )
        strip = strip_sup_speed(
            flow.velocity, pair, refine=self.fc.refine, dx=flow.dx, t=t
        )
        self.pairs.append(pair)
        self.strips.append(strip)
        self.psi_plus.append(flow.psi(np.stack([pair.x1, pair.f_plus], axis=-1)))
        self.psi_minus.append(flow.psi(np.stack([pair.x1, pair.f_minus], axis=-1)))


class CriteriaEngine:
    """Collects every per-time diagnostic and finalizes the criteria table."""

    def __init__(self, kind, fronts: list[FrontConfig], tol: Tolerances,
                 particle_pairs: tuple[tuple[int, int], ...] = ()):
        self.kind = kind
        self.tol = tol
        self.t: list[float] = []
        self.sup_grad_u: list[float] = []
        self.bkm: list[BkmSample] = []
        self.tracks = [FrontTrack(fc) for fc in fronts]
        self.particle_times: list[float] = []
        self.particle_positions: list[np.ndarray] = []
        self.separations: list[np.ndarray] = []
        self.saddles_t0 = None
        self._pair_keys = tuple(particle_pairs)

    def observe(self, state: ModelState, particles: ParticleSet | None = None):
        flow = FrozenFlow(state)
        scalar = state.theta if state.theta is not None else state.omega
        if self.saddles_t0 is None:
            self.saddles_t0 = find_saddles(scalar)
        self.t.append(state.t)
        self.sup_grad_u.append(velocity_gradient_sup(flow.u_field))
        self.bkm.append(bkm_snapshot(state))
        sampler = BicubicSampler(scalar) if self.tracks else None
        for track in self.tracks:
            track.observe(scalar, flow, state.t, sampler=sampler)
        if particles is not None:
            self.particle_times.append(state.t)
            self.particle_positions.append(particles.x.copy())
            self.separations.append(pair_separations(particles))

    # -- finalize ----------------------------------------------------------

    def finalize(self):
        t = np.asarray(self.t)
        cols: dict[str, np.ndarray] = {"t": t}
        nan = np.full(t.size, np.nan)

        grad_u = np.asarray(self.sup_grad_u)
        i_grad_u = cumulative_integral(t, grad_u)
        cols["sup_grad_u"] = grad_u
        cols["integral_grad_u"] = i_grad_u

        def bkm_col(attr):
            vals = [getattr(b, attr) for b in self.bkm]
            if any(v is None for v in vals):
                return None
            return np.asarray(vals, dtype=np.float64)

        sup_omega = bkm_col("sup_omega")
        sup_gt = bkm_col("sup_grad_theta")
        sup_lt = bkm_col("sup_lap_theta")
        cols["sup_omega"] = sup_omega if sup_omega is not None else nan
        cols["integral_omega"] = (
            cumulative_integral(t, sup_omega) if sup_omega is not None else nan
        )
        cols["sup_grad_theta"] = sup_gt if sup_gt is not None else nan
        i_gt = cumulative_integral(t, sup_gt) if sup_gt is not None else None
        cols["integral_grad_theta"] = i_gt if i_gt is not None else nan
        cols["double_integral_grad_theta"] = (
            cumulative_integral(t, i_gt) if i_gt is not None else nan
        )
        cols["sup_lap_theta"] = sup_lt if sup_lt is not None else nan
        cols["integral_lap_theta"] = (
            cumulative_integral(t, sup_lt) if sup_lt is not None else nan
        )

        monitors = {}
        residuals = {}
        gap_checks = {}
        for track in self.tracks:
            name = track.fc.name
            pairs = track.pairs
            n = len(pairs)
            if n == 0:
                continue
            tt = t[:n]
            sup_speed = np.array([s.value for s in track.strips])
            cols[f"{name}_sup_speed"] = _pad(sup_speed, t.size)
            cols[f"{name}_integral_sup_speed"] = _pad(
                cumulative_integral(tt, sup_speed), t.size
            )
            reports = [thickness_and_area(p) for p in pairs]
            cols[f"{name}_delta_min"] = _pad(
                np.array([r.delta_min for r in reports]), t.size
            )
            cols[f"{name}_delta_max"] = _pad(
                np.array([float(p.delta().max()) for p in pairs]), t.size
            )
            cols[f"{name}_area"] = _pad(np.array([r.area for r in reports]), t.size)

            if n >= 2:
                ar = area_rate_residual(
                    pairs,
                    psi_plus=np.asarray(track.psi_plus),
                    psi_minus=np.asarray(track.psi_minus),
                )
                ck = curve_kinematics_residual(
                    pairs,
                    psi_plus=np.asarray(track.psi_plus),
                    psi_minus=np.asarray(track.psi_minus),
                )
                residuals[name] = (ar, ck)
                cols[f"{name}_area_rate_residual"] = _pad(ar.residual, t.size)
                cols[f"{name}_curve_res_plus"] = _pad(ck.res_plus, t.size)
                cols[f"{name}_curve_res_minus"] = _pad(ck.res_minus, t.size)
            else:
                for suffix in ("area_rate_residual", "curve_res_plus", "curve_res_minus"):
                    cols[f"{name}_{suffix}"] = nan

            monitor = shrink_window_monitor(
                tt,
                sup_speed,
                pairs,
                dadt_tol=self.tol.dadt_tol,
                collapse_ratio=self.tol.collapse_ratio,
            )
            monitors[name] = monitor
            cols[f"{name}_a_tilde"] = _pad(monitor.a_tilde, t.size)
            cols[f"{name}_b_tilde"] = _pad(monitor.b_tilde, t.size)
            cols[f"{name}_window_valid"] = _pad(
                monitor.valid.astype(np.float64), t.size
            )
            cols[f"{name}_area_windowed"] = _pad(monitor.area_windowed, t.size)
            cols[f"{name}_dareadt_windowed"] = _pad(monitor.dareadt, t.size)
            cols[f"{name}_dareadt_sign"] = _pad(
                monitor.dareadt_sign.astype(np.float64), t.size
            )

            gap_checks[name] = thickness_lower_bound(
                tt,
                i_grad_u[:n],
                cols[f"{name}_delta_min"][:n],
                tol=self.tol.collision_tol,
            )

        collision = None
        if self.separations and self.separations[0].size:
            tp = np.asarray(self.particle_times)
            seps = np.asarray(self.separations)
            series = {
                f"pair_{i}_{j}": seps[:, k]
                for k, (i, j) in enumerate(self._pair_keys)
            }
            i_on_tp = np.interp(tp, t, i_grad_u)
            collision = collision_bound(
                tp, i_on_tp, series, tol=self.tol.collision_tol
            )

        return CriteriaReport(
            columns=cols,
            monitors=monitors,
            residuals=residuals,
            gap_checks=gap_checks,
            collision=collision,
            saddles=self.saddles_t0,
            kind=self.kind,
        )


def _pad(arr: np.ndarray, size: int) -> np.ndarray:
    if arr.size == size:
        return arr
    out = np.full(size, np.nan)
    out[: arr.size] = arr
    return out


class CriteriaReport:
    def __init__(self, *, columns, monitors, residuals, gap_checks, collision,
                 saddles, kind):
        self.columns = columns
        self.monitors = monitors
        self.residuals = residuals
        self.gap_checks = gap_checks
        self.collision = collision
        self.saddles = saddles
        self.kind = kind

    def write_csv(self, path) -> None:
        names = list(self.columns)
        rows = [",".join(names)]
        n = self.columns["t"].size
        for i in range(n):
            rows.append(",".join(_fmt(self.columns[c][i]) for c in names))
        Path(path).write_text("\n".join(rows) + "\n", encoding="ascii")

    def report_text(self, *, status: str, message: str = "") -> str:
        c = self.columns
        t = c["t"]
        lines = ["frontwatch verdict report", "=" * 40]
        lines.append(f"model: {self.kind.value}")
        lines.append(f"time range: [{_fmt(t[0])}, {_fmt(t[-1])}], {t.size} diagnostic times")
        lines.append(f"run status: {status}" + (f" ({message})" if message else ""))
        lines.append("")
        lines.append("singularity monitors (BKM-type time integrals):")
        lines.append(
            f"  integral of sup|grad u| dt = {_fmt(c['integral_grad_u'][-1])}"
            "  [trajectory-collision rate bound]"
        )
        kind = self.kind.value
        if kind == "mhd":
            total = c["integral_omega"][-1] + c["integral_lap_theta"][-1]
            lines.append(
                f"  integral of (sup|omega| + sup|lap theta|) dt = {_fmt(total)}"
                "  [ideal-MHD criterion]"
            )
        if kind in ("qg", "passive"):
            lines.append(
                f"  integral of sup|grad theta| dt = {_fmt(c['integral_grad_theta'][-1])}"
                "  [scalar-gradient criterion]"
            )
        if kind == "boussinesq":
            lines.append(
                f"  integral of sup|omega| dt = {_fmt(c['integral_omega'][-1])}"
                "  [Boussinesq vorticity criterion]"
            )
            lines.append(
                "  double integral of sup|grad theta| ds dt = "
                f"{_fmt(c['double_integral_grad_theta'][-1])}"
                "  [Boussinesq gradient criterion]"
            )
        if kind == "euler":
            drift = abs(c["sup_omega"][-1] - c["sup_omega"][0]) / max(
                abs(c["sup_omega"][0]), 1e-300
            )
            lines.append(
                f"  sup|omega| drift = {_fmt(drift)} (advected invariant; "
                "should stay near 0)"
            )
        lines.append("")

        if self.collision is not None:
            status_txt = "OK" if self.collision.ok else (
                f"{len(self.collision.violations)} violation(s)"
            )
            lines.append(
                "trajectory collision bound "
                "(separation >= initial * exp(-integral sup|grad u|) * (1 - tol)): "
                + status_txt
            )
            for v in self.collision.violations[:10]:
                lines.append(
                    f"  {v.key}: sep {_fmt(v.value)} < bound {_fmt(v.bound)} "
                    f"at t = {_fmt(v.t)}"
                )
            lines.append("")

        for name, monitor in self.monitors.items():
            lines.append(f"front '{name}':")
            iu = c[f"{name}_integral_sup_speed"][-1]
            lines.append(
                f"  controlled velocity growth integral (strip sup-speed) = {_fmt(iu)}"
            )
            lines.append(
                f"  gap: delta_min start {_fmt(monitor.delta_min_start)}, "
                f"end {_fmt(monitor.delta_min_end)}, "
                f"max over run {_fmt(np.nanmax(c[f'{name}_delta_max']))}"
            )
            gap_chk = self.gap_checks.get(name)
            if gap_chk is not None:
                lines.append(
                    "  gap exponential lower bound: "
                    + ("OK" if gap_chk.ok else f"{len(gap_chk.violations)} violation(s)")
                    + f" (min margin {_fmt(gap_chk.min_margin)})"
                )
            pair_res = self.residuals.get(name)
            if pair_res is not None:
                ar, ck = pair_res
                lines.append(
                    f"  area-rate identity residual (max |dA/dt - psi endpoint sum|) = "
                    f"{_fmt(ar.max_abs())}"
                )
                lines.append(
                    f"  curve kinematics residual (max |d psi/dx1 - df/dt|) = "
                    f"{_fmt(ck.max_abs())}"
                )
            t_star = "-" if monitor.t_star is None else _fmt(monitor.t_star)
            mdadt = (
                "-" if monitor.min_dareadt_after_t_star is None
                else _fmt(monitor.min_dareadt_after_t_star)
            )
            lines.append(
                f"  shrinking window: t* = {t_star}, min windowed dA/dt after t* = {mdadt}"
            )
            lines.append(f"  verdict: {monitor.verdict}")
            lines.append("")

        if self.saddles is not None:
            lines.append(
                f"hyperbolic saddle candidates in the tracked scalar at t0: "
                f"{len(self.saddles)}"
            )
            for p in list(self.saddles)[:12]:
                lines.append(
                    f"  ({_fmt(p.x1)}, {_fmt(p.x2)}) value {_fmt(p.value)} "
                    f"hessian det {_fmt(p.hess_det)}"
                )
        return "\n".join(lines) + "\n"


def _write_fronts_csv(path, tracks: list[FrontTrack]) -> None:
    rows = ["front,t,index,x1,f_plus,f_minus"]
    for track in tracks:
        for pair in track.pairs:
            for i in range(pair.m):
                rows.append(
                    f"{track.fc.name},{_fmt(pair.t)},{i},{_fmt(pair.x1[i])},"
                    f"{_fmt(pair.f_plus[i])},{_fmt(pair.f_minus[i])}"
                )
    Path(path).write_text("\n".join(rows) + "\n", encoding="ascii")


def _write_particles_csv(path, times, positions) -> None:
    rows = ["t,id,x1,x2"]
    for t, pos in zip(times, positions):
        for pid in range(pos.shape[0]):
            rows.append(f"{_fmt(t)},{pid},{_fmt(pos[pid, 0])},{_fmt(pos[pid, 1])}")
    Path(path).write_text("\n".join(rows) + "\n", encoding="ascii")


def _resolve_outdir(outdir: str, override: str | None) -> Path:
    if override:
        return Path(override)
    root = os.environ.get("FRONTWATCH_OUTPUT_ROOT")
    p = Path(outdir)
    if root and not p.is_absolute():
        return Path(root) / p
    return p


def _build_initial_state(cfg: RunConfig) -> ModelState:
    psi_fn = compile_psi(cfg.psi_source) if cfg.psi_source is not None else None
    if cfg.initial_file is not None:
        state = read_snapshot(cfg.initial_file, hyper=cfg.hyper)
        if state.kind is not cfg.kind:
            raise ConfigError(
                f"initial.file: snapshot model {state.kind.value!r} does not "
                f"match configured kind {cfg.kind.value!r}"
            )
        if state.grid != cfg.grid:
            raise ConfigError(
                f"initial.file: snapshot grid {state.grid!r} does not match "
                f"configured grid {cfg.grid!r}"
            )
        return state
    try:
        return initial_state(
            cfg.scenario,
            cfg.kind,
            cfg.grid,
            amplitude=cfg.amplitude,
            psi_fn=psi_fn,
            psi_source=cfg.psi_source,
            hyper=cfg.hyper,
        )
    except KeyError as exc:
        raise ConfigError(f"initial.scenario: {exc.args[0]}") from None


def command_simulate(config_path: str, outdir_override: str | None = None) -> int:
    try:
        text = Path(config_path).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read config {config_path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(text)
        state0 = _build_initial_state(cfg)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    outdir = _resolve_outdir(cfg.outdir, outdir_override)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "config_used.cfg").write_text(render_config(cfg), encoding="utf-8")

    engine = CriteriaEngine(
        cfg.kind, cfg.fronts, cfg.tolerances, particle_pairs=cfg.particle_pairs
    )

    particles = None
    if cfg.particle_seeds is not None:
        particles = ParticleSet.from_seeds(cfg.particle_seeds, cfg.particle_pairs)

    snap_counter = [0]
    flow_cache: dict[float, FrozenFlow] = {}

    def on_snapshot(s: ModelState):
        write_snapshot(outdir / f"snap_{snap_counter[0]:06d}.cfs", s)
        snap_counter[0] += 1

    def on_diagnose(s: ModelState):
        engine.observe(s, particles=particles)

    def on_step(prev: ModelState, new: ModelState):
        nonlocal particles
        if particles is None:
            return
        f0 = flow_cache.pop(prev.t, None) or FrozenFlow(prev)
        f1 = FrozenFlow(new)
        flow_cache.clear()
        flow_cache[new.t] = f1
        u = TimeInterpFlow(f0, f1)
        particles = advect_particles(
            particles, u.velocity, t=prev.t, dt=new.t - prev.t
        )

    result = run(
        state0,
        cfg.control,
        on_snapshot=on_snapshot,
        on_diagnose=on_diagnose,
        on_step=on_step,
    )

    if result.status == "blowup":
        try:
            write_snapshot(outdir / "blowup_state.cfs", result.state)
        except ValueError:
            pass

    report = engine.finalize()
    report.write_csv(outdir / "diagnostics.csv")
    _write_fronts_csv(outdir / "fronts.csv", engine.tracks)
    if engine.particle_times:
        _write_particles_csv(
            outdir / "particles.csv", engine.particle_times, engine.particle_positions
        )
    (outdir / "report.txt").write_text(
        report.report_text(status=result.status, message=result.message),
        encoding="utf-8",
    )
    if result.message:
        print(f"{result.status}: {result.message}", file=sys.stderr)
    return _STATUS_EXIT[result.status]


def command_diagnose(
    snapshot_dir: str, front_config_path: str, outdir_override: str | None = None
) -> int:
    snapdir = Path(snapshot_dir)
    try:
        text = Path(front_config_path).read_text(encoding="utf-8")
        fronts, tol, kind_override = parse_diagnose_config(text)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    paths = sorted(snapdir.glob("snap_*.cfs"))
    if not paths:
        print(f"error: no snap_*.cfs files in {snapdir}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        states = [read_snapshot(p) for p in paths]
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    kinds = {s.kind for s in states}
    if len(kinds) > 1:
        print("error: snapshots mix model kinds", file=sys.stderr)
        return EXIT_CONFIG
    kind = states[0].kind
    if kind_override is not None and kind_override is not kind:
        print(
            f"error: config kind {kind_override.value!r} does not match "
            f"snapshot kind {kind.value!r}",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    times = [s.t for s in states]
    if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
        print("error: snapshot times are not strictly increasing", file=sys.stderr)
        return EXIT_CONFIG

    fronts = [
        dataclasses.replace(
            fc, spec=dataclasses.replace(fc.spec, m=2 * states[0].grid.n1)
        )
        if fc.spec.m is None
        else fc
        for fc in fronts
    ]

    outdir = _resolve_outdir(str(snapdir / "diagnose"), outdir_override)
    outdir.mkdir(parents=True, exist_ok=True)

    engine = CriteriaEngine(kind, fronts, tol)
    status, message = "clean", ""
    try:
        for s in states:
            engine.observe(s)
    except FrontCollapseError as exc:
        status, message = "front_collapse", str(exc)
    except FrontEventError as exc:
        status, message = "front_breakdown", str(exc)
    except GaugeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    report = engine.finalize()
    report.write_csv(outdir / "diagnostics.csv")
    _write_fronts_csv(outdir / "fronts.csv", engine.tracks)
    (outdir / "report.txt").write_text(
        report.report_text(status=status, message=message), encoding="utf-8"
    )
    if message:
        print(f"{status}: {message}", file=sys.stderr)
    return _STATUS_EXIT[status]


def command_scenarios() -> int:
    from .models import SCENARIOS

    width = max(len(n) for n in SCENARIOS)
    for name in sorted(SCENARIOS):
        desc, _ = SCENARIOS[name]
        print(f"{name:<{width}}  {desc}")
    return EXIT_CLEAN


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="frontwatch",
        description=(
            "2D periodic pseudo-spectral solver for convected scalars with "
            "sharp-front collapse diagnostics."
        ),
        epilog=(
            "Exit statuses: 0 clean, 1 config/IO error, 2 blow-up, "
            "3 front-collapse event, 4 front breakdown.  The environment "
            "variable FRONTWATCH_OUTPUT_ROOT prefixes relative output "
            "directories."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a configured simulation")
    p_sim.add_argument("config", help="path to the run configuration file")
    p_sim.add_argument("--outdir", default=None, help="override the output directory")

    p_diag = sub.add_parser(
        "diagnose", help="recompute all criteria from stored snapshots"
    )
    p_diag.add_argument("snapshot_dir", help="directory holding snap_*.cfs files")
    p_diag.add_argument(
        "front_config",
        help="config file with [front] sections (and optional [model], [tolerances])",
    )
    p_diag.add_argument("--outdir", default=None, help="override the output directory")

    sub.add_parser("scenarios", help="list builtin initial-data scenarios")

    args = parser.parse_args(argv)
    if args.command == "simulate":
        return command_simulate(args.config, args.outdir)
    if args.command == "diagnose":
        return command_diagnose(args.snapshot_dir, args.front_config, args.outdir)
    if args.command == "scenarios":
        return command_scenarios()
    parser.error(f"unknown command {args.command!r}")
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
