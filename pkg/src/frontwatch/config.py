"""Run configuration: INI-style key/value text with flat sections.

Schema (defaults in parentheses; see README for a worked example):

    [run]        t_end (required), cfl (0.5), dt_max (inf),
                 snapshot_every (t_end/4), diagnose_every (t_end/20),
                 outdir (run_out)
    [model]      kind (required: passive|euler|qg|boussinesq|mhd),
                 psi (required for passive), nu (0), p (4)
    [grid]       n1 (required), n2 (n1)
    [initial]    scenario (zero) or file (snapshot path), amplitude (1)
    [front]      level_plus, level_minus, a, b (all required per section),
                 seed_plus (0), seed_minus (0), m (2*n1), refine (2);
                 extra sections named [front.NAME] add more tracked pairs
    [particles]  seeds ("x1 x2; x1 x2; ..."), pairs ("i j; i j; ...")
    [tolerances] collision_tol (0.02), dadt_tol (1e-6),
                 collapse_ratio (0.1), max_slope (1e3)

Unknown sections or keys are rejected with the offending path.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .expressions import compile_psi
from .fronts import FrontSpec
from .grid import GridSpec
from .integrator import StepControl
from .models import HYPER_OFF, HyperdissipationParams, ModelKind

_RUN_KEYS = {"t_end", "cfl", "dt_max", "snapshot_every", "diagnose_every", "outdir"}
_MODEL_KEYS = {"kind", "psi", "nu", "p"}
_GRID_KEYS = {"n1", "n2"}
_INITIAL_KEYS = {"scenario", "file", "amplitude"}
_FRONT_KEYS = {"level_plus", "level_minus", "a", "b", "seed_plus", "seed_minus",
               "m", "refine"}
_PARTICLE_KEYS = {"seeds", "pairs"}
_TOL_KEYS = {"collision_tol", "dadt_tol", "collapse_ratio", "max_slope"}


@dataclass(frozen=True)
class Tolerances:
    collision_tol: float = 0.02
    dadt_tol: float = 1e-6
    collapse_ratio: float = 0.1
    max_slope: float = 1e3


@dataclass(frozen=True)
class FrontConfig:
    name: str
    spec: FrontSpec
    refine: int = 2


@dataclass
class RunConfig:
    kind: ModelKind
    grid: GridSpec
    control: StepControl
    outdir: str = "run_out"
    psi_source: str | None = None
    hyper: HyperdissipationParams = HYPER_OFF
    scenario: str | None = "zero"
    initial_file: str | None = None
    amplitude: float = 1.0
    fronts: list[FrontConfig] = field(default_factory=list)
    particle_seeds: np.ndarray | None = None
    particle_pairs: tuple[tuple[int, int], ...] = ()
    tolerances: Tolerances = Tolerances()


def _parser(text: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    return cp


def _check_keys(cp, section: str, allowed: set[str]) -> None:
    for key in cp.options(section):
        if key not in allowed:
            raise ConfigError(
                f"{section}.{key}: unknown key (allowed: {', '.join(sorted(allowed))})"
            )


def _get(cp, section, key, conv, default=None, required=False):
    if not cp.has_option(section, key):
        if required:
            raise ConfigError(f"{section}.{key}: required key missing")
        return default
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r} ({exc})") from None


def _positive_int(raw: str) -> int:
    v = int(raw)
    if v <= 0:
        raise ValueError("must be positive")
    return v


def _points(raw: str) -> np.ndarray:
    pts = []
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split()
        if len(parts) != 2:
            raise ValueError(f"point {chunk!r} is not 'x1 x2'")
        pts.append((float(parts[0]), float(parts[1])))
    if not pts:
        raise ValueError("no points given")
    return np.array(pts)


def _index_pairs(raw: str) -> tuple[tuple[int, int], ...]:
    pairs = []
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split()
        if len(parts) != 2:
            raise ValueError(f"pair {chunk!r} is not 'i j'")
        pairs.append((int(parts[0]), int(parts[1])))
    return tuple(pairs)


def _seed(raw: str):
    parts = raw.split(";")
    if len(parts) == 1 and len(parts[0].split()) == 1:
        return float(parts[0])
    return _points(raw)


def _front_sections(cp) -> list[str]:
    return [s for s in cp.sections() if s == "front" or s.startswith("front.")]


def _parse_front(cp, section: str, default_m: int | None) -> FrontConfig:
    _check_keys(cp, section, _FRONT_KEYS)
    try:
        spec = FrontSpec(
            level_plus=_get(cp, section, "level_plus", float, required=True),
            level_minus=_get(cp, section, "level_minus", float, required=True),
            a=_get(cp, section, "a", float, required=True),
            b=_get(cp, section, "b", float, required=True),
            seed_plus=_get(cp, section, "seed_plus", _seed, default=0.0),
            seed_minus=_get(cp, section, "seed_minus", _seed, default=0.0),
            m=_get(cp, section, "m", _positive_int, default=default_m),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{section}: {exc}") from None
    refine = _get(cp, section, "refine", _positive_int, default=2)
    name = section.replace(".", "_") if section != "front" else "front0"
    return FrontConfig(name=name, spec=spec, refine=refine)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a simulation config; all defaults materialized."""
    cp = _parser(text)

    missing = []
    if not cp.has_option("model", "kind"):
        missing.append("model.kind")
    if not cp.has_option("grid", "n1"):
        missing.append("grid.n1")
    if not cp.has_option("run", "t_end"):
        missing.append("run.t_end")
    if missing:
        raise ConfigError("required keys missing: " + ", ".join(missing))

    known = {"run", "model", "grid", "initial", "particles", "tolerances"}
    for section in cp.sections():
        if section not in known and section not in _front_sections(cp):
            raise ConfigError(f"{section}: unknown section")

    _check_keys(cp, "run", _RUN_KEYS)
    _check_keys(cp, "model", _MODEL_KEYS)
    _check_keys(cp, "grid", _GRID_KEYS)
    if cp.has_section("initial"):
        _check_keys(cp, "initial", _INITIAL_KEYS)
    if cp.has_section("particles"):
        _check_keys(cp, "particles", _PARTICLE_KEYS)
    if cp.has_section("tolerances"):
        _check_keys(cp, "tolerances", _TOL_KEYS)

    try:
        kind = ModelKind(cp.get("model", "kind"))
    except ValueError:
        raise ConfigError(
            f"model.kind: unknown kind {cp.get('model', 'kind')!r} "
            f"(one of {', '.join(k.value for k in ModelKind)})"
        ) from None

    psi_source = _get(cp, "model", "psi", str, default=None)
    if kind is ModelKind.PASSIVE:
        if psi_source is None:
            raise ConfigError("model.psi: required for the passive model")
        try:
            compile_psi(psi_source)
        except ValueError as exc:
            raise ConfigError(f"model.psi: {exc}") from None
    nu = _get(cp, "model", "nu", float, default=0.0)
    p = _get(cp, "model", "p", _positive_int, default=4)
    try:
        hyper = HyperdissipationParams(nu=nu, p=p)
    except ValueError as exc:
        raise ConfigError(f"model.nu/p: {exc}") from None

    try:
        grid = GridSpec(
            _get(cp, "grid", "n1", _positive_int, required=True),
            _get(cp, "grid", "n2", _positive_int, default=None),
        )
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from None

    t_end = _get(cp, "run", "t_end", float, required=True)
    if t_end < 0:
        raise ConfigError("run.t_end: must be >= 0")
    snap_default = t_end / 4 if t_end > 0 else None
    diag_default = t_end / 20 if t_end > 0 else None
    try:
        control = StepControl(
            t_end=t_end,
            cfl=_get(cp, "run", "cfl", float, default=0.5),
            dt_max=_get(cp, "run", "dt_max", float, default=math.inf),
            snapshot_every=_get(cp, "run", "snapshot_every", float, default=snap_default),
            diagnose_every=_get(cp, "run", "diagnose_every", float, default=diag_default),
        )
    except ValueError as exc:
        raise ConfigError(f"run: {exc}") from None

    scenario = _get(cp, "initial", "scenario", str, default=None) if cp.has_section("initial") else None
    initial_file = _get(cp, "initial", "file", str, default=None) if cp.has_section("initial") else None
    amplitude = _get(cp, "initial", "amplitude", float, default=1.0) if cp.has_section("initial") else 1.0
    if scenario is not None and initial_file is not None:
        raise ConfigError("initial: give either scenario or file, not both")
    if scenario is None and initial_file is None:
        scenario = "zero"

    fronts = [
        _parse_front(cp, s, default_m=2 * grid.n1) for s in sorted(_front_sections(cp))
    ]

    particle_seeds = None
    particle_pairs: tuple[tuple[int, int], ...] = ()
    if cp.has_section("particles"):
        particle_seeds = _get(cp, "particles", "seeds", _points, default=None)
        particle_pairs = _get(cp, "particles", "pairs", _index_pairs, default=())
        if particle_pairs and particle_seeds is None:
            raise ConfigError("particles.pairs: pairs given without seeds")
        if particle_seeds is not None:
            n = particle_seeds.shape[0]
            for i, j in particle_pairs:
                if not (0 <= i < n and 0 <= j < n):
                    raise ConfigError(
                        f"particles.pairs: pair ({i}, {j}) out of range for {n} seeds"
                    )

    tol = Tolerances(
        collision_tol=_get(cp, "tolerances", "collision_tol", float, default=0.02)
        if cp.has_section("tolerances") else 0.02,
        dadt_tol=_get(cp, "tolerances", "dadt_tol", float, default=1e-6)
        if cp.has_section("tolerances") else 1e-6,
        collapse_ratio=_get(cp, "tolerances", "collapse_ratio", float, default=0.1)
        if cp.has_section("tolerances") else 0.1,
        max_slope=_get(cp, "tolerances", "max_slope", float, default=1e3)
        if cp.has_section("tolerances") else 1e3,
    )

    return RunConfig(
        kind=kind,
        grid=grid,
        control=control,
        outdir=_get(cp, "run", "outdir", str, default="run_out"),
        psi_source=psi_source,
        hyper=hyper,
        scenario=scenario,
        initial_file=initial_file,
        amplitude=amplitude,
        fronts=fronts,
        particle_seeds=particle_seeds,
        particle_pairs=particle_pairs,
        tolerances=tol,
    )


def parse_diagnose_config(text: str) -> tuple[list[FrontConfig], Tolerances, ModelKind | None]:
    """Parse the reduced config used by diagnose: fronts, tolerances, kind.

    The model kind is optional here (snapshots carry it); when present it
    is cross-checked against the snapshot headers.
    """
    cp = _parser(text)
    known = {"model", "tolerances"}
    for section in cp.sections():
        if section not in known and section not in _front_sections(cp):
            raise ConfigError(f"{section}: unknown section for diagnose")
    kind = None
    if cp.has_section("model"):
        _check_keys(cp, "model", {"kind"})
        try:
            kind = ModelKind(cp.get("model", "kind"))
        except ValueError:
            raise ConfigError(
                f"model.kind: unknown kind {cp.get('model', 'kind')!r}"
            ) from None
    fronts = [_parse_front(cp, s, default_m=None) for s in sorted(_front_sections(cp))]
    if not fronts:
        raise ConfigError("diagnose config needs at least one [front] section")
    tol = Tolerances()
    if cp.has_section("tolerances"):
        _check_keys(cp, "tolerances", _TOL_KEYS)
        tol = Tolerances(
            collision_tol=_get(cp, "tolerances", "collision_tol", float, default=0.02),
            dadt_tol=_get(cp, "tolerances", "dadt_tol", float, default=1e-6),
            collapse_ratio=_get(cp, "tolerances", "collapse_ratio", float, default=0.1),
            max_slope=_get(cp, "tolerances", "max_slope", float, default=1e3),
        )
    return fronts, tol, kind


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _seed_text(seed) -> str:
    if np.ndim(seed) == 0:
        return _fmt(float(seed))
    return "; ".join(f"{p[0]:.17g} {p[1]:.17g}" for p in np.asarray(seed))


def render_config(cfg: RunConfig) -> str:
    """Canonical echo of a config with every default materialized."""
    lines = [
        "[run]",
        f"t_end = {_fmt(cfg.control.t_end)}",
        f"cfl = {_fmt(cfg.control.cfl)}",
        f"dt_max = {_fmt(cfg.control.dt_max)}",
    ]
    if cfg.control.snapshot_every is not None:
        lines.append(f"snapshot_every = {_fmt(cfg.control.snapshot_every)}")
    if cfg.control.diagnose_every is not None:
        lines.append(f"diagnose_every = {_fmt(cfg.control.diagnose_every)}")
    lines.append(f"outdir = {cfg.outdir}")
    lines += ["", "[model]", f"kind = {cfg.kind.value}"]
    if cfg.psi_source is not None:
        lines.append(f"psi = {cfg.psi_source}")
    lines += [f"nu = {_fmt(cfg.hyper.nu)}", f"p = {cfg.hyper.p}"]
    lines += ["", "[grid]", f"n1 = {cfg.grid.n1}", f"n2 = {cfg.grid.n2}"]
    lines += ["", "[initial]"]
    if cfg.initial_file is not None:
        lines.append(f"file = {cfg.initial_file}")
    else:
        lines.append(f"scenario = {cfg.scenario}")
    lines.append(f"amplitude = {_fmt(cfg.amplitude)}")
    for fc in cfg.fronts:
        section = "front" if fc.name == "front0" else fc.name.replace("front_", "front.")
        lines += [
            "",
            f"[{section}]",
            f"level_plus = {_fmt(fc.spec.level_plus)}",
            f"level_minus = {_fmt(fc.spec.level_minus)}",
            f"a = {_fmt(fc.spec.a)}",
            f"b = {_fmt(fc.spec.b)}",
            f"seed_plus = {_seed_text(fc.spec.seed_plus)}",
            f"seed_minus = {_seed_text(fc.spec.seed_minus)}",
            f"m = {fc.spec.m}",
            f"refine = {fc.refine}",
        ]
    if cfg.particle_seeds is not None:
        lines += [
            "",
            "[particles]",
            "seeds = " + "; ".join(f"{p[0]:.17g} {p[1]:.17g}" for p in cfg.particle_seeds),
        ]
        if cfg.particle_pairs:
            lines.append("pairs = " + "; ".join(f"{i} {j}" for i, j in cfg.particle_pairs))
    t = cfg.tolerances
    lines += [
        "",
        "[tolerances]",
        f"collision_tol = {_fmt(t.collision_tol)}",
        f"dadt_tol = {_fmt(t.dadt_tol)}",
        f"collapse_ratio = {_fmt(t.collapse_ratio)}",
        f"max_slope = {_fmt(t.max_slope)}",
    ]
    return "\n".join(lines) + "\n"
