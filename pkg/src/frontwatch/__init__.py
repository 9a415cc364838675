"""frontwatch: 2D periodic pseudo-spectral solver for convected scalars
with sharp-front collapse diagnostics."""

from .errors import (
    BlowUpError,
    ConfigError,
    FrontBreakdownError,
    FrontCollapseError,
    FrontEventError,
    FrontLostError,
    GaugeError,
    ParticleAdvectionError,
)
from .grid import (
    BicubicSampler,
    FourierSampler,
    GridSpec,
    RealField,
    SpectralField,
    VectorField,
    VectorSampler,
    dealias,
    derivative,
    divergence_max,
    invert_elliptic,
    perp_gradient,
    sample_offgrid,
    to_real,
    to_spectral,
    wrap_points,
)
from .models import (
    SCENARIOS,
    FrozenFlow,
    HyperdissipationParams,
    ModelKind,
    ModelState,
    Tendency,
    TimeInterpFlow,
    initial_state,
    tendency,
    velocity_of_state,
)
from .integrator import RunResult, StepControl, rk4_step, run, stable_dt, step_rk4
from .fronts import (
    FrontGraphPair,
    FrontSpec,
    SaddlePoint,
    SaddleReport,
    ThicknessReport,
    advect_front_pair,
    check_ordering,
    extract_front_pair,
    find_saddles,
    thickness_and_area,
)
from .particles import ParticleSet, advect_particles, pair_separations
from .diagnostics import (
    BkmSample,
    BoundCheckReport,
    CurveResidualSeries,
    ResidualSeries,
    ShrinkWindowReport,
    StripSupResult,
    area_rate_residual,
    bkm_snapshot,
    collision_bound,
    cumulative_integral,
    curve_kinematics_residual,
    shrink_window_monitor,
    strip_sup_speed,
    thickness_lower_bound,
    velocity_gradient_sup,
)
from .expressions import compile_psi
from .snapshots import read_snapshot, write_snapshot
from .config import FrontConfig, RunConfig, Tolerances, parse_config, render_config

__version__ = "0.1.0"
