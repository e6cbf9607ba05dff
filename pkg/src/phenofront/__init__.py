"""Finite-volume simulation of phenotype-structured front propagation.

A population density n(t, x, y) structured by space x and a motility trait y
evolves by nonlocal advection (velocity -mu(y) d_x rho, where rho is the
trait-integrated density), logistic-type growth with fitness r(y) - rho, and
small diffusion along the trait.  The package provides an implicit
finite-volume time-splitting solver for the stiff scaled regime, front
diagnostics (level-set tracking, speed fits, trait statistics, a
curvature-based spreading-speed bound), randomized verification suites, and a
CLI that writes self-describing artifact directories.
"""
from .grid import (
    DensityField,
    Grid,
    RhoProfile,
    compute_rho,
    read_snapshot,
    total_mass,
    write_snapshot,
)
from .model import (
    ConfigError,
    ModelSpec,
    RationalFunction,
    RunConfig,
    SolverTolerances,
    apply_overrides,
    config_from_dict,
    config_to_dict,
    eval_fitness,
    eval_growth_rate,
    eval_mobility,
    initial_density,
    preset,
    preset_names,
)
from .solver import (
    AdvectionSystem,
    BoundaryGuardError,
    LevelTrack,
    LinearSolveError,
    PicardConvergenceError,
    RootSolveError,
    RunSummary,
    Simulation,
    SolverError,
    StepReport,
    advance,
    advection_diffusion_step,
    assemble_advection_system,
    reaction_rho_root,
    reaction_step,
    run,
)
from .diagnostics import (
    AccelerationResult,
    DiagnosticsError,
    FrontDiagnostics,
    SpeedBound,
    WkbField,
    check_cstar_divergence,
    detect_acceleration,
    dominant_trait,
    estimate_front_speed,
    fitness_residual,
    front_edge_position,
    level_set_position,
    minimal_speed_bound,
    snapshot_diagnostics,
    wkb_transform,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # grid
    "Grid", "DensityField", "RhoProfile", "compute_rho", "total_mass",
    "write_snapshot", "read_snapshot",
    # model
    "ConfigError", "RationalFunction", "ModelSpec", "SolverTolerances",
    "RunConfig", "eval_mobility", "eval_growth_rate", "eval_fitness",
    "preset", "preset_names", "config_from_dict", "config_to_dict",
    "apply_overrides", "initial_density",
    # solver
    "SolverError", "LinearSolveError", "PicardConvergenceError",
    "RootSolveError", "BoundaryGuardError", "StepReport", "AdvectionSystem",
    "assemble_advection_system", "Simulation", "advection_diffusion_step",
    "reaction_step", "reaction_rho_root", "advance", "LevelTrack",
    "RunSummary", "run",
    # diagnostics
    "DiagnosticsError", "WkbField", "wkb_transform", "dominant_trait",
    "level_set_position", "front_edge_position", "estimate_front_speed",
    "AccelerationResult", "detect_acceleration", "SpeedBound",
    "minimal_speed_bound", "fitness_residual", "check_cstar_divergence",
    "FrontDiagnostics", "snapshot_diagnostics",
]
