"""Model definition: coefficient functions, run configuration, presets, initial data.

The model describes a population density n(t, x, y) structured by space x and a
motility trait y in [0, y_max].  Two coefficient functions characterize it:

* ``mobility``  mu(y) > 0, strictly increasing — trait-dependent motility;
* ``growth_rate`` r(y), strictly decreasing with r(0) = rho_max, r(y_max) >= 0 —
  proliferation rate of trait y at vanishing density.

The per-capita fitness at local column density rho is r(y) - rho, so rho_max is
the carrying value of the most proliferative trait y = 0.
"""
from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .grid import DensityField, Grid

__all__ = [
    "ConfigError",
    "RationalFunction",
    "ModelSpec",
    "SolverTolerances",
    "RunConfig",
    "eval_mobility",
    "eval_growth_rate",
    "eval_fitness",
    "preset",
    "preset_names",
    "config_from_dict",
    "config_to_dict",
    "apply_overrides",
    "initial_density",
]

#: Slack for checking r(0) == rho_max and related float identities.
_VALUE_RTOL = 1e-12


class ConfigError(ValueError):
    """Raised when a model or run configuration fails validation."""


# ---------------------------------------------------------------------------
# Coefficient functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RationalFunction:
    """Rational function p(y)/q(y), coefficients in increasing order of degree.

    A plain polynomial has the default denominator (1,).  Instances are
    callable on scalars or arrays.
    """

    num: tuple[float, ...]
    den: tuple[float, ...] = (1.0,)

    def __post_init__(self) -> None:
        num = tuple(float(c) for c in self.num)
        den = tuple(float(c) for c in self.den)
        if not num or not den:
            raise ConfigError("rational function needs nonempty coefficient lists")
        if not all(np.isfinite(num)) or not all(np.isfinite(den)):
            raise ConfigError("rational function coefficients must be finite")
        if not any(c != 0.0 for c in den):
            raise ConfigError("rational function denominator must be nonzero")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __call__(self, y):
        num = P.polyval(y, self.num)
        den = P.polyval(y, self.den)
        return num / den

    def derivative(self) -> "RationalFunction":
        """Exact derivative (p'q - pq')/q^2."""
        p, q = np.array(self.num), np.array(self.den)
        dp, dq = P.polyder(p), P.polyder(q)
        if dp.size == 0:
            dp = np.zeros(1)
        if dq.size == 0:
            dq = np.zeros(1)
        num = P.polysub(P.polymul(dp, q), P.polymul(p, dq))
        den = P.polymul(q, q)
        if num.size == 0:
            num = np.zeros(1)
        return RationalFunction(num=tuple(num), den=tuple(den))

    def to_dict(self) -> dict[str, list[float]]:
        return {"num": list(self.num), "den": list(self.den)}

    @classmethod
    def from_obj(cls, obj: Any) -> "RationalFunction":
        """Parse a coefficient list (polynomial) or a {num, den} mapping."""
        if isinstance(obj, RationalFunction):
            return obj
        if isinstance(obj, Mapping):
            unknown = set(obj) - {"num", "den"}
            if unknown:
                raise ConfigError(f"unknown coefficient keys: {sorted(unknown)}")
            if "num" not in obj:
                raise ConfigError("coefficient mapping needs a 'num' list")
            return cls(num=tuple(obj["num"]), den=tuple(obj.get("den", (1.0,))))
        if isinstance(obj, Sequence) and not isinstance(obj, (str, bytes)):
            return cls(num=tuple(obj))
        raise ConfigError(f"cannot parse coefficient function from {obj!r}")


# ---------------------------------------------------------------------------
# Parameter sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    """Continuous model parameters (no discretization choices)."""

    y_max: float
    mobility: RationalFunction
    growth_rate: RationalFunction
    rho_max: float
    epsilon: float
    ic_center: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.y_max) and self.y_max > 0):
            raise ConfigError(f"y_max must be positive, got {self.y_max}")
        if not (np.isfinite(self.rho_max) and self.rho_max > 0):
            raise ConfigError(f"rho_max must be positive, got {self.rho_max}")
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if not (0.0 <= self.ic_center <= self.y_max):
            raise ConfigError(
                f"ic_center must lie in [0, {self.y_max}], got {self.ic_center}"
            )


@dataclass(frozen=True)
class SolverTolerances:
    """Tolerances and iteration caps of the implicit time stepper."""

    picard: float = 1e-10
    max_picard_iters: int = 100
    linear: float = 1e-12
    root: float = 1e-12
    density_floor: float = 0.0

    def __post_init__(self) -> None:
        for name in ("picard", "linear", "root"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ConfigError(f"tolerance '{name}' must be positive, got {value}")
        if self.max_picard_iters < 1:
            raise ConfigError("max_picard_iters must be at least 1")
        if not (np.isfinite(self.density_floor) and self.density_floor >= 0):
            raise ConfigError("density_floor must be nonnegative and finite")


@dataclass(frozen=True)
class RunConfig:
    """Complete description of one simulation run.

    Validation happens on construction: step sizes must tile the domain
    exactly, output times must land on time steps, and the coefficient
    functions must satisfy the structural assumptions of the model (mobility
    positive and strictly increasing, growth rate strictly decreasing from
    rho_max to a nonnegative value), checked by sampling at the trait-cell
    centers.
    """

    model: ModelSpec
    x_max: float
    t_max: float
    dt: float
    dx: float
    dy: float
    output_times: tuple[float, ...] = ()
    level_values: tuple[float, ...] = ()
    tolerances: SolverTolerances = field(default_factory=SolverTolerances)

    def __post_init__(self) -> None:
        object.__setattr__(self, "output_times", tuple(float(t) for t in self.output_times))
        object.__setattr__(self, "level_values", tuple(float(v) for v in self.level_values))
        for name in ("dt", "dx", "dy"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be positive, got {value}")
        if not (np.isfinite(self.t_max) and self.t_max >= 0):
            raise ConfigError(f"t_max must be nonnegative, got {self.t_max}")
        try:
            grid = self.build_grid()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        self._validate_times()
        self._validate_levels()
        _validate_model_on_grid(self.model, grid)

    def build_grid(self) -> Grid:
        return Grid.from_extents(self.x_max, self.model.y_max, self.dx, self.dy)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))

    def _validate_times(self) -> None:
        if abs(self.n_steps * self.dt - self.t_max) > 1e-9 * max(1.0, self.t_max):
            raise ConfigError(
                f"t_max {self.t_max} is not a whole number of steps of size {self.dt}"
            )
        times = self.output_times
        if list(times) != sorted(times):
            raise ConfigError("output_times must be sorted")
        for t in times:
            if not (0.0 <= t <= self.t_max):
                raise ConfigError(f"output time {t} outside [0, {self.t_max}]")
            if abs(round(t / self.dt) * self.dt - t) > 1e-9 * max(1.0, self.t_max):
                raise ConfigError(f"output time {t} does not land on a time step")
        if len(set(times)) != len(times):
            raise ConfigError("output_times must be distinct")

    def _validate_levels(self) -> None:
        for v in self.level_values:
            if not (0.0 < v < self.model.rho_max):
                raise ConfigError(
                    f"level value {v} must lie strictly inside (0, {self.model.rho_max})"
                )

    def output_steps(self) -> dict[int, float]:
        """Map step index -> requested output time."""
        return {int(round(t / self.dt)): t for t in self.output_times}


def _validate_model_on_grid(model: ModelSpec, grid: Grid) -> None:
    y = grid.y_centers
    mu = np.asarray(model.mobility(y), dtype=float)
    r = np.asarray(model.growth_rate(y), dtype=float)
    if not np.isfinite(mu).all():
        raise ConfigError("mobility must be finite on [0, y_max]")
    if not np.isfinite(r).all():
        raise ConfigError("growth rate must be finite on [0, y_max]")
    mu0 = float(model.mobility(0.0))
    if not (np.isfinite(mu0) and mu0 > 0):
        raise ConfigError(f"mobility at y=0 must be positive, got {mu0}")
    if (mu <= 0).any():
        raise ConfigError("mobility must be positive on [0, y_max]")
    if grid.m_y > 1:
        if not (np.diff(mu) > 0).all():
            raise ConfigError("mobility must be strictly increasing in the trait")
        if not (np.diff(r) < 0).all():
            raise ConfigError("growth rate must be strictly decreasing in the trait")
    r0 = float(model.growth_rate(0.0))
    if abs(r0 - model.rho_max) > _VALUE_RTOL * max(1.0, abs(model.rho_max)):
        raise ConfigError(
            f"growth rate at y=0 is {r0}, expected rho_max = {model.rho_max}"
        )
    r_top = float(model.growth_rate(model.y_max))
    if r_top < -_VALUE_RTOL:
        raise ConfigError(f"growth rate at y=y_max must be nonnegative, got {r_top}")


# ---------------------------------------------------------------------------
# Coefficient evaluation
# ---------------------------------------------------------------------------


def _check_trait_domain(model: ModelSpec, y) -> np.ndarray:
    arr = np.asarray(y, dtype=float)
    if ((arr < 0.0) | (arr > model.y_max)).any():
        raise ValueError(f"trait value outside [0, {model.y_max}]")
    return arr


def eval_mobility(model: ModelSpec, y):
    """Motility mu(y); raises ValueError outside [0, y_max]."""
    arr = _check_trait_domain(model, y)
    out = model.mobility(arr)
    return float(out) if np.isscalar(y) or np.ndim(y) == 0 else out


def eval_growth_rate(model: ModelSpec, y):
    """Low-density growth rate r(y); raises ValueError outside [0, y_max]."""
    arr = _check_trait_domain(model, y)
    out = model.growth_rate(arr)
    return float(out) if np.isscalar(y) or np.ndim(y) == 0 else out


def eval_fitness(model: ModelSpec, y, rho):
    """Per-capita fitness r(y) - rho at column density rho."""
    arr = _check_trait_domain(model, y)
    out = model.growth_rate(arr) - np.asarray(rho, dtype=float)
    if np.ndim(out) == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------


def _preset_quadratic() -> RunConfig:
    """Bounded quadratic coefficients: mu = 0.01 + y^2, r = 1 - y^2 on [0, 1]."""
    model = ModelSpec(
        y_max=1.0,
        mobility=RationalFunction(num=(0.01, 0.0, 1.0)),
        growth_rate=RationalFunction(num=(1.0, 0.0, -1.0)),
        rho_max=1.0,
        epsilon=0.01,
        ic_center=0.2,
    )
    return RunConfig(
        model=model,
        x_max=25.0,
        t_max=8.0,
        dt=0.01,
        dx=0.01,
        dy=0.02,
        output_times=(0.0, 4.0, 6.0, 8.0),
        level_values=(0.2, 0.6, 0.8),
    )


def _preset_quartic() -> RunConfig:
    """Unbounded-motility variant: mu = 0.01 + y^4, r = 1/(1+y) on [0, 20]."""
    model = ModelSpec(
        y_max=20.0,
        mobility=RationalFunction(num=(0.01, 0.0, 0.0, 0.0, 1.0)),
        growth_rate=RationalFunction(num=(1.0,), den=(1.0, 1.0)),
        rho_max=1.0,
        epsilon=0.01,
        ic_center=0.2,
    )
    return RunConfig(
        model=model,
        x_max=200.0,
        t_max=8.0,
        dt=0.002,
        dx=0.1,
        dy=0.05,
        output_times=(0.0, 4.0, 6.0, 8.0),
        level_values=(0.1, 0.25, 0.45, 0.8),
    )


_PRESETS = {
    "fig1": _preset_quadratic,
    "fig2": _preset_quartic,
}


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def preset(name: str) -> RunConfig:
    """Return a named built-in configuration."""
    try:
        builder = _PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}"
        ) from None
    return builder()


# ---------------------------------------------------------------------------
# Dict (de)serialization — the YAML schema
# ---------------------------------------------------------------------------


def config_to_dict(config: RunConfig) -> dict[str, Any]:
    """Plain-data representation of a config (inverse of config_from_dict)."""
    m = config.model
    return {
        "model": {
            "y_max": m.y_max,
            "mobility": m.mobility.to_dict(),
            "growth_rate": m.growth_rate.to_dict(),
            "rho_max": m.rho_max,
            "epsilon": m.epsilon,
            "ic_center": m.ic_center,
        },
        "domain": {"x_max": config.x_max, "t_max": config.t_max},
        "steps": {"dt": config.dt, "dx": config.dx, "dy": config.dy},
        "output": {
            "times": list(config.output_times),
            "levels": list(config.level_values),
        },
        "tolerances": asdict(config.tolerances),
    }


def _merge(base: dict, override: Mapping) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def config_from_dict(data: Mapping[str, Any]) -> RunConfig:
    """Build a RunConfig from the nested dict schema used by YAML files.

    An optional top-level ``preset`` key names a built-in configuration whose
    fields serve as defaults; the remaining keys override it section by
    section.
    """
    if not isinstance(data, Mapping):
        raise ConfigError(f"config must be a mapping, got {type(data).__name__}")
    data = dict(data)
    base: dict[str, Any] | None = None
    preset_name = data.pop("preset", None)
    if preset_name is not None:
        base = config_to_dict(preset(str(preset_name)))
    unknown = set(data) - {"model", "domain", "steps", "output", "tolerances"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    merged = _merge(base, data) if base is not None else copy.deepcopy(data)

    try:
        model_d = dict(merged["model"])
        domain_d = dict(merged["domain"])
        steps_d = dict(merged["steps"])
    except KeyError as exc:
        raise ConfigError(f"config is missing required section {exc}") from None
    output_d = dict(merged.get("output", {}))
    tol_d = dict(merged.get("tolerances", {}))

    try:
        model = ModelSpec(
            y_max=float(model_d["y_max"]),
            mobility=RationalFunction.from_obj(model_d["mobility"]),
            growth_rate=RationalFunction.from_obj(model_d["growth_rate"]),
            rho_max=float(model_d["rho_max"]),
            epsilon=float(model_d["epsilon"]),
            ic_center=float(model_d["ic_center"]),
        )
        tolerances = SolverTolerances(**tol_d)
        return RunConfig(
            model=model,
            x_max=float(domain_d["x_max"]),
            t_max=float(domain_d["t_max"]),
            dt=float(steps_d["dt"]),
            dx=float(steps_d["dx"]),
            dy=float(steps_d["dy"]),
            output_times=tuple(output_d.get("times", ())),
            level_values=tuple(output_d.get("levels", ())),
            tolerances=tolerances,
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def apply_overrides(config: RunConfig, overrides: Mapping[str, Any]) -> RunConfig:
    """Apply flat field overrides (the CLI flag set) to a config.

    Recognized keys: x_max, t_max, dt, dx, dy, output_times, level_values,
    epsilon (the one nested model field exposed for convenience).  Output
    times beyond a shortened t_max are dropped rather than rejected.
    """
    data = config_to_dict(config)
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "x_max":
            data["domain"]["x_max"] = float(value)
        elif key == "t_max":
            data["domain"]["t_max"] = float(value)
        elif key in ("dt", "dx", "dy"):
            data["steps"][key] = float(value)
        elif key == "output_times":
            data["output"]["times"] = [float(v) for v in value]
        elif key == "level_values":
            data["output"]["levels"] = [float(v) for v in value]
        elif key == "epsilon":
            data["model"]["epsilon"] = float(value)
        else:
            raise ConfigError(f"unknown override {key!r}")
    t_max = data["domain"]["t_max"]
    data["output"]["times"] = [t for t in data["output"]["times"] if t <= t_max]
    return config_from_dict(data)


# ---------------------------------------------------------------------------
# Initial data
# ---------------------------------------------------------------------------


#: Relative level below which the initial Gaussian x-profile is cleared to
#: exact zero.  The reaction term amplifies any positive density at rate up to
#: r(y)/epsilon (e^{100 t} for the reference parameter sets), so the analytic
#: Gaussian tail — however many orders of magnitude down — would ignite the
#: far field in place long before the front arrives and mask the front's own
#: propagation.  Clearing the tail gives the truncated spatial domain a
#: genuinely empty far field, matching the sharp edge the running front itself
#: maintains.  The cut sits six orders below the peak and is invisible at
#: plot scale.
IC_TAIL_CUTOFF = 1e-6


def initial_density(config: RunConfig, *, tail_cutoff: float = IC_TAIL_CUTOFF) -> DensityField:
    """Gaussian-in-x, trait-concentrated initial density.

    n(0, x, y) = C * exp(-x^2) * exp(-(y - a)^2 / epsilon) with C chosen so
    that the midpoint-rule trait integral equals exp(-x^2) exactly: the
    discrete column density starts at rho(0, x) = exp(-x^2) by construction.
    Columns whose profile value exp(-x^2) falls below ``tail_cutoff`` are set
    to exact zero (see :data:`IC_TAIL_CUTOFF`); pass ``tail_cutoff=0.0`` for
    the untruncated formula.
    """
    grid = config.build_grid()
    m = config.model
    trait_profile = np.exp(-((grid.y_centers - m.ic_center) ** 2) / m.epsilon)
    norm = grid.dy * trait_profile.sum()
    if norm <= 0.0 or not np.isfinite(norm):
        raise ConfigError("initial trait profile vanishes on the grid")
    x_profile = np.exp(-grid.x_centers**2)
    if tail_cutoff > 0.0:
        x_profile = np.where(x_profile >= tail_cutoff, x_profile, 0.0)
    values = x_profile[:, None] * (trait_profile / norm)[None, :]
    return DensityField(values=values, time_label=0.0)
