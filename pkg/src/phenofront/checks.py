"""Randomized verification suites for the scheme's structural guarantees.

Each suite draws seeded random small instances, exercises one step of the
production solver, and records violations of the property it watches:

* ``positivity``        — the transport half-step never produces negative
                          densities beyond round-off;
* ``maximum-principle`` — column densities started at or below rho_max stay
                          in [0, rho_max] up to 1e-10 slack;
* ``monotonicity``      — non-increasing column densities stay non-increasing
                          up to 1e-10 slack;
* ``mass``              — the transport half-step conserves total mass to
                          1e-9 relative;
* ``root``              — the implicit growth root matches an independent
                          bisection oracle to 1e-10, with direct residuals
                          below 1e-12 and the carrying-value bound respected;
* ``refinement``        — halving (dt, dx) twice shrinks successive solution
                          differences by a first-order factor on a smooth
                          large-epsilon configuration.

The suites double as the executable form of the scheme's structural
propositions, so they are reused verbatim by the acceptance tests.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .grid import DensityField, Grid
from .model import ModelSpec, RationalFunction, RunConfig, apply_overrides, preset
from .solver import (
    SolverError,
    advection_diffusion_step,
    reaction_rho_root,
    run,
)

__all__ = [
    "SuiteResult",
    "verify_positivity",
    "verify_max_principle",
    "verify_monotonicity",
    "verify_mass",
    "verify_root",
    "verify_refinement",
    "run_suite",
    "suite_names",
]

#: Slack allowed on the maximum principle and monotonicity (matches the
#: Picard tolerance of the nonlinear transport solve).
PROPERTY_SLACK = 1e-10

#: Relative mass drift allowed across the transport half-step.
MASS_DRIFT_LIMIT = 1e-9

#: Agreement required between the growth root and the bisection oracle.
ROOT_AGREEMENT = 1e-10

#: Direct residual allowed at the growth root.
ROOT_RESIDUAL_LIMIT = 1e-12


@dataclass
class SuiteResult:
    """Outcome of one verification suite."""

    name: str
    cases: int
    failures: list[str] = dataclass_field(default_factory=list)
    notes: list[str] = dataclass_field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------


def _random_model(rng: np.random.Generator, m_y: int, dy: float) -> ModelSpec:
    """Random admissible model on the trait interval [0, m_y*dy]."""
    y_max = m_y * dy
    rho_max = float(rng.uniform(0.5, 2.0))
    mobility = RationalFunction(
        num=(float(rng.uniform(1e-3, 0.1)), 0.0, float(rng.uniform(0.1, 2.0)) / y_max**2)
    )
    growth = RationalFunction(num=(rho_max, 0.0, -rho_max / y_max**2))
    return ModelSpec(
        y_max=y_max,
        mobility=mobility,
        growth_rate=growth,
        rho_max=rho_max,
        epsilon=float(rng.uniform(0.005, 0.05)),
        ic_center=float(rng.uniform(0.0, y_max)),
    )


def _random_instance(
    rng: np.random.Generator,
    monotone: bool = False,
) -> tuple[RunConfig, DensityField]:
    """Random small one-step instance with an admissible random field."""
    m_x = int(rng.integers(4, 33))
    m_y = int(rng.integers(1, 17))
    dx = float(rng.uniform(0.05, 0.4))
    dy = float(rng.uniform(0.02, 0.15))
    dt = float(rng.uniform(1e-4, 0.02))
    model = _random_model(rng, m_y, dy)
    config = RunConfig(
        model=model,
        x_max=m_x * dx,
        t_max=dt,
        dt=dt,
        dx=dx,
        dy=dy,
    )
    field = _random_field(rng, config.build_grid(), model.rho_max, monotone)
    return config, field


def _random_field(
    rng: np.random.Generator,
    grid: Grid,
    rho_max: float,
    monotone: bool,
) -> DensityField:
    """Random nonnegative field with per-column densities in [0, rho_max].

    Roughly one column in five is exactly zero, exercising the empty-support
    cells found ahead of a propagating front.
    """
    base = rng.uniform(0.0, 1.0, size=grid.shape)
    target = rng.uniform(0.0, rho_max, size=grid.m_x)
    target[rng.uniform(size=grid.m_x) < 0.2] = 0.0
    if monotone:
        target = np.sort(target)[::-1]
    sums = grid.dy * base.sum(axis=1)
    scale = np.divide(target, sums, out=np.zeros_like(target), where=sums > 0)
    return DensityField(values=base * scale[:, None], time_label=0.0)


# ---------------------------------------------------------------------------
# Transport-step suites
# ---------------------------------------------------------------------------


def verify_positivity(seed: int = 0, cases: int = 200) -> SuiteResult:
    """Transport half-step keeps densities nonnegative (up to round-off)."""
    rng = np.random.default_rng(seed)
    result = SuiteResult("positivity", cases)
    for case in range(cases):
        config, field = _random_instance(rng)
        try:
            out, _ = advection_diffusion_step(field, config)
        except SolverError as exc:
            result.failures.append(f"case {case}: step failed: {exc}")
            continue
        if (out.values < 0.0).any():
            result.failures.append(f"case {case}: negative density in output")
    return result


def verify_max_principle(seed: int = 0, cases: int = 200) -> SuiteResult:
    """Column densities at or below rho_max stay within [0, rho_max] + slack."""
    rng = np.random.default_rng(seed)
    result = SuiteResult("maximum-principle", cases)
    for case in range(cases):
        config, field = _random_instance(rng)
        grid = config.build_grid()
        try:
            out, _ = advection_diffusion_step(field, config)
        except SolverError as exc:
            result.failures.append(f"case {case}: step failed: {exc}")
            continue
        rho = grid.dy * out.values.sum(axis=1)
        low, high = float(rho.min()), float(rho.max())
        if low < -PROPERTY_SLACK or high > config.model.rho_max + PROPERTY_SLACK:
            result.failures.append(
                f"case {case}: rho range [{low:.3e}, {high:.3e}] leaves "
                f"[0, {config.model.rho_max}] by more than {PROPERTY_SLACK:.1e}"
            )
    return result


def verify_monotonicity(seed: int = 0, cases: int = 200) -> SuiteResult:
    """Non-increasing column densities stay non-increasing + slack."""
    rng = np.random.default_rng(seed)
    result = SuiteResult("monotonicity", cases)
    for case in range(cases):
        config, field = _random_instance(rng, monotone=True)
        grid = config.build_grid()
        try:
            out, _ = advection_diffusion_step(field, config)
        except SolverError as exc:
            result.failures.append(f"case {case}: step failed: {exc}")
            continue
        rho = grid.dy * out.values.sum(axis=1)
        worst = float(np.diff(rho).max(initial=-math.inf))
        if worst > PROPERTY_SLACK:
            result.failures.append(
                f"case {case}: rho increases by {worst:.3e} across a cell"
            )
    return result


def verify_mass(seed: int = 0, cases: int = 200) -> SuiteResult:
    """Transport half-step conserves dx*dy*sum(n) to 1e-9 relative."""
    rng = np.random.default_rng(seed)
    result = SuiteResult("mass", cases)
    for case in range(cases):
        config, field = _random_instance(rng)
        try:
            _, report = advection_diffusion_step(field, config)
        except SolverError as exc:
            result.failures.append(f"case {case}: step failed: {exc}")
            continue
        drift = abs(report.mass_after - report.mass_before)
        scale = max(report.mass_before, 1e-300)
        if drift > MASS_DRIFT_LIMIT * scale and drift > 1e-15:
            result.failures.append(
                f"case {case}: relative mass drift {drift / scale:.3e}"
            )
    return result


# ---------------------------------------------------------------------------
# Growth-root suite
# ---------------------------------------------------------------------------


def _bisection_root(values: np.ndarray, model: ModelSpec, dy: float, dt: float) -> float:
    """Independent oracle: bisection on the direct residual of the growth root."""
    m_y = values.size
    y_centers = (np.arange(m_y) + 0.5) * dy
    r = np.asarray(model.growth_rate(y_centers), dtype=np.float64)
    g = dt / model.epsilon

    def residual(rho: float) -> float:
        return rho - dy * float((values * np.exp(g * (r - rho))).sum())

    lo = 0.0
    hi = max(model.rho_max, math.exp(g * float(r.max(initial=0.0))) * dy * float(values.sum()))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if residual(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def verify_root(seed: int = 0, cases: int = 1000) -> SuiteResult:
    """Growth root matches bisection, respects residual and carrying bounds."""
    rng = np.random.default_rng(seed)
    result = SuiteResult("root", cases)
    for case in range(cases):
        m_y = int(rng.integers(1, 17))
        dy = float(rng.uniform(0.02, 0.15))
        dt = float(rng.uniform(1e-4, 0.05))
        model = _random_model(rng, m_y, dy)
        values = rng.uniform(0.0, 1.0, size=m_y)
        draw = rng.uniform()
        if draw < 0.15:
            values[:] = 0.0
        else:
            # half the cases stay below the carrying value, half may exceed it
            target = float(rng.uniform(0.0, model.rho_max if draw < 0.6 else 3.0 * model.rho_max))
            total = dy * values.sum()
            values *= target / total if total > 0 else 0.0
        rho_star = dy * float(values.sum())
        try:
            root = reaction_rho_root(values, model, dy, dt)
        except SolverError as exc:
            result.failures.append(f"case {case}: root solve failed: {exc}")
            continue
        oracle = _bisection_root(values, model, dy, dt)
        if abs(root - oracle) > ROOT_AGREEMENT:
            result.failures.append(
                f"case {case}: root {root!r} vs bisection {oracle!r}"
            )
        y_centers = (np.arange(m_y) + 0.5) * dy
        r = np.asarray(model.growth_rate(y_centers), dtype=np.float64)
        g = dt / model.epsilon
        direct = root - dy * float((values * np.exp(g * (r - root))).sum())
        if abs(direct) > ROOT_RESIDUAL_LIMIT:
            result.failures.append(f"case {case}: direct residual {direct:.3e}")
        if rho_star <= model.rho_max and root > model.rho_max + ROOT_AGREEMENT:
            result.failures.append(
                f"case {case}: root {root:.12f} exceeds rho_max {model.rho_max}"
            )
    return result


# ---------------------------------------------------------------------------
# Refinement suite
# ---------------------------------------------------------------------------


def _restrict_pairs(fine: np.ndarray) -> np.ndarray:
    """Average adjacent pairs: conservative restriction after halving dx."""
    return 0.5 * (fine[0::2] + fine[1::2])


def verify_refinement(seed: int = 0, cases: int | None = None) -> SuiteResult:
    """Successive (dt, dx) halvings shrink solution differences first-order.

    Runs a short quadratic-coefficient configuration at three resolutions and
    checks that the sup-norm difference between successive final column
    densities drops by a factor in [0.3, 0.8].  The run uses a large
    trait-diffusion scale (epsilon = 0.25) so the profile stays smooth on the
    coarsest grid: sharp-front configurations measure front-position offsets
    rather than truncation error in the sup norm, which masks the first-order
    contraction this suite watches for.
    """
    del seed, cases  # deterministic suite
    result = SuiteResult("refinement", 3)
    base = preset("fig1")
    rhos: list[np.ndarray] = []
    for dt, dx in ((0.04, 0.04), (0.02, 0.02), (0.01, 0.01)):
        config = apply_overrides(
            base,
            {
                "x_max": 8.0,
                "t_max": 1.0,
                "dt": dt,
                "dx": dx,
                "dy": 0.04,
                "epsilon": 0.25,
                "output_times": (),
                "level_values": (),
            },
        )
        try:
            summary = run(config)
        except SolverError as exc:
            result.failures.append(f"resolution (dt={dt}, dx={dx}) failed: {exc}")
            return result
        grid = config.build_grid()
        rhos.append(grid.dy * summary.final_field.values.sum(axis=1))
    coarse_diff = float(np.abs(_restrict_pairs(rhos[1]) - rhos[0]).max())
    fine_diff = float(np.abs(_restrict_pairs(rhos[2]) - rhos[1]).max())
    if coarse_diff <= 0.0:
        result.failures.append("coarse and medium runs coincide; cannot form a ratio")
        return result
    ratio = fine_diff / coarse_diff
    result.notes.append(
        f"sup differences {coarse_diff:.3e} -> {fine_diff:.3e}, ratio {ratio:.3f}"
    )
    if not (0.3 <= ratio <= 0.8):
        result.failures.append(
            f"refinement ratio {ratio:.3f} outside the first-order band [0.3, 0.8]"
        )
    return result


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


_SUITES = {
    "positivity": verify_positivity,
    "maximum-principle": verify_max_principle,
    "monotonicity": verify_monotonicity,
    "mass": verify_mass,
    "root": verify_root,
    "refinement": verify_refinement,
}

_DEFAULT_CASES = {
    "positivity": 200,
    "maximum-principle": 200,
    "monotonicity": 200,
    "mass": 200,
    "root": 1000,
    "refinement": 3,
}


def suite_names() -> list[str]:
    return list(_SUITES)


def run_suite(name: str, seed: int = 0, cases: int | None = None) -> SuiteResult:
    """Run one named verification suite."""
    try:
        suite = _SUITES[name]
    except KeyError:
        raise ValueError(
            f"unknown suite {name!r}; available: {', '.join(suite_names())}"
        ) from None
    if cases is None:
        cases = _DEFAULT_CASES[name]
    return suite(seed=seed, cases=cases)
