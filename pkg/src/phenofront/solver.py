"""Implicit time-splitting solver.

Each time step of size dt splits into two implicit half-steps:

1. **Transport/diffusion** — backward-Euler step of the nonlocal advection
   along x (velocity -mu(y) * d_x rho, donor-cell upwind fluxes, zero-flux
   boundaries) plus diffusion along the trait axis (zero-flux boundaries).
   The advection coefficients depend on the unknown column density rho, so
   the nonlinear system is resolved by frozen-coefficient Picard iteration
   starting from the previous rho.  Each frozen linear system has strictly
   column-diagonally-dominant M-matrix structure: column sums equal one
   exactly, which conserves mass and keeps densities nonnegative.

2. **Growth** — backward-Euler step of eps * d_t n = (r(y) - rho) n, solved
   per x-column in logarithmic variables.  The update reduces to a scalar
   root: rho_new solves rho = A * exp(-dt*rho/eps) with A the growth-amplified
   trait integral, which has a unique root on [0, bracket]; the column is then
   rescaled by exp(dt*(r - rho_new)/eps).

The frozen linear systems are solved exactly by diagonalizing the trait block
against the mobility weights (one symmetric-definite eigendecomposition per
run) and back-substituting one tridiagonal x-system per trait mode, with
iterative refinement to push the relative residual below the configured
tolerance.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field as dataclass_field
from typing import Callable

import numpy as np
from scipy.linalg import eigh, solve_banded
import scipy.sparse

from .diagnostics import level_set_position
from .grid import DensityField, Grid, RhoProfile, total_mass
from .model import ModelSpec, RunConfig, initial_density

__all__ = [
    "SolverError",
    "LinearSolveError",
    "PicardConvergenceError",
    "RootSolveError",
    "BoundaryGuardError",
    "StepReport",
    "AdvectionSystem",
    "assemble_advection_system",
    "Simulation",
    "advection_diffusion_step",
    "reaction_step",
    "reaction_rho_root",
    "advance",
    "LevelTrack",
    "RunSummary",
    "run",
]

#: Transport solutions may undershoot zero by round-off; entries below
#: -NEGATIVE_CLIP_FACTOR * max(input) are treated as a solver failure, smaller
#: undershoots are clipped to zero.
NEGATIVE_CLIP_FACTOR = 1e-12

#: The rightmost fraction of x-cells watched by the runtime boundary guard.
GUARD_CELL_FRACTION = 0.05

#: Column density allowed near the right boundary before the run aborts.
GUARD_RHO_LIMIT = 1e-6

#: Smallest blending weight tried by the safeguarded coefficient iteration in
#: :meth:`Simulation.advection_step` before giving up.
PICARD_RELAX_FLOOR = 2.0**-8


class SolverError(RuntimeError):
    """Base class for failures of the implicit stepper."""


class LinearSolveError(SolverError):
    """A frozen-coefficient linear system could not reach the residual target."""


class PicardConvergenceError(SolverError):
    """The Picard iteration on rho did not converge within the iteration cap."""


class RootSolveError(SolverError):
    """The scalar growth root could not be resolved to tolerance."""


class BoundaryGuardError(SolverError):
    """The population reached the right boundary of the truncated domain."""


@dataclass(frozen=True)
class StepReport:
    """Numerical bookkeeping for one (sub-)step.

    ``t`` is the time at the end of the step.  Fields that do not apply to a
    sub-step (e.g. ``root_max_residual`` for pure transport) are NaN.  For a
    full step, ``mass_before``/``mass_after`` bracket the transport half-step,
    whose mass defect measures the linear-solver quality; the growth half-step
    changes mass by design.
    """

    t: float
    picard_iters: int
    picard_residual: float
    linear_residual: float
    root_max_residual: float
    mass_before: float
    mass_after: float


# ---------------------------------------------------------------------------
# Frozen-coefficient transport system
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AdvectionSystem:
    """One frozen-coefficient linear system of the transport half-step.

    ``out_right[j]`` and ``out_left[j]`` are the donor-cell outflow factors of
    cell j through its right and left faces, per unit mobility: (dt/dx) times
    the negative/positive part of the rho-slope at that face.  Both vanish at
    the domain boundaries (zero-flux closure).  The full coefficient for trait
    row k scales by mu_k; ``diffusion`` is the trait coupling eps*dt/dy^2.

    The system matrix acts on fields of shape (m_x, m_y); row (j, k) reads

        [1 + mu_k*(out_right[j] + out_left[j])] n[j,k]
          - mu_k*out_right[j-1] n[j-1,k] - mu_k*out_left[j+1] n[j+1,k]
          + diffusion * (zero-flux trait Laplacian of n[j,:])[k]

    Every column of the matrix sums to exactly 1 + the diffusion column sum
    (which is 0), so the matrix is strictly diagonally dominant by columns
    with margin 1 and solving conserves dx*dy*sum(n) up to the linear
    residual.
    """

    grid: Grid
    mu: np.ndarray
    out_right: np.ndarray
    out_left: np.ndarray
    diffusion: float
    rhs: np.ndarray

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Matrix-vector product in stencil form (no materialized matrix)."""
        mu = self.mu[None, :]
        out = (1.0 + (self.out_right + self.out_left)[:, None] * mu) * values
        if self.grid.m_x > 1:
            out[:-1, :] -= (self.out_left[1:, None] * mu) * values[1:, :]
            out[1:, :] -= (self.out_right[:-1, None] * mu) * values[:-1, :]
        if self.grid.m_y > 1 and self.diffusion != 0.0:
            lap = np.empty_like(values)
            lap[:, 1:-1] = 2.0 * values[:, 1:-1] - values[:, :-2] - values[:, 2:]
            lap[:, 0] = values[:, 0] - values[:, 1]
            lap[:, -1] = values[:, -1] - values[:, -2]
            out += self.diffusion * lap
        return out

    def matrix(self) -> scipy.sparse.csr_matrix:
        """Materialize the sparse matrix (row-major cell ordering, k fastest)."""
        m_x, m_y = self.grid.shape
        idx = np.arange(m_x * m_y).reshape(m_x, m_y)
        mu = self.mu[None, :]
        diag = 1.0 + (self.out_right + self.out_left)[:, None] * mu
        if m_y > 1 and self.diffusion != 0.0:
            degree = np.full(m_y, 2.0)
            degree[0] = degree[-1] = 1.0
            diag = diag + self.diffusion * degree[None, :]
        rows = [idx.ravel()]
        cols = [idx.ravel()]
        vals = [diag.ravel()]
        if m_x > 1:
            rows.append(idx[:-1, :].ravel())
            cols.append(idx[1:, :].ravel())
            vals.append(-(self.out_left[1:, None] * mu).ravel())
            rows.append(idx[1:, :].ravel())
            cols.append(idx[:-1, :].ravel())
            vals.append(-(self.out_right[:-1, None] * mu).ravel())
        if m_y > 1 and self.diffusion != 0.0:
            count = m_x * (m_y - 1)
            rows.append(idx[:, :-1].ravel())
            cols.append(idx[:, 1:].ravel())
            vals.append(np.full(count, -self.diffusion))
            rows.append(idx[:, 1:].ravel())
            cols.append(idx[:, :-1].ravel())
            vals.append(np.full(count, -self.diffusion))
        matrix = scipy.sparse.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(m_x * m_y, m_x * m_y),
        )
        return matrix.tocsr()


def assemble_advection_system(
    field: DensityField,
    rho: np.ndarray | RhoProfile,
    config: RunConfig,
    *,
    grid: Grid | None = None,
    mu: np.ndarray | None = None,
) -> AdvectionSystem:
    """Freeze the transport coefficients at a given rho iterate.

    Rejects non-finite or negative rho iterates: upwind directions and the
    M-matrix structure are only meaningful for admissible column densities.
    """
    if grid is None:
        grid = config.build_grid()
    if isinstance(rho, RhoProfile):
        rho = rho.values
    rho = np.asarray(rho, dtype=np.float64)
    if rho.shape != (grid.m_x,):
        raise ValueError(f"rho iterate has shape {rho.shape}, expected ({grid.m_x},)")
    if not np.isfinite(rho).all() or (rho < 0.0).any():
        raise ValueError("rho iterate must be finite and nonnegative")
    if field.values.shape != grid.shape:
        raise ValueError(
            f"field shape {field.values.shape} does not match grid shape {grid.shape}"
        )
    if mu is None:
        mu = np.asarray(config.model.mobility(grid.y_centers), dtype=np.float64)
    out_right = np.zeros(grid.m_x)
    out_left = np.zeros(grid.m_x)
    if grid.m_x > 1:
        courant = config.dt / grid.dx
        slopes = np.diff(rho) / grid.dx
        out_right[:-1] = courant * np.maximum(-slopes, 0.0)
        out_left[1:] = courant * np.maximum(slopes, 0.0)
    diffusion = config.model.epsilon * config.dt / grid.dy**2
    return AdvectionSystem(
        grid=grid,
        mu=mu,
        out_right=out_right,
        out_left=out_left,
        diffusion=diffusion,
        rhs=field.values,
    )


# ---------------------------------------------------------------------------
# Exact linear solver: trait eigenbasis + tridiagonal x-sweeps
# ---------------------------------------------------------------------------


class _TraitModeBasis:
    """Generalized eigenbasis of (I + diffusion*L_y) against diag(mu).

    With (I + diffusion*L_y) V = diag(mu) V diag(theta) and V' diag(mu) V = I,
    the transport system decouples into one tridiagonal system per trait mode:
    (theta_m + T_x) w_m = (rhs V)_m, and n = w V'.
    """

    def __init__(self, grid: Grid, mu: np.ndarray, dt: float, epsilon: float) -> None:
        m_y = grid.m_y
        laplacian = np.zeros((m_y, m_y))
        if m_y > 1:
            i = np.arange(m_y)
            laplacian[i, i] = 2.0
            laplacian[0, 0] = laplacian[-1, -1] = 1.0
            laplacian[i[:-1], i[:-1] + 1] = -1.0
            laplacian[i[1:], i[1:] - 1] = -1.0
        coupling = epsilon * dt / grid.dy**2
        trait_block = np.eye(m_y) + coupling * laplacian
        theta, vectors = eigh(trait_block, np.diag(np.asarray(mu, dtype=np.float64)))
        self.theta = theta
        self.v = np.ascontiguousarray(vectors)
        self.vt = np.ascontiguousarray(vectors.T)


def _solve_modes(system: AdvectionSystem, basis: _TraitModeBasis, rhs: np.ndarray) -> np.ndarray:
    """One exact solve of the frozen system for an arbitrary right-hand side."""
    m_x, m_y = system.grid.shape
    projected = rhs @ basis.v
    banded = np.zeros((3, m_x))
    banded[0, 1:] = -system.out_left[1:]
    banded[2, :-1] = -system.out_right[:-1]
    transport_diag = system.out_right + system.out_left
    modes = np.empty_like(projected)
    for m in range(m_y):
        banded[1, :] = basis.theta[m] + transport_diag
        modes[:, m] = solve_banded((1, 1), banded, projected[:, m], check_finite=False)
    return modes @ basis.vt


def _solve_linear(
    system: AdvectionSystem,
    basis: _TraitModeBasis,
    tol: float,
    max_refine: int = 4,
) -> tuple[np.ndarray, float]:
    """Solve the frozen system to relative residual <= tol (sup norm)."""
    rhs = system.rhs
    scale = float(np.abs(rhs).max(initial=0.0))
    if scale == 0.0:
        return np.zeros_like(rhs), 0.0
    solution = _solve_modes(system, basis, rhs)
    residual = rhs - system.apply(solution)
    rel = float(np.abs(residual).max()) / scale
    for _ in range(max_refine):
        if rel <= tol:
            break
        solution = solution + _solve_modes(system, basis, residual)
        residual = rhs - system.apply(solution)
        rel = float(np.abs(residual).max()) / scale
    if not np.isfinite(rel) or rel > tol:
        raise LinearSolveError(
            f"linear solve stalled at relative residual {rel:.3e} (target {tol:.1e})"
        )
    return solution, rel


# ---------------------------------------------------------------------------
# Growth root
# ---------------------------------------------------------------------------


def _growth_roots(
    amplified: np.ndarray,
    g: float,
    bracket_hi: np.ndarray,
    tol: float,
    max_iter: int = 200,
) -> np.ndarray:
    """Solve rho = amplified * exp(-g*rho) elementwise.

    The residual f(rho) = rho - amplified*exp(-g*rho) is increasing and
    concave with f(0) <= 0, so the root is unique and safeguarded Newton from
    the right bracket end converges monotonically; out-of-bracket candidates
    fall back to bisection.
    """
    s = np.asarray(amplified, dtype=np.float64)
    if (s < 0.0).any() or not np.isfinite(s).all():
        raise ValueError("growth root needs finite, nonnegative amplified integrals")
    if g == 0.0:
        return s.copy()
    hi = np.broadcast_to(np.asarray(bracket_hi, dtype=np.float64), s.shape).copy()
    lo = np.zeros_like(s)
    x = np.minimum(s, hi)
    for _ in range(max_iter):
        decay = np.exp(-g * x)
        f = x - s * decay
        done = np.abs(f) <= tol
        if done.all():
            return x
        hi = np.where(f > 0.0, np.minimum(hi, x), hi)
        lo = np.where(f < 0.0, np.maximum(lo, x), lo)
        candidate = x - f / (1.0 + g * s * decay)
        usable = np.isfinite(candidate) & (candidate > lo) & (candidate < hi)
        x = np.where(done, x, np.where(usable, candidate, 0.5 * (lo + hi)))
    f = x - s * np.exp(-g * x)
    worst = float(np.abs(f).max())
    if worst > tol:
        raise RootSolveError(
            f"growth root iteration stalled at residual {worst:.3e} (target {tol:.1e})"
        )
    return x


def reaction_rho_root(
    column_values: np.ndarray,
    model: ModelSpec,
    dy: float,
    dt: float,
    tol: float = 1e-12,
    density_floor: float = 0.0,
) -> float:
    """Root of the implicit growth update for one trait column.

    Returns the unique rho >= 0 solving
    rho = dy * sum_k n_k * exp(dt*(r(y_k) - rho)/eps) for a column sampled at
    the trait-cell centers y_k = (k + 1/2) dy covering [0, y_max].  With
    dt = 0 this is the plain trait integral of the column.
    """
    values = np.asarray(column_values, dtype=np.float64)
    if values.ndim != 1:
        raise ValueError("column_values must be 1-D")
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    m_y = values.size
    if abs(m_y * dy - model.y_max) > 1e-9 * max(1.0, model.y_max):
        raise ValueError(
            f"column of {m_y} cells at dy={dy} does not span [0, {model.y_max}]"
        )
    y_centers = (np.arange(m_y) + 0.5) * dy
    r = np.asarray(model.growth_rate(y_centers), dtype=np.float64)
    star = np.maximum(values, density_floor) if density_floor > 0.0 else values
    g = dt / model.epsilon
    amplified = dy * float((star * np.exp(g * r)).sum())
    rho_star = dy * float(star.sum())
    bracket = max(model.rho_max, math.exp(g * float(r.max(initial=0.0))) * rho_star)
    root = _growth_roots(np.array([amplified]), g, np.array([bracket]), 0.25 * tol)
    return float(root[0])


# ---------------------------------------------------------------------------
# Time stepping
# ---------------------------------------------------------------------------


class Simulation:
    """Per-run precomputed state: grid, coefficient samples, trait eigenbasis."""

    def __init__(self, config: RunConfig) -> None:
        self.config = config
        self.grid = config.build_grid()
        self.mu = np.asarray(config.model.mobility(self.grid.y_centers), dtype=np.float64)
        self.r = np.asarray(config.model.growth_rate(self.grid.y_centers), dtype=np.float64)
        self.basis = _TraitModeBasis(self.grid, self.mu, config.dt, config.model.epsilon)
        self.growth_gain = np.exp((config.dt / config.model.epsilon) * self.r)

    # -- transport/diffusion half-step ---------------------------------

    def _transport_correction(
        self, rho: np.ndarray, solution: np.ndarray, mismatch: np.ndarray
    ) -> np.ndarray:
        """Newton-like correction for the frozen-coefficient iteration.

        Perturbing the column density used in the flux coefficients changes
        the transported mass at each x-face in proportion to the donor cell's
        mobility-weighted column density, so to first order the mismatch map
        has a tridiagonal Jacobian ``-(dt/dx^2) L`` with ``L`` a weighted
        discrete Laplacian.  Solving ``(I + (dt/dx^2) L) delta = mismatch``
        yields a correction that contracts at a rate independent of how stiff
        the coefficient feedback is, where plain replacement diverges.
        """
        grid = self.grid
        weights = grid.dy * (solution * self.mu).sum(axis=1)
        if grid.m_x == 1:
            return mismatch.copy()
        slope_sign = np.sign(np.diff(rho))
        face = np.where(
            slope_sign < 0.0,
            weights[:-1],
            np.where(slope_sign > 0.0, weights[1:], 0.5 * (weights[:-1] + weights[1:])),
        )
        coef = (self.config.dt / grid.dx**2) * face
        banded = np.zeros((3, grid.m_x))
        banded[1, :] = 1.0
        banded[1, :-1] += coef
        banded[1, 1:] += coef
        banded[0, 1:] = -coef
        banded[2, :-1] = -coef
        return solve_banded((1, 1), banded, mismatch)

    def advection_step(self, field: DensityField) -> tuple[DensityField, StepReport]:
        config, grid, tol = self.config, self.grid, self.config.tolerances
        values = field.values
        if values.shape != grid.shape:
            raise ValueError(
                f"field shape {values.shape} does not match grid shape {grid.shape}"
            )
        mass_before = total_mass(field, grid)
        rho = grid.dy * values.sum(axis=1)
        solution = values
        worst_linear = 0.0
        resid = math.inf
        relax = 1.0
        iters = 0
        best: tuple[float, np.ndarray, np.ndarray, np.ndarray] | None = None
        for iters in range(1, tol.max_picard_iters + 1):
            system = assemble_advection_system(field, rho, config, grid=grid, mu=self.mu)
            solution, linear_residual = _solve_linear(system, self.basis, tol.linear)
            worst_linear = max(worst_linear, linear_residual)
            mismatch = grid.dy * solution.sum(axis=1) - rho
            resid = float(np.abs(mismatch).max(initial=0.0))
            if resid <= tol.picard:
                break
            if best is None or resid < best[0]:
                best = (resid, rho, solution, mismatch)
            else:
                # Replacing the coefficient profile by its image outright can
                # amplify perturbations instead of contracting them (on fine
                # meshes a flat-topped column density drives a period-two
                # oscillation), and even the corrected update below can
                # overshoot near kinks of the upwind switching.  Retreat to
                # the best iterate seen and try a shorter correction step.
                relax = 0.5 * relax
                if relax < PICARD_RELAX_FLOOR:
                    break
                _, rho, solution, mismatch = best
            correction = self._transport_correction(rho, solution, mismatch)
            rho = np.maximum(rho + relax * correction, 0.0)
        if resid > tol.picard:
            detail = f", best {best[0]:.3e}" if best is not None else ""
            raise PicardConvergenceError(
                f"no convergence of the implicit transport iteration after "
                f"{iters} solves (last residual {resid:.3e}{detail}, "
                f"target {tol.picard:.1e})"
            )
        clip_limit = -NEGATIVE_CLIP_FACTOR * float(values.max(initial=0.0))
        lowest = float(solution.min(initial=0.0))
        if lowest < clip_limit:
            raise SolverError(
                f"transport produced negative densities ({lowest:.3e}) beyond "
                f"the round-off allowance {clip_limit:.3e}"
            )
        np.clip(solution, 0.0, None, out=solution)
        out = DensityField(values=solution, time_label=field.time_label)
        report = StepReport(
            t=field.time_label + config.dt,
            picard_iters=iters,
            picard_residual=resid,
            linear_residual=worst_linear,
            root_max_residual=math.nan,
            mass_before=mass_before,
            mass_after=total_mass(out, grid),
        )
        return out, report

    # -- growth half-step ----------------------------------------------

    def reaction_step(self, field: DensityField) -> tuple[DensityField, StepReport]:
        config, grid, tol = self.config, self.grid, self.config.tolerances
        values = field.values
        if values.shape != grid.shape:
            raise ValueError(
                f"field shape {values.shape} does not match grid shape {grid.shape}"
            )
        mass_before = total_mass(field, grid)
        g = config.dt / config.model.epsilon
        star = np.maximum(values, tol.density_floor) if tol.density_floor > 0.0 else values
        rho_star = grid.dy * star.sum(axis=1)
        amplified = grid.dy * (star * self.growth_gain[None, :]).sum(axis=1)
        bracket = np.maximum(
            config.model.rho_max,
            math.exp(g * float(self.r.max(initial=0.0))) * rho_star,
        )
        rho_new = _growth_roots(amplified, g, bracket, 0.25 * tol.root)
        factor = np.exp(g * (self.r[None, :] - rho_new[:, None]))
        new_values = star * factor
        residual = rho_new - grid.dy * new_values.sum(axis=1)
        worst = float(np.abs(residual).max(initial=0.0))
        if worst > tol.root:
            rho_new, new_values = self._polish_columns(
                star, rho_new, new_values, np.abs(residual) > tol.root, g, bracket
            )
            residual = rho_new - grid.dy * new_values.sum(axis=1)
            worst = float(np.abs(residual).max(initial=0.0))
            if worst > tol.root:
                raise RootSolveError(
                    f"growth root residual {worst:.3e} exceeds target {tol.root:.1e}"
                )
        out = DensityField(values=new_values, time_label=field.time_label + config.dt)
        report = StepReport(
            t=field.time_label + config.dt,
            picard_iters=0,
            picard_residual=math.nan,
            linear_residual=math.nan,
            root_max_residual=worst,
            mass_before=mass_before,
            mass_after=total_mass(out, grid),
        )
        return out, report

    def _polish_columns(
        self,
        star: np.ndarray,
        rho_new: np.ndarray,
        new_values: np.ndarray,
        bad: np.ndarray,
        g: float,
        bracket: np.ndarray,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Bisection fallback on the direct residual for stubborn columns."""
        dy = self.grid.dy
        rho_new = rho_new.copy()
        new_values = new_values.copy()
        for j in np.nonzero(bad)[0]:
            lo, hi = 0.0, float(bracket[j])

            def direct(rho: float) -> float:
                return rho - dy * float((star[j] * np.exp(g * (self.r - rho))).sum())

            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if direct(mid) < 0.0:
                    lo = mid
                else:
                    hi = mid
                if hi - lo <= 1e-16 * max(1.0, hi):
                    break
            rho_new[j] = 0.5 * (lo + hi)
            new_values[j] = star[j] * np.exp(g * (self.r - rho_new[j]))
        return rho_new, new_values

    # -- full step ------------------------------------------------------

    def advance(self, field: DensityField) -> tuple[DensityField, StepReport]:
        intermediate, transport_report = self.advection_step(field)
        out, growth_report = self.reaction_step(intermediate)
        report = StepReport(
            t=growth_report.t,
            picard_iters=transport_report.picard_iters,
            picard_residual=transport_report.picard_residual,
            linear_residual=transport_report.linear_residual,
            root_max_residual=growth_report.root_max_residual,
            mass_before=transport_report.mass_before,
            mass_after=transport_report.mass_after,
        )
        return out, report


def advection_diffusion_step(field: DensityField, config: RunConfig) -> tuple[DensityField, StepReport]:
    """Transport/diffusion half-step (module-level convenience wrapper)."""
    return Simulation(config).advection_step(field)


def reaction_step(field: DensityField, config: RunConfig) -> tuple[DensityField, StepReport]:
    """Growth half-step (module-level convenience wrapper)."""
    return Simulation(config).reaction_step(field)


def advance(field: DensityField, config: RunConfig) -> tuple[DensityField, StepReport]:
    """One full time step: transport/diffusion followed by growth."""
    return Simulation(config).advance(field)


# ---------------------------------------------------------------------------
# Run loop
# ---------------------------------------------------------------------------


@dataclass
class LevelTrack:
    """Positions of one rho level set over time, recorded while it exists."""

    level: float
    times: list[float] = dataclass_field(default_factory=list)
    positions: list[float] = dataclass_field(default_factory=list)


@dataclass
class RunSummary:
    """Everything a run produced: reports, level tracks, snapshots, final state."""

    config: RunConfig
    reports: list[StepReport]
    tracks: dict[float, LevelTrack]
    snapshots: list[DensityField]
    final_field: DensityField
    completed: bool
    failure: str | None


def run(
    config: RunConfig,
    snapshot_sink: Callable[[DensityField], None] | None = None,
) -> RunSummary:
    """Run the full simulation described by ``config``.

    Snapshots at the requested output times are collected in the summary and
    also handed to ``snapshot_sink`` as they are produced.  Level-set tracks
    are recorded at every step (including t=0) while the level exists.  A
    boundary guard aborts the run if the column density in the last 5% of
    x-cells exceeds 1e-6, since the zero-flux truncation is only meaningful
    while the population stays away from the right boundary.  On failure the
    raised :class:`SolverError` carries the partial summary as ``summary``.
    """
    sim = Simulation(config)
    grid = sim.grid
    field = initial_density(config)
    tracks = {level: LevelTrack(level=level) for level in config.level_values}
    summary = RunSummary(
        config=config,
        reports=[],
        tracks=tracks,
        snapshots=[],
        final_field=field,
        completed=False,
        failure=None,
    )
    output_steps = config.output_steps()
    guard_cells = max(1, math.ceil(GUARD_CELL_FRACTION * grid.m_x))

    def record_tracks(t: float, rho: np.ndarray) -> None:
        for level, track in tracks.items():
            position = level_set_position(rho, grid, level)
            if position is not None:
                track.times.append(t)
                track.positions.append(position)

    def check_guard(rho: np.ndarray, t: float) -> None:
        worst = float(rho[-guard_cells:].max())
        if worst > GUARD_RHO_LIMIT:
            raise BoundaryGuardError(
                f"column density {worst:.3e} within the last {guard_cells} x-cells "
                f"at t={t:g}; the front reached the truncated boundary (enlarge x_max)"
            )

    def emit(snapshot: DensityField) -> None:
        summary.snapshots.append(snapshot)
        if snapshot_sink is not None:
            snapshot_sink(snapshot)

    try:
        rho = grid.dy * field.values.sum(axis=1)
        check_guard(rho, 0.0)
        record_tracks(0.0, rho)
        if 0 in output_steps:
            emit(field)
        for h in range(1, config.n_steps + 1):
            field, report = sim.advance(field)
            t_h = h * config.dt
            field.time_label = t_h
            summary.reports.append(dataclasses.replace(report, t=t_h))
            summary.final_field = field
            rho = grid.dy * field.values.sum(axis=1)
            check_guard(rho, t_h)
            record_tracks(t_h, rho)
            if h in output_steps:
                emit(field)
    except SolverError as exc:
        summary.failure = str(exc)
        exc.summary = summary  # type: ignore[attr-defined]
        raise
    summary.completed = True
    return summary
