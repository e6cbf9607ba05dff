"""Front diagnostics: level-set tracking, trait statistics, speed estimates.

All functions operate on density snapshots (or recorded level tracks) and are
read-only: nothing here feeds back into the dynamics.  Columns take part in
trait statistics only where the column density reaches a support threshold
(default 5% of the carrying value rho_max); the log-density transform floors
the density at a tiny positive value so that exact zeros stay finite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .grid import DensityField, Grid, RhoProfile
from .model import ModelSpec

__all__ = [
    "DiagnosticsError",
    "SUPPORT_FRACTION",
    "BOUND_SUPPORT_FRACTION",
    "WKB_FLOOR",
    "WkbField",
    "wkb_transform",
    "dominant_trait",
    "level_set_position",
    "front_edge_position",
    "estimate_front_speed",
    "AccelerationResult",
    "detect_acceleration",
    "SpeedBound",
    "minimal_speed_bound",
    "fitness_residual",
    "check_cstar_divergence",
    "FrontDiagnostics",
    "snapshot_diagnostics",
    "write_level_tracks",
    "write_speed_fits",
    "write_ybar_profiles",
    "write_summary_rows",
]

#: Default support threshold as a fraction of rho_max for trait/residual
#: diagnostics.
SUPPORT_FRACTION = 0.05

#: Support threshold fraction for the spreading-speed bound.  The bound's
#: supremum is typically attained in the thin leading edge of the front where
#: the dominant trait approaches its upper limit while the column density has
#: already dropped orders of magnitude below the plateau, so this diagnostic
#: uses the full numerical support (everything meaningfully above vacuum)
#: rather than the plot-scale support used by the trait/residual diagnostics.
BOUND_SUPPORT_FRACTION = 1e-9

#: Floor applied before taking logarithms of the density.
WKB_FLOOR = 1e-250


class DiagnosticsError(ValueError):
    """Raised when a diagnostic is undefined for the given data."""


def _support_threshold(model: ModelSpec, threshold: float | None) -> float:
    return SUPPORT_FRACTION * model.rho_max if threshold is None else float(threshold)


def _rho_values(rho: np.ndarray | RhoProfile) -> np.ndarray:
    if isinstance(rho, RhoProfile):
        rho = rho.values
    return np.asarray(rho, dtype=np.float64)


# ---------------------------------------------------------------------------
# Log-density (WKB) transform
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class WkbField:
    """Scaled log-density u = epsilon * ln(max(n, floor))."""

    values: np.ndarray
    epsilon: float
    floor: float
    time_label: float


def wkb_transform(field: DensityField, epsilon: float, floor: float = WKB_FLOOR) -> WkbField:
    """Scaled log-density transform; exact zeros map to epsilon*ln(floor)."""
    if not (epsilon > 0 and np.isfinite(epsilon)):
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not (floor > 0 and np.isfinite(floor)):
        raise ValueError(f"floor must be positive, got {floor}")
    values = epsilon * np.log(np.maximum(field.values, floor))
    return WkbField(values=values, epsilon=float(epsilon), floor=float(floor),
                    time_label=field.time_label)


# ---------------------------------------------------------------------------
# Trait statistics
# ---------------------------------------------------------------------------


def dominant_trait(
    field: DensityField,
    grid: Grid,
    model: ModelSpec,
    threshold: float | None = None,
) -> np.ndarray:
    """Most represented trait per column, NaN where the column lacks support.

    The argmax cell is refined by a three-point parabolic fit of the
    log-density (exact for Gaussian columns) whenever the argmax is interior
    and the fit is concave with a sub-cell vertex shift; otherwise the raw
    cell center is used.  Results are clamped to [0, y_max].
    """
    if field.values.shape != grid.shape:
        raise ValueError(
            f"field shape {field.values.shape} does not match grid shape {grid.shape}"
        )
    thr = _support_threshold(model, threshold)
    values = field.values
    rho = grid.dy * values.sum(axis=1)
    out = np.full(grid.m_x, np.nan)
    supported = rho >= thr
    if not supported.any():
        return out
    ks = np.argmax(values, axis=1)
    refined = grid.y_centers[ks].astype(np.float64, copy=True)
    if grid.m_y >= 3:
        rows = np.nonzero(supported & (ks > 0) & (ks < grid.m_y - 1))[0]
        if rows.size:
            k = ks[rows]
            left = np.log(np.maximum(values[rows, k - 1], WKB_FLOOR))
            mid = np.log(np.maximum(values[rows, k], WKB_FLOOR))
            right = np.log(np.maximum(values[rows, k + 1], WKB_FLOOR))
            curvature = left - 2.0 * mid + right
            with np.errstate(divide="ignore", invalid="ignore"):
                shift = 0.5 * (left - right) / curvature
            usable = (curvature < 0.0) & np.isfinite(shift) & (np.abs(shift) <= 0.5)
            refined[rows] = np.where(usable, refined[rows] + shift * grid.dy, refined[rows])
    out[supported] = np.clip(refined[supported], 0.0, grid.y_max)
    return out


# ---------------------------------------------------------------------------
# Level sets and front position
# ---------------------------------------------------------------------------


def level_set_position(
    rho: np.ndarray | RhoProfile,
    grid: Grid,
    level: float,
) -> float | None:
    """Rightmost x where linear interpolation between cell centers hits ``level``.

    Returns None when the profile never crosses the level.  On a plateau lying
    exactly at the level, the rightmost point of the rightmost crossing pair
    is reported.
    """
    rho = _rho_values(rho)
    if rho.shape != (grid.m_x,):
        raise ValueError(f"rho has shape {rho.shape}, expected ({grid.m_x},)")
    if grid.m_x == 1:
        return float(grid.x_centers[0]) if rho[0] == level else None
    offset = rho - level
    pair_lo = np.minimum(offset[:-1], offset[1:])
    pair_hi = np.maximum(offset[:-1], offset[1:])
    crossing = np.nonzero((pair_lo <= 0.0) & (pair_hi >= 0.0))[0]
    if crossing.size == 0:
        return None
    j = int(crossing[-1])
    if rho[j] != rho[j + 1]:
        fraction = (level - rho[j]) / (rho[j + 1] - rho[j])
        return float(grid.x_centers[j] + fraction * grid.dx)
    return float(grid.x_centers[j + 1])


def front_edge_position(
    rho: np.ndarray | RhoProfile,
    grid: Grid,
    threshold: float,
) -> float | None:
    """Largest cell-center x whose column density reaches the threshold."""
    rho = _rho_values(rho)
    supported = np.nonzero(rho >= threshold)[0]
    if supported.size == 0:
        return None
    return float(grid.x_centers[supported[-1]])


# ---------------------------------------------------------------------------
# Speed estimates
# ---------------------------------------------------------------------------


def estimate_front_speed(
    times: Sequence[float],
    positions: Sequence[float],
    t_start: float,
    t_end: float,
) -> tuple[float, float]:
    """Least-squares slope of a level track on [t_start, t_end], with RMS misfit.

    Requires at least three finite samples inside the window.
    """
    t = np.asarray(times, dtype=np.float64)
    x = np.asarray(positions, dtype=np.float64)
    if t.shape != x.shape or t.ndim != 1:
        raise ValueError("times and positions must be 1-D arrays of equal length")
    mask = (t >= t_start) & (t <= t_end) & np.isfinite(x)
    if int(mask.sum()) < 3:
        raise DiagnosticsError(
            f"need at least 3 track samples in [{t_start:g}, {t_end:g}], "
            f"have {int(mask.sum())}"
        )
    slope, intercept = np.polyfit(t[mask], x[mask], 1)
    fitted = slope * t[mask] + intercept
    rms = float(np.sqrt(np.mean((fitted - x[mask]) ** 2)))
    return float(slope), rms


@dataclass(frozen=True)
class AccelerationResult:
    """Comparison of front speeds fitted on an early and a late time window."""

    accelerating: bool
    early_slope: float
    late_slope: float
    margin: float


def detect_acceleration(
    times: Sequence[float],
    positions: Sequence[float],
    early_window: tuple[float, float],
    late_window: tuple[float, float],
    margin: float = 0.10,
) -> AccelerationResult:
    """Flag whether the late-window slope exceeds the early one by the margin."""
    early_slope, _ = estimate_front_speed(times, positions, *early_window)
    late_slope, _ = estimate_front_speed(times, positions, *late_window)
    return AccelerationResult(
        accelerating=late_slope > early_slope * (1.0 + margin),
        early_slope=early_slope,
        late_slope=late_slope,
        margin=float(margin),
    )


# ---------------------------------------------------------------------------
# Spreading-speed lower bound and fitness residual
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpeedBound:
    """Curvature-based spreading-speed lower bound and its column bookkeeping."""

    value: float
    columns_used: int
    columns_skipped: int


def minimal_speed_bound(
    field: DensityField,
    grid: Grid,
    model: ModelSpec,
    threshold: float | None = None,
    floor: float = WKB_FLOOR,
) -> SpeedBound:
    """Supremum over supported columns of 2|r'(ybar)| sqrt(mu(ybar)/|d2u|).

    ``d2u`` is the second difference of the scaled log-density u along the
    trait at the column's argmax cell (shifted one cell inward at the trait
    boundaries).  Columns where the log-density is not locally concave are
    skipped and counted; if every supported column is skipped the bound is
    undefined and an error is raised.  ``threshold`` defaults to
    ``BOUND_SUPPORT_FRACTION * rho_max`` — the supremum usually lives in the
    sparse leading edge, far below the plot-scale support level.
    """
    if field.values.shape != grid.shape:
        raise ValueError(
            f"field shape {field.values.shape} does not match grid shape {grid.shape}"
        )
    if grid.m_y < 3:
        raise DiagnosticsError("trait grid too small for curvature estimates (m_y < 3)")
    thr = (
        BOUND_SUPPORT_FRACTION * model.rho_max if threshold is None else float(threshold)
    )
    values = field.values
    rho = grid.dy * values.sum(axis=1)
    supported = np.nonzero(rho >= thr)[0]
    if supported.size == 0:
        raise DiagnosticsError(f"no column density reaches the support threshold {thr:g}")
    u = model.epsilon * np.log(np.maximum(values, floor))
    ks = np.argmax(values[supported], axis=1)
    centers = np.clip(ks, 1, grid.m_y - 2)
    curvature = (
        u[supported, centers - 1] - 2.0 * u[supported, centers] + u[supported, centers + 1]
    ) / grid.dy**2
    concave = curvature < 0.0
    skipped = int((~concave).sum())
    if not concave.any():
        raise DiagnosticsError(
            f"log-density is non-concave at the trait mode of all {skipped} supported "
            "columns; the speed bound is undefined"
        )
    ybar = dominant_trait(field, grid, model, threshold=thr)[supported][concave]
    r_prime = model.growth_rate.derivative()
    bounds = 2.0 * np.abs(r_prime(ybar)) * np.sqrt(model.mobility(ybar) / -curvature[concave])
    return SpeedBound(
        value=float(bounds.max()),
        columns_used=int(concave.sum()),
        columns_skipped=skipped,
    )


def fitness_residual(
    field: DensityField,
    grid: Grid,
    model: ModelSpec,
    threshold: float | None = None,
) -> float:
    """Supremum of |rho - r(ybar)| over supported columns.

    Small values mean the population sits at the zero-fitness relation
    rho = r(ybar) behind the front.
    """
    thr = _support_threshold(model, threshold)
    ybar = dominant_trait(field, grid, model, threshold=thr)
    supported = np.isfinite(ybar)
    if not supported.any():
        raise DiagnosticsError(f"no column density reaches the support threshold {thr:g}")
    rho = grid.dy * field.values.sum(axis=1)
    return float(np.abs(rho[supported] - model.growth_rate(ybar[supported])).max())


def check_cstar_divergence(models: Iterable[ModelSpec]) -> list[tuple[float, float]]:
    """Tabulate |r'(y_max)| * sqrt(mu(y_max)) for a family of models.

    The spreading speed dominates this indicator; growth of the indicator
    along a family with increasing y_max signals unbounded front speed in the
    unbounded-trait limit.
    """
    out: list[tuple[float, float]] = []
    for model in models:
        r_prime = model.growth_rate.derivative()
        indicator = abs(float(r_prime(model.y_max))) * math.sqrt(float(model.mobility(model.y_max)))
        out.append((model.y_max, indicator))
    return out


# ---------------------------------------------------------------------------
# Snapshot bundle and CSV writers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrontDiagnostics:
    """Per-snapshot diagnostic summary (NaN where a quantity is undefined)."""

    t: float
    edge_position: float
    cstar_bound: float
    bound_columns_used: int
    bound_columns_skipped: int
    fitness_residual: float


def snapshot_diagnostics(
    field: DensityField,
    grid: Grid,
    model: ModelSpec,
    threshold: float | None = None,
) -> FrontDiagnostics:
    """Lenient bundle of the per-snapshot diagnostics for reporting."""
    thr = _support_threshold(model, threshold)
    rho = grid.dy * field.values.sum(axis=1)
    edge = front_edge_position(rho, grid, thr)
    try:
        bound = minimal_speed_bound(field, grid, model, threshold=thr)
        bound_value, used, skipped = bound.value, bound.columns_used, bound.columns_skipped
    except DiagnosticsError:
        bound_value, used, skipped = math.nan, 0, 0
    try:
        residual = fitness_residual(field, grid, model, threshold=thr)
    except DiagnosticsError:
        residual = math.nan
    return FrontDiagnostics(
        t=field.time_label,
        edge_position=math.nan if edge is None else edge,
        cstar_bound=bound_value,
        bound_columns_used=used,
        bound_columns_skipped=skipped,
        fitness_residual=residual,
    )


def _fmt(value: float) -> str:
    return f"{float(value):.17g}"


def write_level_tracks(tracks: Mapping[float, object], path: str | Path) -> None:
    """Write level tracks as CSV rows t,level,x ordered by time then level."""
    rows: list[tuple[float, float, float]] = []
    for level, track in tracks.items():
        times = getattr(track, "times", None)
        positions = getattr(track, "positions", None)
        if times is None:
            times, positions = track  # plain (times, positions) pair
        rows.extend((float(t), float(level), float(x)) for t, x in zip(times, positions))
    rows.sort(key=lambda row: (row[0], row[1]))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("t,level,x\n")
        for t, level, x in rows:
            handle.write(f"{_fmt(t)},{_fmt(level)},{_fmt(x)}\n")


def write_speed_fits(
    fits: Iterable[tuple[float, float, float]],
    path: str | Path,
) -> None:
    """Write per-level speed fits as CSV rows level,slope,residual."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("level,slope,residual\n")
        for level, slope, residual in fits:
            handle.write(f"{_fmt(level)},{_fmt(slope)},{_fmt(residual)}\n")


def write_ybar_profiles(
    profiles: Iterable[tuple[float, np.ndarray, np.ndarray, np.ndarray, np.ndarray]],
    path: str | Path,
) -> None:
    """Write per-snapshot trait profiles as CSV rows t,x,ybar,rho,r_of_ybar.

    Each profile is (t, x, ybar, rho, r_of_ybar) arrays over columns; rows are
    emitted only where ybar is defined (supported columns).
    """
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("t,x,ybar,rho,r_of_ybar\n")
        for t, x, ybar, rho, r_of_ybar in profiles:
            for j in np.nonzero(np.isfinite(ybar))[0]:
                handle.write(
                    f"{_fmt(t)},{_fmt(x[j])},{_fmt(ybar[j])},"
                    f"{_fmt(rho[j])},{_fmt(r_of_ybar[j])}\n"
                )


def write_summary_rows(
    diagnostics: Iterable[FrontDiagnostics],
    path: str | Path,
) -> None:
    """Write per-snapshot summaries as CSV rows t,cstar_bound,fitness_residual,edge_position."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("t,cstar_bound,fitness_residual,edge_position\n")
        for diag in diagnostics:
            handle.write(
                f"{_fmt(diag.t)},{_fmt(diag.cstar_bound)},"
                f"{_fmt(diag.fitness_residual)},{_fmt(diag.edge_position)}\n"
            )
