"""Cell-centered mesh, density containers, and snapshot serialization.

The computational domain is the rectangle [0, x_max] x [0, y_max], discretized
into m_x * m_y uniform cells.  Densities are stored cell-centered as arrays of
shape (m_x, m_y); the macroscopic column density rho is the trait integral of
the density, approximated by the midpoint rule.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Grid",
    "DensityField",
    "RhoProfile",
    "compute_rho",
    "total_mass",
    "write_snapshot",
    "read_snapshot",
]

#: Relative slack allowed when checking that an extent is a whole number of steps.
_DIVISIBILITY_RTOL = 1e-9

#: Format giving full round-trip precision for IEEE doubles.
_FLOAT_FMT = "%.17g"


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform cell-centered mesh on [0, x_max] x [0, y_max]."""

    x_max: float
    y_max: float
    dx: float
    dy: float
    m_x: int
    m_y: int
    x_centers: np.ndarray
    y_centers: np.ndarray

    @classmethod
    def from_extents(cls, x_max: float, y_max: float, dx: float, dy: float) -> "Grid":
        """Build the mesh, requiring each extent to be a whole number of cells."""
        m_x = _cell_count(x_max, dx, "x")
        m_y = _cell_count(y_max, dy, "y")
        return cls(
            x_max=float(x_max),
            y_max=float(y_max),
            dx=float(dx),
            dy=float(dy),
            m_x=m_x,
            m_y=m_y,
            x_centers=(np.arange(m_x) + 0.5) * dx,
            y_centers=(np.arange(m_y) + 0.5) * dy,
        )

    @property
    def shape(self) -> tuple[int, int]:
        return (self.m_x, self.m_y)


def _cell_count(extent: float, step: float, axis: str) -> int:
    if not np.isfinite(extent) or extent <= 0:
        raise ValueError(f"{axis} extent must be positive and finite, got {extent}")
    if not np.isfinite(step) or step <= 0:
        raise ValueError(f"{axis} step must be positive and finite, got {step}")
    count = int(round(extent / step))
    if count < 1 or abs(count * step - extent) > _DIVISIBILITY_RTOL * max(abs(extent), 1.0):
        raise ValueError(
            f"{axis} extent {extent} is not a whole number of steps of size {step}"
        )
    return count


@dataclass(eq=False)
class DensityField:
    """Cell-centered population density n(x, y) at one instant.

    ``values`` has shape (m_x, m_y) and must be finite and nonnegative; the
    constructor takes ownership of the array (callers must not mutate it
    afterwards).
    """

    values: np.ndarray
    time_label: float

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"density values must be 2-D, got shape {values.shape}")
        if not np.isfinite(values).all():
            raise ValueError("density values must be finite")
        if (values < 0.0).any():
            raise ValueError("density values must be nonnegative")
        self.values = values
        self.time_label = float(self.time_label)


@dataclass(eq=False)
class RhoProfile:
    """Column density rho(x) = integral of n over the trait axis, at one instant."""

    values: np.ndarray
    time_label: float

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError(f"rho values must be 1-D, got shape {values.shape}")
        self.values = values
        self.time_label = float(self.time_label)


def compute_rho(field: DensityField, grid: Grid) -> RhoProfile:
    """Midpoint-rule trait integral of the density, column by column."""
    if field.values.shape != grid.shape:
        raise ValueError(
            f"field shape {field.values.shape} does not match grid shape {grid.shape}"
        )
    return RhoProfile(values=grid.dy * field.values.sum(axis=1), time_label=field.time_label)


def total_mass(field: DensityField, grid: Grid) -> float:
    """Total population dx*dy*sum(n) over the whole domain."""
    if field.values.shape != grid.shape:
        raise ValueError(
            f"field shape {field.values.shape} does not match grid shape {grid.shape}"
        )
    return float(grid.dx * grid.dy * field.values.sum())


def write_snapshot(field: DensityField, grid: Grid, path: str | Path) -> None:
    """Write a density snapshot as CSV with columns x,y,n.

    Rows run over cells in row-major order (the trait index varies fastest).
    Values are written with 17 significant digits so that reading the file
    back reproduces the doubles exactly.
    """
    if field.values.shape != grid.shape:
        raise ValueError(
            f"field shape {field.values.shape} does not match grid shape {grid.shape}"
        )
    x_col = np.repeat(grid.x_centers, grid.m_y)
    y_col = np.tile(grid.y_centers, grid.m_x)
    table = np.column_stack([x_col, y_col, field.values.ravel()])
    np.savetxt(path, table, fmt=_FLOAT_FMT, delimiter=",", header="x,y,n", comments="")


def read_snapshot(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read a snapshot CSV back into (x_centers, y_centers, values).

    Inverse of :func:`write_snapshot` up to bitwise identity of the doubles.
    """
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if table.shape[1] != 3:
        raise ValueError(f"snapshot file {path} must have columns x,y,n")
    x_col, y_col, n_col = table[:, 0], table[:, 1], table[:, 2]
    m_y = int(np.count_nonzero(x_col == x_col[0]))
    if m_y < 1 or len(n_col) % m_y != 0:
        raise ValueError(f"snapshot file {path} is not a rectangular grid")
    m_x = len(n_col) // m_y
    return x_col[::m_y].copy(), y_col[:m_y].copy(), n_col.reshape(m_x, m_y)
