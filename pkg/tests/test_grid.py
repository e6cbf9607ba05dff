"""Mesh construction, density containers, reductions, and snapshot IO."""
from __future__ import annotations

import numpy as np
import pytest

from phenofront.grid import (
    DensityField,
    Grid,
    RhoProfile,
    compute_rho,
    read_snapshot,
    total_mass,
    write_snapshot,
)


class TestGridConstruction:
    def test_cell_centers(self):
        grid = Grid.from_extents(x_max=1.0, y_max=0.5, dx=0.25, dy=0.25)
        assert grid.shape == (4, 2)
        np.testing.assert_allclose(grid.x_centers, [0.125, 0.375, 0.625, 0.875])
        np.testing.assert_allclose(grid.y_centers, [0.125, 0.375])

    def test_reference_resolution_counts(self):
        grid = Grid.from_extents(x_max=25.0, y_max=1.0, dx=0.01, dy=0.02)
        assert grid.shape == (2500, 50)

    def test_float_extent_roundoff_tolerated(self):
        # 0.1 steps do not tile 20.0 exactly in binary; the builder must not
        # reject representable near-misses.
        grid = Grid.from_extents(x_max=20.0, y_max=1.0, dx=0.1, dy=0.1)
        assert grid.m_x == 200

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(x_max=1.0, y_max=1.0, dx=0.3, dy=0.25),
            dict(x_max=0.0, y_max=1.0, dx=0.1, dy=0.1),
            dict(x_max=1.0, y_max=-1.0, dx=0.1, dy=0.1),
            dict(x_max=1.0, y_max=1.0, dx=0.0, dy=0.1),
            dict(x_max=1.0, y_max=1.0, dx=np.inf, dy=0.1),
        ],
    )
    def test_rejects_bad_extents(self, kwargs):
        with pytest.raises(ValueError):
            Grid.from_extents(**kwargs)


class TestContainers:
    def test_density_field_validation(self):
        DensityField(values=np.zeros((3, 2)), time_label=0)
        with pytest.raises(ValueError):
            DensityField(values=np.zeros(3), time_label=0.0)
        with pytest.raises(ValueError):
            DensityField(values=np.full((2, 2), np.nan), time_label=0.0)
        with pytest.raises(ValueError):
            DensityField(values=np.array([[1.0, -0.5]]), time_label=0.0)

    def test_rho_profile_validation(self):
        RhoProfile(values=np.zeros(3), time_label=1.0)
        with pytest.raises(ValueError):
            RhoProfile(values=np.zeros((3, 1)), time_label=1.0)


class TestReductions:
    def grid(self) -> Grid:
        return Grid.from_extents(x_max=1.0, y_max=1.0, dx=0.25, dy=0.5)

    def test_compute_rho_midpoint_rule(self):
        grid = self.grid()
        values = np.arange(8.0).reshape(4, 2)
        rho = compute_rho(DensityField(values=values, time_label=2.0), grid)
        np.testing.assert_allclose(rho.values, 0.5 * values.sum(axis=1))
        assert rho.time_label == 2.0

    def test_compute_rho_linearity(self):
        grid = self.grid()
        rng = np.random.default_rng(7)
        a = rng.uniform(size=grid.shape)
        b = rng.uniform(size=grid.shape)
        alpha, beta = 0.3, 1.7
        combined = compute_rho(
            DensityField(values=alpha * a + beta * b, time_label=0.0), grid
        ).values
        separate = alpha * compute_rho(
            DensityField(values=a, time_label=0.0), grid
        ).values + beta * compute_rho(DensityField(values=b, time_label=0.0), grid).values
        np.testing.assert_allclose(combined, separate, rtol=1e-13)

    def test_total_mass_is_dx_sum_rho(self):
        grid = self.grid()
        rng = np.random.default_rng(11)
        field = DensityField(values=rng.uniform(size=grid.shape), time_label=0.0)
        rho = compute_rho(field, grid)
        assert total_mass(field, grid) == pytest.approx(
            grid.dx * rho.values.sum(), rel=1e-14
        )

    def test_shape_mismatch_rejected(self):
        grid = self.grid()
        field = DensityField(values=np.zeros((2, 2)), time_label=0.0)
        with pytest.raises(ValueError):
            compute_rho(field, grid)
        with pytest.raises(ValueError):
            total_mass(field, grid)


class TestSnapshotIO:
    def test_round_trip_bitwise(self, tmp_path):
        grid = Grid.from_extents(x_max=0.5, y_max=0.75, dx=0.25, dy=0.25)
        rng = np.random.default_rng(3)
        values = rng.uniform(size=grid.shape) * np.array([1e-200, 1.0, 1e200])
        field = DensityField(values=values, time_label=1.5)
        path = tmp_path / "snap.csv"
        write_snapshot(field, grid, path)
        x, y, back = read_snapshot(path)
        np.testing.assert_array_equal(back, values)
        np.testing.assert_array_equal(x, grid.x_centers)
        np.testing.assert_array_equal(y, grid.y_centers)

    def test_header_and_row_order(self, tmp_path):
        grid = Grid.from_extents(x_max=0.5, y_max=0.5, dx=0.25, dy=0.25)
        field = DensityField(
            values=np.arange(4.0).reshape(2, 2), time_label=0.0
        )
        path = tmp_path / "snap.csv"
        write_snapshot(field, grid, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "x,y,n"
        # row-major over (j, k): the trait coordinate varies fastest
        first = [float(v) for v in lines[1].split(",")]
        second = [float(v) for v in lines[2].split(",")]
        assert first[:2] == [0.125, 0.125]
        assert second[:2] == [0.125, 0.375]
        assert [first[2], second[2]] == [0.0, 1.0]

    def test_read_rejects_malformed(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x,y\n0.0,0.0\n")
        with pytest.raises(ValueError):
            read_snapshot(path)
