"""Full time-loop plumbing: snapshots, tracks, determinism, boundary guard."""
from __future__ import annotations

import numpy as np
import pytest

from phenofront.grid import compute_rho
from phenofront.model import apply_overrides, preset
from phenofront.solver import (
    BoundaryGuardError,
    RunSummary,
    SolverError,
    run,
)


def quick_config(**overrides):
    base = {
        "x_max": 6.0,
        "t_max": 0.5,
        "dt": 0.05,
        "dx": 0.1,
        "dy": 0.1,
        "output_times": (0.0, 0.25, 0.5),
        "level_values": (0.5,),
    }
    base.update(overrides)
    return apply_overrides(preset("fig1"), base)


class TestRunLoop:
    def test_zero_horizon_emits_only_initial_snapshot(self):
        config = quick_config(t_max=0.0, output_times=(0.0,))
        summary = run(config)
        assert summary.completed
        assert len(summary.snapshots) == 1
        assert summary.snapshots[0].time_label == 0.0
        assert summary.reports == []

    def test_snapshots_at_requested_times(self):
        sunk = []
        summary = run(quick_config(), snapshot_sink=sunk.append)
        assert [s.time_label for s in summary.snapshots] == [0.0, 0.25, 0.5]
        assert [s.time_label for s in sunk] == [0.0, 0.25, 0.5]
        assert summary.final_field.time_label == 0.5
        assert len(summary.reports) == 10

    def test_reports_carry_step_bookkeeping(self):
        summary = run(quick_config())
        times = [rep.t for rep in summary.reports]
        np.testing.assert_allclose(times, 0.05 * np.arange(1, 11), rtol=1e-12)
        for rep in summary.reports:
            assert rep.picard_iters >= 1
            assert rep.picard_residual <= 1e-10
            assert rep.root_max_residual <= 1e-12
            # the transport half-step conserves mass
            assert rep.mass_after == pytest.approx(rep.mass_before, rel=1e-9)

    def test_level_tracks_recorded_each_step(self):
        summary = run(quick_config())
        track = summary.tracks[0.5]
        assert track.times[0] == 0.0
        assert len(track.times) == 11  # t=0 plus every accepted step
        assert all(np.isfinite(track.positions))
        # the population spreads: the level-0.5 point moves right over time
        assert track.positions[-1] > track.positions[0]

    def test_density_stays_bounded(self):
        config = quick_config()
        grid = config.build_grid()
        summary = run(config)
        rho = compute_rho(summary.final_field, grid).values
        assert summary.final_field.values.min() >= 0.0
        assert rho.max() <= config.model.rho_max + 1e-10

    def test_deterministic_replay(self):
        first = run(quick_config())
        second = run(quick_config())
        np.testing.assert_array_equal(
            first.final_field.values, second.final_field.values
        )
        assert [r.picard_iters for r in first.reports] == [
            r.picard_iters for r in second.reports
        ]


class TestBoundaryGuard:
    def test_population_near_boundary_aborts_with_partial_summary(self):
        # initial data on a domain cut through the Gaussian bulk: the guard
        # zone already holds visible density at t=0
        config = quick_config(x_max=2.0, output_times=(0.0,))
        with pytest.raises(BoundaryGuardError) as excinfo:
            run(config)
        summary = excinfo.value.summary
        assert isinstance(summary, RunSummary)
        assert not summary.completed
        assert summary.failure is not None
        assert "x_max" in summary.failure

    def test_guard_error_is_solver_error(self):
        assert issubclass(BoundaryGuardError, SolverError)
