"""Command line: run simulations into artifact directories, verify properties.

``phenofront run CONFIG --outdir DIR`` executes a simulation and writes a
self-describing artifact directory::

    DIR/
      manifest                  # YAML: status, resolved config, paths, wall clock
      steps.csv                 # per-step numerical bookkeeping
      snapshots/t_<time>.csv    # density snapshots x,y,n at the output times
      diagnostics/level_tracks.csv
      diagnostics/speeds.csv
      diagnostics/ybar.csv
      diagnostics/summary.csv

CONFIG is a preset name or a YAML file; flat flags override single fields.
``phenofront verify SUITE`` runs one randomized property suite.

Exit codes: 0 success, 2 configuration error, 3 solver failure (partial
artifacts are kept), 4 verification failure.
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .checks import run_suite, suite_names
from .diagnostics import (
    DiagnosticsError,
    dominant_trait,
    estimate_front_speed,
    snapshot_diagnostics,
    write_level_tracks,
    write_speed_fits,
    write_summary_rows,
    write_ybar_profiles,
)
from .grid import DensityField, Grid, compute_rho, write_snapshot
from .model import (
    ConfigError,
    RunConfig,
    apply_overrides,
    config_from_dict,
    config_to_dict,
    preset,
    preset_names,
)
from .solver import RunSummary, SolverError, run as run_simulation

_OVERRIDE_KEYS = ("x_max", "t_max", "dt", "dx", "dy", "epsilon", "output_times", "level_values")


def _float_list(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    return [float(part) for part in text.split(",")]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phenofront",
        description="Finite-volume simulator for phenotype-structured front propagation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a simulation and write an artifact directory")
    run_p.add_argument(
        "config",
        help=f"preset name ({', '.join(preset_names())}) or path to a YAML config file",
    )
    run_p.add_argument("--outdir", "-o", type=Path, required=True,
                       help="artifact directory to write")
    run_p.add_argument("--x-max", type=float, dest="x_max", help="override spatial extent")
    run_p.add_argument("--t-max", type=float, dest="t_max", help="override final time")
    run_p.add_argument("--dt", type=float, help="override time step")
    run_p.add_argument("--dx", type=float, help="override spatial step")
    run_p.add_argument("--dy", type=float, help="override trait step")
    run_p.add_argument("--epsilon", type=float, help="override the scaling parameter")
    run_p.add_argument("--output-times", type=_float_list, dest="output_times",
                       help="comma-separated snapshot times")
    run_p.add_argument("--levels", type=_float_list, dest="level_values",
                       help="comma-separated tracked rho levels")

    verify_p = sub.add_parser("verify", help="run a randomized verification suite")
    verify_p.add_argument("suite", choices=suite_names())
    verify_p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    verify_p.add_argument("--cases", type=int, default=None,
                          help="number of random cases (suite default if omitted)")
    return parser


def _load_config(args: argparse.Namespace) -> RunConfig:
    name = args.config
    if name in preset_names():
        config = preset(name)
    else:
        path = Path(name)
        if not path.exists():
            raise ConfigError(
                f"config {name!r} is neither a preset ({', '.join(preset_names())}) "
                "nor an existing file"
            )
        with open(path, "r", encoding="utf-8") as handle:
            data = yaml.safe_load(handle)
        if data is None:
            raise ConfigError(f"config file {name!r} is empty")
        config = config_from_dict(data)
    overrides = {key: getattr(args, key) for key in _OVERRIDE_KEYS}
    return apply_overrides(config, overrides)


def _write_steps(summary: RunSummary, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(
            "t,picard_iters,picard_residual,linear_residual,"
            "root_max_residual,mass_before,mass_after\n"
        )
        for rep in summary.reports:
            handle.write(
                f"{rep.t:.17g},{rep.picard_iters},{rep.picard_residual:.17g},"
                f"{rep.linear_residual:.17g},{rep.root_max_residual:.17g},"
                f"{rep.mass_before:.17g},{rep.mass_after:.17g}\n"
            )


def _write_diagnostics(summary: RunSummary, config: RunConfig, grid: Grid, diag_dir: Path) -> None:
    write_level_tracks(summary.tracks, diag_dir / "level_tracks.csv")

    fits = []
    for level in config.level_values:
        track = summary.tracks[level]
        try:
            slope, residual = estimate_front_speed(
                track.times, track.positions, config.t_max / 2.0, config.t_max
            )
        except DiagnosticsError:
            slope, residual = math.nan, math.nan
        fits.append((level, slope, residual))
    write_speed_fits(fits, diag_dir / "speeds.csv")

    profiles = []
    summaries = []
    for snapshot in summary.snapshots:
        ybar = dominant_trait(snapshot, grid, config.model)
        rho = compute_rho(snapshot, grid).values
        r_of_ybar = np.full_like(ybar, np.nan)
        finite = np.isfinite(ybar)
        r_of_ybar[finite] = config.model.growth_rate(ybar[finite])
        profiles.append((snapshot.time_label, grid.x_centers, ybar, rho, r_of_ybar))
        summaries.append(snapshot_diagnostics(snapshot, grid, config.model))
    write_ybar_profiles(profiles, diag_dir / "ybar.csv")
    write_summary_rows(summaries, diag_dir / "summary.csv")


def _write_manifest(
    outdir: Path,
    config: RunConfig,
    failure: str | None,
    elapsed: float,
    snapshot_paths: dict[str, str],
) -> None:
    manifest = {
        "artifact": "phenofront-run",
        "version": __version__,
        "status": "completed" if failure is None else "failed",
        "failure": failure,
        "wall_clock_seconds": round(elapsed, 3),
        "config": config_to_dict(config),
        "paths": {
            "steps": "steps.csv",
            "snapshots": snapshot_paths,
            "diagnostics": {
                "level_tracks": "diagnostics/level_tracks.csv",
                "speeds": "diagnostics/speeds.csv",
                "ybar": "diagnostics/ybar.csv",
                "summary": "diagnostics/summary.csv",
            },
        },
    }
    with open(outdir / "manifest", "w", encoding="utf-8") as handle:
        yaml.safe_dump(manifest, handle, sort_keys=False)


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        config = _load_config(args)
    except (ConfigError, yaml.YAMLError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    outdir: Path = args.outdir
    (outdir / "snapshots").mkdir(parents=True, exist_ok=True)
    diag_dir = outdir / "diagnostics"
    diag_dir.mkdir(parents=True, exist_ok=True)
    grid = config.build_grid()

    snapshot_paths: dict[str, str] = {}

    def sink(field: DensityField) -> None:
        label = f"{field.time_label:.10g}"
        relative = f"snapshots/t_{label}.csv"
        write_snapshot(field, grid, outdir / relative)
        snapshot_paths[label] = relative

    started = time.perf_counter()
    failure: str | None = None
    try:
        summary = run_simulation(config, snapshot_sink=sink)
    except SolverError as exc:
        failure = str(exc)
        summary = getattr(exc, "summary", None)
        print(f"solver failure: {exc}", file=sys.stderr)
    elapsed = time.perf_counter() - started
    if summary is not None:
        _write_steps(summary, outdir / "steps.csv")
        _write_diagnostics(summary, config, grid, diag_dir)
    _write_manifest(outdir, config, failure, elapsed, snapshot_paths)
    return 0 if failure is None else 3


def _cmd_verify(args: argparse.Namespace) -> int:
    try:
        result = run_suite(args.suite, seed=args.seed, cases=args.cases)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    status = "PASS" if result.passed else "FAIL"
    print(f"[{status}] suite {result.name}: {result.cases} cases, "
          f"{len(result.failures)} failures")
    for note in result.notes:
        print(f"  note: {note}")
    for message in result.failures[:20]:
        print(f"  {message}")
    if len(result.failures) > 20:
        print(f"  ... and {len(result.failures) - 20} more")
    return 0 if result.passed else 4


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    if args.command == "run":
        return _cmd_run(args)
    return _cmd_verify(args)


if __name__ == "__main__":
    sys.exit(main())
