"""Command-line entry point: render panels from one artifact directory.

Exit codes: 0 on success (including an empty snapshot selection), 2 for
argument errors, 3 when the artifact directory is missing or malformed.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .artifacts import ArtifactError, ArtifactStore
from .render import SUPPORT_FRACTION, PlotJob, render


def _parse_floats(text: str) -> tuple[float, ...]:
    stripped = text.strip()
    if not stripped:
        return ()
    try:
        return tuple(float(part) for part in stripped.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}") from exc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frontpanels",
        description="Render density/trait panels from a phenofront artifact directory.",
    )
    parser.add_argument("artifact_dir", type=Path, help="run artifact directory")
    parser.add_argument(
        "--times",
        type=_parse_floats,
        default=None,
        help="comma-separated snapshot times (default: every stored snapshot)",
    )
    parser.add_argument(
        "--outdir",
        type=Path,
        default=None,
        help="image output directory (default: <artifact_dir>/figures)",
    )
    parser.add_argument(
        "--panels",
        default="heatmap,profiles,inset",
        help="comma-separated subset of: heatmap, profiles, inset",
    )
    parser.add_argument(
        "--support-fraction",
        type=float,
        default=SUPPORT_FRACTION,
        help="mask heatmap columns below this fraction of the carrying value",
    )
    parser.add_argument("--dpi", type=int, default=120)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        if args.times is None:
            times = tuple(ArtifactStore(args.artifact_dir).snapshot_times)
        else:
            times = args.times
        job = PlotJob(
            artifact_dir=args.artifact_dir,
            times=times,
            output_dir=args.outdir or args.artifact_dir / "figures",
            panels=tuple(p for p in args.panels.split(",") if p),
            support_fraction=args.support_fraction,
            dpi=args.dpi,
        )
    except ValueError as exc:
        print(f"argument error: {exc}", file=sys.stderr)
        return 2
    except ArtifactError as exc:
        print(f"artifact error: {exc}", file=sys.stderr)
        return 3
    try:
        written = render(job)
    except ArtifactError as exc:
        print(f"artifact error: {exc}", file=sys.stderr)
        return 3
    if written:
        for path in written:
            print(path)
    else:
        print("no snapshots selected; nothing rendered")
    return 0


if __name__ == "__main__":
    sys.exit(main())
