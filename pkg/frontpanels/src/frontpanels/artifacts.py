"""Read-only access to a simulator run's artifact directory.

A run directory is identified by its ``manifest`` file (YAML).  The manifest
names every data file the run produced; this loader only ever opens files
listed there, so a directory with extra content is read selectively and a
directory with missing content fails loudly.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

__all__ = [
    "ArtifactError",
    "Snapshot",
    "TraitProfile",
    "ArtifactStore",
]


class ArtifactError(RuntimeError):
    """The artifact directory is missing, incomplete, or malformed."""


@dataclass(frozen=True)
class Snapshot:
    """One stored density field: cell-center coordinates and values."""

    time: float
    label: str
    x: np.ndarray
    y: np.ndarray
    density: np.ndarray  # shape (len(x), len(y))

    @property
    def dy(self) -> float:
        if self.y.size > 1:
            return float(self.y[1] - self.y[0])
        return 1.0

    def column_density(self) -> np.ndarray:
        """Trait-integrated density per x-column (midpoint rule)."""
        return self.dy * self.density.sum(axis=1)


@dataclass(frozen=True)
class TraitProfile:
    """Dominant-trait diagnostics of one snapshot, on its supported columns."""

    time: float
    x: np.ndarray
    ybar: np.ndarray
    rho: np.ndarray
    growth_at_ybar: np.ndarray


def _read_table(path: Path, expected_header: list[str]) -> dict[str, np.ndarray]:
    try:
        with open(path, newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header != expected_header:
                raise ArtifactError(
                    f"{path}: expected columns {expected_header}, found {header}"
                )
            rows = [[float(cell) for cell in row] for row in reader if row]
    except OSError as exc:
        raise ArtifactError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise ArtifactError(f"{path}: non-numeric cell ({exc})") from exc
    if rows:
        data = np.asarray(rows, dtype=np.float64)
    else:
        data = np.empty((0, len(expected_header)))
    return {name: data[:, i] for i, name in enumerate(expected_header)}


class ArtifactStore:
    """Lazy reader for one run's manifest and the CSV files it lists."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        manifest_path = self.root / "manifest"
        if not manifest_path.is_file():
            raise ArtifactError(f"no manifest found in {self.root}")
        try:
            with open(manifest_path, encoding="utf-8") as handle:
                manifest = yaml.safe_load(handle)
        except (OSError, yaml.YAMLError) as exc:
            raise ArtifactError(f"cannot parse manifest: {exc}") from exc
        if not isinstance(manifest, dict) or manifest.get("artifact") != "phenofront-run":
            raise ArtifactError(
                f"{manifest_path} is not a phenofront run manifest"
            )
        for key in ("config", "paths"):
            if key not in manifest:
                raise ArtifactError(f"manifest lacks the {key!r} section")
        self.manifest = manifest
        self._snapshot_labels: dict[float, str] = {}
        snapshots = manifest["paths"].get("snapshots", {})
        if not isinstance(snapshots, dict):
            raise ArtifactError("manifest snapshot listing must be a mapping")
        for label in snapshots:
            try:
                self._snapshot_labels[float(label)] = label
            except ValueError as exc:
                raise ArtifactError(f"bad snapshot label {label!r}") from exc

    # -- manifest-derived metadata ------------------------------------------

    @property
    def status(self) -> str:
        return str(self.manifest.get("status"))

    @property
    def config(self) -> dict:
        return self.manifest["config"]

    @property
    def rho_max(self) -> float:
        try:
            return float(self.config["model"]["rho_max"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ArtifactError(f"manifest config lacks model.rho_max: {exc}") from exc

    @property
    def y_max(self) -> float:
        try:
            return float(self.config["model"]["y_max"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ArtifactError(f"manifest config lacks model.y_max: {exc}") from exc

    @property
    def snapshot_times(self) -> list[float]:
        return sorted(self._snapshot_labels)

    # -- file readers --------------------------------------------------------

    def _listed_path(self, relative: str) -> Path:
        path = self.root / relative
        if not path.is_file():
            raise ArtifactError(f"manifest lists {relative} but it is missing")
        return path

    def snapshot(self, time: float) -> Snapshot:
        """Load the stored density field closest-matching the requested time."""
        label = self._snapshot_labels.get(float(time))
        if label is None:
            for value, candidate in self._snapshot_labels.items():
                if abs(value - float(time)) <= 1e-9 * max(1.0, abs(value)):
                    label = candidate
                    break
        if label is None:
            available = ", ".join(str(t) for t in self.snapshot_times) or "none"
            raise ArtifactError(
                f"no snapshot at t={time}; available times: {available}"
            )
        relative = self.manifest["paths"]["snapshots"][label]
        table = _read_table(self._listed_path(relative), ["x", "y", "n"])
        x_all, y_all, n_all = table["x"], table["y"], table["n"]
        if n_all.size == 0:
            raise ArtifactError(f"{relative}: empty snapshot")
        m_y = int(np.argmax(x_all != x_all[0])) or x_all.size
        if x_all.size % m_y:
            raise ArtifactError(f"{relative}: ragged snapshot layout")
        m_x = x_all.size // m_y
        return Snapshot(
            time=float(label),
            label=label,
            x=x_all[::m_y].copy(),
            y=y_all[:m_y].copy(),
            density=n_all.reshape(m_x, m_y),
        )

    def trait_profiles(self) -> dict[float, TraitProfile]:
        """Dominant-trait rows of the diagnostics table, grouped by time."""
        relative = self.manifest["paths"]["diagnostics"]["ybar"]
        table = _read_table(
            self._listed_path(relative), ["t", "x", "ybar", "rho", "r_of_ybar"]
        )
        profiles: dict[float, TraitProfile] = {}
        for t in np.unique(table["t"]):
            rows = table["t"] == t
            profiles[float(t)] = TraitProfile(
                time=float(t),
                x=table["x"][rows],
                ybar=table["ybar"][rows],
                rho=table["rho"][rows],
                growth_at_ybar=table["r_of_ybar"][rows],
            )
        return profiles

    def level_tracks(self) -> dict[float, tuple[np.ndarray, np.ndarray]]:
        """Per-level arrays of (times, front positions)."""
        relative = self.manifest["paths"]["diagnostics"]["level_tracks"]
        table = _read_table(self._listed_path(relative), ["t", "level", "x"])
        tracks: dict[float, tuple[np.ndarray, np.ndarray]] = {}
        for level in np.unique(table["level"]):
            rows = table["level"] == level
            order = np.argsort(table["t"][rows], kind="stable")
            tracks[float(level)] = (
                table["t"][rows][order],
                table["x"][rows][order],
            )
        return tracks
