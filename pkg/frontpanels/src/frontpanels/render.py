"""Panel rendering: heatmaps, profile overlays, and the level-set inset.

One rendered figure stacks the requested snapshot times as rows.  Each row
shows the trait-normalized density n/rho as a heatmap (left) with the
dominant-trait curve drawn on top, and the column density rho (right, solid)
with the growth rate at the dominant trait dashed over it.  The last profile
axis carries an inset with the tracked level-set positions against time.

Normalization happens at render time from the stored snapshot: columns whose
density integral falls below the support threshold are masked out of the
heatmap rather than divided through, so the empty region ahead of the front
stays blank instead of amplifying round-off.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .artifacts import ArtifactStore, Snapshot

__all__ = ["SUPPORT_FRACTION", "PlotJob", "normalized_density", "render"]

#: Fraction of the carrying value below which a column counts as unoccupied
#: and is masked in normalized heatmaps (matches the simulator's support
#: convention for trait diagnostics).
SUPPORT_FRACTION = 0.05

_KNOWN_PANELS = ("heatmap", "profiles", "inset")


@dataclass(frozen=True)
class PlotJob:
    """One rendering request against a run's artifact directory."""

    artifact_dir: Path
    times: tuple[float, ...]
    output_dir: Path
    panels: tuple[str, ...] = _KNOWN_PANELS
    support_fraction: float = SUPPORT_FRACTION
    dpi: int = 120

    def __post_init__(self):
        unknown = [p for p in self.panels if p not in _KNOWN_PANELS]
        if unknown:
            raise ValueError(
                f"unknown panels {unknown}; available: {list(_KNOWN_PANELS)}"
            )
        if not (0.0 <= self.support_fraction < 1.0):
            raise ValueError(
                f"support_fraction must lie in [0, 1), got {self.support_fraction}"
            )


def normalized_density(
    snapshot: Snapshot, rho_max: float, support_fraction: float = SUPPORT_FRACTION
) -> np.ma.MaskedArray:
    """Per-column n/rho with unoccupied columns masked.

    A column is unoccupied when its density integral is below
    ``support_fraction * rho_max``; those columns are masked in full rather
    than normalized, which keeps 0/0 out of the heatmap.
    """
    rho = snapshot.column_density()
    supported = rho >= support_fraction * rho_max
    safe = np.where(supported, rho, 1.0)
    normalized = snapshot.density / safe[:, np.newaxis]
    mask = np.broadcast_to(~supported[:, np.newaxis], normalized.shape)
    return np.ma.MaskedArray(normalized, mask=mask)


def _panel_filename(labels: list[str]) -> str:
    return "panels_t" + "_t".join(labels) + ".png"


def render(job: PlotJob) -> list[Path]:
    """Render the requested panels; returns the written image paths.

    An empty snapshot selection renders nothing and succeeds.  Missing or
    malformed artifacts raise :class:`~frontpanels.artifacts.ArtifactError`.
    """
    if not job.times:
        return []
    store = ArtifactStore(job.artifact_dir)
    snapshots = [store.snapshot(t) for t in job.times]
    profiles = store.trait_profiles() if (
        "heatmap" in job.panels or "profiles" in job.panels
    ) else {}
    tracks = store.level_tracks() if "inset" in job.panels else {}

    want_heatmap = "heatmap" in job.panels
    want_profiles = "profiles" in job.panels
    n_cols = int(want_heatmap) + int(want_profiles)
    if n_cols == 0:
        return []
    n_rows = len(snapshots)

    cmap = plt.get_cmap("viridis").copy()
    cmap.set_bad("white")

    fig, axes = plt.subplots(
        n_rows,
        n_cols,
        figsize=(5.2 * n_cols, 2.9 * n_rows),
        squeeze=False,
        constrained_layout=True,
    )
    last_profile_ax = None
    for row, snapshot in enumerate(snapshots):
        profile = _nearest_profile(profiles, snapshot.time)
        col = 0
        if want_heatmap:
            ax = axes[row][col]
            col += 1
            shading = normalized_density(
                snapshot, store.rho_max, job.support_fraction
            )
            mesh = ax.pcolormesh(
                snapshot.x, snapshot.y, shading.T, cmap=cmap, shading="nearest"
            )
            if profile is not None:
                ax.plot(profile.x, profile.ybar, color="white", lw=1.2)
            ax.set_ylim(0.0, store.y_max)
            ax.set_ylabel("y")
            ax.set_title(f"normalized density, t = {snapshot.time:g}")
            fig.colorbar(mesh, ax=ax)
        if want_profiles:
            ax = axes[row][col]
            last_profile_ax = ax
            rho = snapshot.column_density()
            ax.plot(snapshot.x, rho, color="tab:blue", lw=1.5, label="density")
            if profile is not None:
                ax.plot(
                    profile.x,
                    profile.growth_at_ybar,
                    color="tab:red",
                    lw=1.2,
                    ls="--",
                    label="growth at dominant trait",
                )
            ax.set_ylim(0.0, 1.1 * store.rho_max)
            ax.set_ylabel("density")
            ax.set_title(f"t = {snapshot.time:g}")
            if row == 0:
                ax.legend(loc="upper right", fontsize="small")
        for c in range(n_cols):
            if row == n_rows - 1:
                axes[row][c].set_xlabel("x")

    if "inset" in job.panels and tracks and last_profile_ax is not None:
        inset = last_profile_ax.inset_axes((0.08, 0.12, 0.36, 0.42))
        for level in sorted(tracks):
            times, positions = tracks[level]
            keep = np.isfinite(positions)
            inset.plot(times[keep], positions[keep], lw=1.0, label=f"{level:g}")
        inset.set_xlabel("t", fontsize="x-small")
        inset.set_ylabel("front x", fontsize="x-small")
        inset.tick_params(labelsize="x-small")
        inset.set_title("level sets", fontsize="x-small")

    job.output_dir.mkdir(parents=True, exist_ok=True)
    out_path = job.output_dir / _panel_filename([s.label for s in snapshots])
    fig.savefig(out_path, dpi=job.dpi)
    plt.close(fig)
    return [out_path]


def _nearest_profile(profiles, time):
    if time in profiles:
        return profiles[time]
    for t, profile in profiles.items():
        if abs(t - time) <= 1e-9 * max(1.0, abs(t)):
            return profile
    return None
