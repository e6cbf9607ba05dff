"""Batch figure renderer for ``phenofront`` run artifacts.

The package consumes a run's artifact directory — the ``manifest`` file plus
the CSV files it lists — and renders publication-style panels: a normalized
density heatmap with the dominant-trait curve overlaid, column-density
profiles with the growth rate at the dominant trait dashed on top, and an
inset tracking level-set positions over time.  It never imports the
simulator; the artifact files are the only interface.
"""
from .artifacts import ArtifactError, ArtifactStore, Snapshot, TraitProfile
from .render import SUPPORT_FRACTION, PlotJob, normalized_density, render

__version__ = "0.1.0"

__all__ = [
    "ArtifactError",
    "ArtifactStore",
    "Snapshot",
    "TraitProfile",
    "PlotJob",
    "SUPPORT_FRACTION",
    "normalized_density",
    "render",
    "__version__",
]
