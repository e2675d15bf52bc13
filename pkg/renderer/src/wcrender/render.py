"""Heatmap panels and drift time series from simulator output files.

Panels reproduce the two-figure layout of the experiments: side-by-side
heatmaps of a selected field from one snapshot per panel.  Vorticity-like
fields (Q_F, Q_W, Psi) get per-panel symmetric colour limits about zero;
everything else uses its own data range.  Output is byte-stable for fixed
inputs: the Agg backend, a fixed dpi, and pinned PNG metadata.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .reader import Snapshot, read_diagnostics, read_snapshot

SYMMETRIC_FIELDS = {"Q_F", "Q_W", "Psi", "Z"}
VALID_FIELDS = ("N", "Q_F", "Q_W", "rho", "Psi")


@dataclass(frozen=True)
class RenderJob:
    snapshots: tuple[str, ...]
    fields: tuple[str, ...]  # one per panel, or a single name broadcast
    out: str
    cmap: str = "viridis"
    dpi: int = 150
    limits: tuple[float, float] | None = None  # override colour limits

    def panel_fields(self) -> tuple[str, ...]:
        if len(self.fields) == 1:
            return self.fields * len(self.snapshots)
        if len(self.fields) != len(self.snapshots):
            raise ValueError("need one field per snapshot (or a single field)")
        return self.fields


def color_limits(name: str, data: np.ndarray) -> tuple[float, float]:
    """Symmetric-about-zero limits for PV-like fields; data range otherwise.

    A uniformly zero field maps to the colormap midpoint via (-1, 1).
    """
    if name in SYMMETRIC_FIELDS:
        m = float(np.max(np.abs(data)))
        if m == 0.0:
            return -1.0, 1.0
        return -m, m
    lo, hi = float(np.min(data)), float(np.max(data))
    if lo == hi:
        return lo - 1.0, hi + 1.0
    return lo, hi


def render(job: RenderJob) -> str:
    """Render the job's panels; returns the output path."""
    snaps = [read_snapshot(p) for p in job.snapshots]
    names = job.panel_fields()
    n = len(snaps)
    fig, axes = plt.subplots(
        1, n, figsize=(5.0 * n, 4.2), squeeze=False, constrained_layout=True
    )
    for ax, snap, name in zip(axes[0], snaps, names):
        data = snap.field(name)
        lo, hi = job.limits if job.limits else color_limits(name, data)
        im = ax.imshow(
            data,
            origin="lower",
            extent=(0.0, snap.Lx, 0.0, snap.Ly),
            cmap=job.cmap,
            vmin=lo,
            vmax=hi,
            interpolation="nearest",
        )
        ax.set_title(f"{name} at t = {snap.time:g}")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        fig.colorbar(im, ax=ax, shrink=0.85)
    fig.savefig(job.out, dpi=job.dpi, metadata={"Software": "wavecurrent-render"})
    plt.close(fig)
    return job.out


def render_drift_series(
    csv_path: str,
    columns: tuple[str, ...],
    out: str,
    dpi: int = 150,
    relative: bool = True,
) -> str:
    """Plot invariant drift |f(t) - f(0)| (relative when f(0) != 0)."""
    table = read_diagnostics(csv_path)
    t = table["t"]
    fig, ax = plt.subplots(figsize=(6.0, 4.2), constrained_layout=True)
    for name in columns:
        y = table[name]
        drift = np.abs(y - y[0])
        if relative and y[0] != 0.0:
            drift = drift / abs(y[0])
        # keep exact zeros visible on the log axis
        ax.plot(t, np.maximum(drift, 1e-18), label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("drift" + (" (relative)" if relative else ""))
    ax.set_yscale("log")
    ax.legend()
    fig.savefig(out, dpi=dpi, metadata={"Software": "wavecurrent-render"})
    plt.close(fig)
    return out
