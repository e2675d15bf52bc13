"""Read-only renderer for wavecurrent snapshot and diagnostics files."""

from .reader import Snapshot, read_diagnostics, read_snapshot
from .render import RenderJob, color_limits, render, render_drift_series

__version__ = "0.1.0"
