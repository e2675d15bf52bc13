"""Renderer CLI.

    render --snapshot PATH --field N --out img.png
    render --snapshot A.snap --snapshot B.snap --field N --out panels.png
    render --snapshot S.snap --field Q_F --field Q_W --out pv.png
    render --diagnostics diag.csv --columns int_N,E_wave --out drift.png

Repeat --snapshot for side-by-side panels; --field is broadcast when given
once.  Exits 0 on success, 2 on unreadable input or a missing field (the
field name is reported).
"""

from __future__ import annotations

import argparse
import sys

from .reader import MissingFieldError, SnapshotFormatError
from .render import RenderJob, render, render_drift_series


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="render", description="render wavecurrent snapshots and diagnostics"
    )
    p.add_argument("--snapshot", action="append", default=[], help="snapshot file (repeatable)")
    p.add_argument("--field", action="append", default=[], help="field to plot (repeatable)")
    p.add_argument("--diagnostics", help="diagnostics CSV for a drift time series")
    p.add_argument("--columns", help="comma-separated diagnostics columns")
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--cmap", default="viridis")
    p.add_argument("--dpi", type=int, default=150)
    p.add_argument("--vmin", type=float)
    p.add_argument("--vmax", type=float)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.diagnostics:
            columns = tuple((args.columns or "int_N").split(","))
            render_drift_series(args.diagnostics, columns, args.out, dpi=args.dpi)
            return 0
        if not args.snapshot:
            print("error: need --snapshot or --diagnostics", file=sys.stderr)
            return 2
        fields = tuple(args.field) or ("N",)
        limits = None
        if args.vmin is not None and args.vmax is not None:
            limits = (args.vmin, args.vmax)
        job = RenderJob(
            snapshots=tuple(args.snapshot),
            fields=fields,
            out=args.out,
            cmap=args.cmap,
            dpi=args.dpi,
            limits=limits,
        )
        render(job)
        return 0
    except MissingFieldError as exc:
        print(f"error: missing field {exc.field!r}", file=sys.stderr)
        return 2
    except (SnapshotFormatError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
