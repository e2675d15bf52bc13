#!/usr/bin/env python3
"""Render the experiment figures from simulator outputs.

Figure A: coupled vs uncoupled wave amplitude N at the final time
(side-by-side).  Figure B: fluid PV Q_F next to wave PV Q_W from the
zero-PV run.  Figure C: invariant drift time series.

Requires the wavecurrent-render package (renderer/); runs its CLI, i.e.
uses only the published file formats.

    python scripts/render_figures.py --dir out/experiments --t 30
"""

import argparse
import subprocess
import sys
from pathlib import Path


def snap(dirpath: Path, tag: str, t: float) -> str:
    path = dirpath / f"{tag}_t{t:012.6f}.snap"
    if not path.exists():
        raise SystemExit(f"missing snapshot {path}")
    return str(path)


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--dir", default="out/experiments")
    p.add_argument("--t", type=float, default=30.0)
    p.add_argument("--out", default="out/figures")
    args = p.parse_args()
    d = Path(args.dir)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    jobs = [
        (
            ["--snapshot", snap(d, "exp1-coupled", args.t),
             "--snapshot", snap(d, "exp1-uncoupled", args.t),
             "--field", "N", "--out", str(out / "wave_amplitude_coupled_vs_free.png")],
        ),
        (
            ["--snapshot", snap(d, "exp2-zero-pv", args.t),
             "--snapshot", snap(d, "exp2-zero-pv", args.t),
             "--field", "Q_F", "--field", "Q_W",
             "--out", str(out / "fluid_vs_wave_pv.png")],
        ),
        (
            ["--diagnostics", str(d / "diag_exp1-coupled.csv"),
             "--columns", "int_N,E_total",
             "--out", str(out / "invariant_drift.png")],
        ),
    ]
    for (argv,) in jobs:
        cmd = [sys.executable, "-m", "wcrender.cli", *argv]
        print(" ".join(cmd), flush=True)
        rc = subprocess.run(cmd).returncode
        if rc != 0:
            return rc
    print(f"figures in {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
