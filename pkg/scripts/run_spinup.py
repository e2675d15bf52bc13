#!/usr/bin/env python3
"""Wave-free spin-up to a statistically steady state at full resolution.

Writes snapshots and a diagnostics CSV under --out; the final snapshot is
the initial condition for the coupled experiments.

    python scripts/run_spinup.py --out out/spinup [--nx 128] [--t-spin 100]
"""

import argparse
import sys

from wavecurrent.config import SimConfig
from wavecurrent.experiments import run_simulation


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="out/spinup")
    p.add_argument("--nx", type=int, default=128)
    p.add_argument("--t-spin", type=float, default=100.0)
    p.add_argument("--cfl", type=float, default=0.2)
    args = p.parse_args()

    cfg = SimConfig.from_dict(
        {
            "grid": {"nx": args.nx, "ny": args.nx + 1, "Lx": 50.0, "Ly": 50.0},
            "physics": {"wave_model": "none"},
            "run": {"t_end": 0.0, "cfl": args.cfl},
            "stages": [{"kind": "spinup", "t_spin": args.t_spin}],
            "io": {
                "out_dir": args.out,
                "snapshot_interval": 10.0,
                "diagnostics_interval": 0.5,
            },
        }
    )
    return run_simulation(cfg)


if __name__ == "__main__":
    sys.exit(main())
