"""Command-line interface.

    wavecurrent spinup  --config c.json [--out DIR] [--seed N] [--override k=v ...]
    wavecurrent run     --config c.json [--restart SNAP] ...
    wavecurrent nls     --config c.json ...
    wavecurrent inspect --snapshot PATH
    wavecurrent diag    --snapshot PATH [--out FILE]

`spinup`, `run`, and `nls` execute the configured stages (`spinup` and
`nls` override the stage list with a single stage of that kind).  Exit
status: 0 success, 2 unreadable/invalid configuration, 3 numerical
blow-up (a post-mortem snapshot is written first).
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, SimConfig, StageConfig, parse_override
from .diagnostics import CSV_COLUMNS, record, record_to_row
from .elliptic import PoissonSolver
from .experiments import (
    EXIT_CONFIG,
    EXIT_OK,
    run_simulation,
    state_from_snapshot_fields,
)
from .fluid import diagnose
from .snapshots import SnapshotError, read_header, read_snapshot
from .waves import WaveModel, WaveParams


def _add_run_args(p: argparse.ArgumentParser):
    p.add_argument("--config", required=True, help="JSON config path")
    p.add_argument("--out", help="override io.out_dir")
    p.add_argument("--seed", type=int, help="override the top-level seed")
    p.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="dotted-key config override, repeatable (e.g. run.cfl=0.2)",
    )


def _load_config(args) -> SimConfig:
    cfg = SimConfig.load(args.config)
    overrides = dict(parse_override(item) for item in args.override)
    if overrides:
        cfg = cfg.with_overrides(overrides)
    if args.out is not None:
        cfg = cfg.with_overrides({"io.out_dir": args.out})
    if args.seed is not None:
        cfg = cfg.with_overrides({"seed": args.seed})
        if cfg.noise is not None:
            cfg = cfg.with_overrides({"noise.seed": args.seed})
    return cfg.validate()


def _cmd_stage_run(args, forced_stage: str | None) -> int:
    try:
        cfg = _load_config(args)
        if forced_stage == "spinup":
            stages = tuple(s for s in cfg.stages if s.kind == "spinup") or (
                StageConfig(kind="spinup"),
            )
            cfg = SimConfig.from_dict({**cfg.to_dict(), "stages": [
                {"kind": s.kind, "t_spin": s.t_spin, "zero_fluid_pv": s.zero_fluid_pv}
                for s in stages
            ]})
        elif forced_stage == "nls_only":
            cfg = cfg.with_overrides({"stages": [{"kind": "nls_only"}]})
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run_simulation(cfg)
    except (SnapshotError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _cmd_restart_run(args) -> int:
    try:
        cfg = _load_config(args)
        if args.restart is not None:
            cfg = cfg.with_overrides({"io.restart": args.restart})
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run_simulation(cfg)
    except (SnapshotError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _cmd_inspect(args) -> int:
    try:
        header = read_header(args.snapshot)
    except (SnapshotError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(
        json.dumps(
            {
                "grid": {
                    "nx": header.grid.nx,
                    "ny": header.grid.ny,
                    "Lx": header.grid.Lx,
                    "Ly": header.grid.Ly,
                },
                "time": header.time,
                "step": header.step,
                "stage": header.stage,
                "wave_model": header.wave_model,
                "kappa": header.kappa,
                "alpha": header.alpha,
                "fields": list(header.field_names),
            },
            indent=2,
            sort_keys=True,
        )
    )
    return EXIT_OK


def _cmd_diag(args) -> int:
    try:
        header, fields = read_snapshot(args.snapshot)
        state = state_from_snapshot_fields(header.grid, fields, header.time)
        params = WaveParams(
            kappa=header.kappa,
            alpha=header.alpha if header.alpha > 0 else 1.0,
            model=WaveModel(header.wave_model),
        )
        solver = PoissonSolver(header.grid)
        diag = diagnose(state, params, solver)
        rec = record(state, diag, params)
    except (SnapshotError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    lines = [",".join(CSV_COLUMNS), ",".join(record_to_row(rec))]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavecurrent",
        description="2D Euler flow coupled to NLS wave amplitudes (PV form)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spinup", help="run the wave-free spin-up stage only")
    _add_run_args(p)

    p = sub.add_parser("run", help="run the configured stages")
    _add_run_args(p)
    p.add_argument("--restart", help="resume from a snapshot file")

    p = sub.add_parser("nls", help="run the uncoupled wave stage only")
    _add_run_args(p)

    p = sub.add_parser("inspect", help="print a snapshot header")
    p.add_argument("--snapshot", required=True)

    p = sub.add_parser("diag", help="recompute diagnostics from a snapshot")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--out", help="write CSV here instead of stdout")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "spinup":
        return _cmd_stage_run(args, "spinup")
    if args.command == "run":
        return _cmd_restart_run(args)
    if args.command == "nls":
        return _cmd_stage_run(args, "nls_only")
    if args.command == "inspect":
        return _cmd_inspect(args)
    if args.command == "diag":
        return _cmd_diag(args)
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
