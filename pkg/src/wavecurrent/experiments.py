"""Experiment protocol: initial conditions, stage driver, and run orchestration.

A run is a sequence of stages, each with its own clock starting at zero:

  * spinup   -- wave-free inhomogeneous Euler flow from the prescribed
                initial PV and buoyancy, integrated to a statistically
                steady state (T_spin time units).
  * coupled  -- waves introduced on the spun-up fluid: Gaussian amplitude,
                zero imaginary part; the fluid PV is carried over or zeroed
                (the "waves create flow" configuration).
  * nls_only -- the same wave initial data with the flow switched off
                (Psi = 0), the uncoupled reference run.

Snapshots and diagnostics rows are written at configured intervals through
a dedicated background writer thread so stepping never blocks on disk; the
writer is drained before the process exits.  Every output byte is a pure
function of (config, seed): restarting from any snapshot reproduces the
uninterrupted run bit for bit.
"""

from __future__ import annotations

import os
import queue
import threading
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import SimConfig, StageConfig
from .diagnostics import (
    CSV_COLUMNS,
    DiagnosticsRecord,
    record,
    record_to_row,
)
from .elliptic import EllipticOptions, PoissonSolver
from .fluid import CoupledState, Diagnosed, FluidState, diagnose
from .grid import BcClass, Field, GridSpec, from_function, zeros
from .snapshots import PROGNOSTIC_FIELDS, read_snapshot, write_snapshot
from .stepping import (
    BlowUpError,
    NoiseSequence,
    NoiseSpec,
    StepOptions,
    ssp_rk3_step,
    stratonovich_step,
    suggest_dt,
)
from .waves import (
    WaveModel,
    WaveParams,
    WaveState,
    wave_action_density,
    wave_pv,
    zero_wave_state,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3


# ---------------------------------------------------------------------------
# initial conditions


def init_spinup(grid: GridSpec) -> CoupledState:
    """Wave-free spin-up state: prescribed PV and buoyancy, waves zero."""
    pi = np.pi

    def qf(X, Y):
        return (
            np.sin(0.16 * pi * X) * np.sin(0.16 * pi * Y)
            + 0.4 * np.cos(0.12 * pi * X) * np.cos(0.12 * pi * Y)
            + 0.3 * np.cos(0.2 * pi * X) * np.cos(0.08 * pi * Y)
            + 0.02 * np.sin(0.04 * pi * Y)
            + 0.02 * np.sin(0.04 * pi * X)
        )

    def rho0(X, Y):
        return 1.0 + 0.2 * np.sin(0.04 * pi * X) * np.sin(0.04 * pi * Y)

    Z = from_function(grid, BcClass.EXTRAP_Y, qf)
    rho = from_function(grid, BcClass.EXTRAP_Y, rho0)
    return CoupledState(FluidState(Z=Z, rho=rho), zero_wave_state(grid), t=0.0)


def gaussian_wave(grid: GridSpec) -> Field:
    """exp(-((x-Lx/2)^2 + (y-Ly/2)^2)), the stage-two wave amplitude."""
    cx, cy = 0.5 * grid.Lx, 0.5 * grid.Ly
    return from_function(
        grid,
        BcClass.NEUMANN_Y,
        lambda X, Y: np.exp(-((X - cx) ** 2 + (Y - cy) ** 2)),
    )


def init_stage2(
    grid: GridSpec,
    spun: CoupledState,
    zero_fluid_pv: bool = False,
    model: WaveModel = WaveModel.NLS,
) -> CoupledState:
    """Couple waves onto a spun-up fluid.

    The wave starts as a centred Gaussian in a (or zeta) with b (or w)
    zero, so the wave PV vanishes at t = 0 and Z equals the fluid PV.
    zero_fluid_pv discards the spun-up PV (keeping the mixed buoyancy),
    the configuration in which any PV is wave-generated.
    """
    if model is WaveModel.NONE:
        wave = zero_wave_state(grid)
    else:
        wave = WaveState(a=gaussian_wave(grid), b=zeros(grid, BcClass.NEUMANN_Y))
    Z = spun.fluid.Z
    if zero_fluid_pv:
        Z = Z.with_data(np.zeros_like(Z.data))
    return CoupledState(FluidState(Z=Z, rho=spun.fluid.rho), wave, t=0.0)


def init_nls_only(grid: GridSpec) -> CoupledState:
    """Uncoupled wave run: Gaussian wave, quiescent unit-buoyancy fluid."""
    fluid = FluidState(
        Z=zeros(grid, BcClass.EXTRAP_Y),
        rho=Field(grid, BcClass.EXTRAP_Y, np.ones((grid.ny, grid.nx))),
    )
    wave = WaveState(a=gaussian_wave(grid), b=zeros(grid, BcClass.NEUMANN_Y))
    return CoupledState(fluid, wave, t=0.0)


# ---------------------------------------------------------------------------
# background writer


class AsyncWriter:
    """Single worker thread draining a FIFO of file-writing closures."""

    def __init__(self):
        self._q: queue.Queue = queue.Queue()
        self._err: list[BaseException] = []
        self._thread = threading.Thread(target=self._loop, daemon=True)
        self._thread.start()

    def _loop(self):
        while True:
            job = self._q.get()
            if job is None:
                return
            try:
                job()
            except BaseException as exc:  # surfaced on close
                self._err.append(exc)

    def submit(self, job):
        self._q.put(job)

    def close(self):
        self._q.put(None)
        self._thread.join()
        if self._err:
            raise self._err[0]


# ---------------------------------------------------------------------------
# stage driver


@dataclass
class StageIo:
    out_dir: Path
    stage_tag: str
    snapshot_interval: float
    diagnostics_interval: float
    writer: AsyncWriter
    grid: GridSpec
    params: WaveParams

    def snapshot_path(self, t: float) -> Path:
        return self.out_dir / f"{self.stage_tag}_t{t:012.6f}.snap"

    def emit_snapshot(self, state: CoupledState, diag: Diagnosed, step: int):
        fields = snapshot_fields(state, diag, self.params)
        path = self.snapshot_path(state.t)
        t, tag, params = state.t, self.stage_tag, self.params
        grid = self.grid

        def job():
            write_snapshot(
                path,
                grid,
                fields,
                time=t,
                step=step,
                stage=tag,
                wave_model=params.model.value,
                kappa=params.kappa,
                alpha=params.alpha,
            )

        self.writer.submit(job)

    def emit_record(self, rec: DiagnosticsRecord, first: bool):
        path = self.out_dir / f"diag_{self.stage_tag}.csv"
        row = record_to_row(rec)

        def job():
            mode = "w" if first else "a"
            with open(path, mode) as fh:
                if first:
                    fh.write(",".join(CSV_COLUMNS) + "\n")
                fh.write(",".join(row) + "\n")

        self.writer.submit(job)


def snapshot_fields(
    state: CoupledState, diag: Diagnosed, params: WaveParams
) -> dict[str, Field]:
    """Prognostics plus the diagnosed fields the renderer consumes."""
    return {
        "Z": state.fluid.Z,
        "rho": state.fluid.rho,
        "a": state.wave.a,
        "b": state.wave.b,
        "Psi": diag.psi,
        "Q_F": diag.q_f,
        "Q_W": diag.q_w,
        "N": wave_action_density(state.wave, params),
    }


def state_from_snapshot_fields(
    grid: GridSpec, fields: dict[str, Field], t: float
) -> CoupledState:
    missing = [n for n in PROGNOSTIC_FIELDS if n not in fields]
    if missing:
        raise ValueError(f"snapshot lacks prognostic fields {missing}")
    return CoupledState(
        fluid=FluidState(Z=fields["Z"], rho=fields["rho"]),
        wave=WaveState(a=fields["a"], b=fields["b"]),
        t=t,
    )


def _next_target(t: float, interval: float, duration: float) -> float:
    k = int(np.floor(t / interval + 1e-9)) + 1
    return min(k * interval, duration)


@dataclass
class StageOutcome:
    state: CoupledState
    steps: int


class StageBlowUp(RuntimeError):
    """Blow-up while advancing a stage; carries the last finite state."""

    def __init__(self, state: CoupledState, cause: BlowUpError):
        self.state = state
        self.cause = cause
        super().__init__(str(cause))


def advance_stage(
    state: CoupledState,
    duration: float,
    params: WaveParams,
    solver: PoissonSolver,
    opts: StepOptions,
    io: StageIo | None,
    cfl: float,
    dt_override: float | None = None,
    noise: NoiseSpec | None = None,
    noise_step0: int = 0,
) -> StageOutcome:
    """Integrate one stage from state.t to `duration` on the stage clock.

    Output events fire at exact multiples of the configured intervals (the
    step is clipped to land on them), so the emission schedule and every
    emitted byte depend only on the stage clock, not on restart history.
    """
    grid = state.grid
    sequence = NoiseSequence(noise, last_step=noise_step0 - 1) if noise else None
    step = noise_step0

    diag = diagnose(state, params, solver, opts.elliptic, coupled=not opts.wave_only)
    if io is not None and state.t == 0.0:
        io.emit_record(record(state, diag, params), first=True)
        io.emit_snapshot(state, diag, step)

    inf = float("inf")
    next_diag = _next_target(state.t, io.diagnostics_interval, duration) if io else inf
    next_snap = _next_target(state.t, io.snapshot_interval, duration) if io else inf

    while state.t < duration:
        dt = dt_override or suggest_dt(diag, cfl, params, grid)
        target = min(next_diag, next_snap, duration)
        dt = min(dt, target - state.t)
        try:
            if noise is not None:
                state_new = stratonovich_step(
                    state, dt, noise, sequence, step, params, solver, opts, diag0=diag
                )
            else:
                state_new = ssp_rk3_step(
                    state, dt, params, solver, opts, diag0=diag
                )
        except BlowUpError as exc:
            raise StageBlowUp(state, exc) from exc
        state = state_new
        step += 1
        if abs(state.t - target) <= 1e-9 * max(1.0, abs(target)):
            state = state.with_time(target)
        diag = diagnose(
            state, params, solver, opts.elliptic, coupled=not opts.wave_only
        )
        if io is not None and state.t >= next_diag - 1e-15:
            io.emit_record(record(state, diag, params), first=False)
            next_diag = _next_target(state.t, io.diagnostics_interval, duration)
        if io is not None and state.t >= next_snap - 1e-15:
            io.emit_snapshot(state, diag, step)
            next_snap = _next_target(state.t, io.snapshot_interval, duration)
    return StageOutcome(state=state, steps=step)


# ---------------------------------------------------------------------------
# run orchestration


def _stage_tag(index: int, stage: StageConfig) -> str:
    return f"{index}-{stage.kind}"


def run_simulation(config: SimConfig) -> int:
    """Execute the configured stages; returns a process exit status."""
    config = config.validate()
    grid = config.grid.build()
    params = config.physics.build()
    solver = PoissonSolver(grid)
    out_dir = Path(config.io.out_dir)
    os.makedirs(out_dir, exist_ok=True)
    noise = config.noise.build(grid) if config.noise is not None else None

    restart_stage_index = 0
    restart_state: CoupledState | None = None
    restart_step = 0
    if config.io.restart is not None:
        header, fields = read_snapshot(config.io.restart)
        if header.grid != grid:
            raise ValueError("restart snapshot grid does not match config")
        restart_state = state_from_snapshot_fields(grid, fields, header.time)
        restart_step = header.step
        restart_stage_index = int(header.stage.split("-", 1)[0])

    writer = AsyncWriter()
    state: CoupledState | None = None
    try:
        for idx, stage in enumerate(config.stages):
            if idx < restart_stage_index:
                continue
            tag = _stage_tag(idx, stage)
            wave_only = stage.kind == "nls_only"
            stage_params = (
                replace(params, model=WaveModel.NONE)
                if stage.kind == "spinup"
                else params
            )
            opts = StepOptions(
                elliptic=EllipticOptions(),
                nu_hyper=config.run.nu_hyper,
                wave_only=wave_only,
            )
            step0 = 0
            if idx == restart_stage_index and restart_state is not None:
                stage_state = restart_state
                step0 = restart_step
            elif stage.kind == "spinup":
                stage_state = init_spinup(grid)
            elif stage.kind == "coupled":
                base = state if state is not None else init_spinup(grid)
                stage_state = init_stage2(
                    grid, base, stage.zero_fluid_pv, model=params.model
                )
            else:  # nls_only
                stage_state = init_nls_only(grid)
            duration = stage.t_spin if stage.kind == "spinup" else config.run.t_end
            io = StageIo(
                out_dir=out_dir,
                stage_tag=tag,
                snapshot_interval=config.io.snapshot_interval,
                diagnostics_interval=config.io.diagnostics_interval,
                writer=writer,
                grid=grid,
                params=stage_params,
            )
            try:
                outcome = advance_stage(
                    stage_state,
                    duration,
                    stage_params,
                    solver,
                    opts,
                    io,
                    cfl=config.run.cfl,
                    dt_override=config.run.dt_override,
                    noise=noise,
                    noise_step0=step0,
                )
            except StageBlowUp as exc:
                _post_mortem(writer, out_dir, (exc.state, tag), grid, stage_params, solver)
                return EXIT_BLOWUP
            state = outcome.state
        return EXIT_OK
    finally:
        writer.close()


def _post_mortem(writer, out_dir, last_good, grid, params, solver):
    state, tag = last_good
    try:
        diag = diagnose(state, params, solver)
    except Exception:
        diag = Diagnosed(
            q_w=wave_pv(state.wave, params),
            q_f=state.fluid.Z,
            psi=zeros(grid, BcClass.DIRICHLET_Y),
            u=zeros(grid, BcClass.EXTRAP_Y),
            v=zeros(grid, BcClass.DIRICHLET_Y),
            elliptic_residual=float("nan"),
        )
    fields = snapshot_fields(state, diag, params)
    path = Path(out_dir) / f"postmortem_{tag}.snap"

    def job():
        write_snapshot(
            path,
            grid,
            fields,
            time=state.t,
            step=-1,
            stage=tag,
            wave_model=params.model.value,
            kappa=params.kappa,
            alpha=params.alpha,
        )

    writer.submit(job)
