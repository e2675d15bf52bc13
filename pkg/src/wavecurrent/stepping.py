"""Time integration: deterministic SSP-RK3 and Stratonovich transport noise.

The deterministic stepper is the three-stage Shu-Osher scheme

    s1 = s + dt L(s)
    s2 = 3/4 s + 1/4 (s1 + dt L(s1))
    s+ = 1/3 s + 2/3 (s2 + dt L(s2))

with the stream function re-diagnosed at every stage.  Because each stage
is an affine combination of states and tendencies, linear invariants of the
spatial operator (the conservation sums of the Arakawa transport) survive
time stepping exactly.

Transport noise perturbs only the advecting velocity: the stream function
seen by every J(., .) becomes

    Psi_eff = Psi + sum_i amplitude_i xi_i dW_i / dt ,

with xi_i prescribed dirichlet_y stream functions, so each realisation is
divergence-free and tangent to the walls.  A Heun predictor/corrector with
the same increments in both legs integrates the Stratonovich system; the
deterministic terms ride along at weak order one.  Increments come from a
counter-based generator keyed by (seed, step, mode): reproducible under any
execution schedule and across restarts.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .elliptic import EllipticOptions, PoissonSolver
from .fluid import CoupledState, Diagnosed, FluidState, coupled_rhs, diagnose
from .grid import BcClass, Field, GridSpec
from .waves import WaveModel, WaveParams, WaveState


class BlowUpError(RuntimeError):
    """Non-finite samples appeared while stepping."""

    def __init__(self, t: float, stage: int):
        self.t = t
        self.stage = stage
        super().__init__(f"numerical blow-up at t={t:.6g}, stage {stage}")


class NoiseReuseError(RuntimeError):
    """A Brownian step index was drawn twice."""


@dataclass(frozen=True)
class NoiseMode:
    xi: Field  # dirichlet_y stream function
    amplitude: float

    def __post_init__(self):
        if self.xi.bc is not BcClass.DIRICHLET_Y:
            raise ValueError("noise stream functions must be dirichlet_y")


@dataclass(frozen=True)
class NoiseSpec:
    modes: tuple[NoiseMode, ...] = ()
    seed: int = 0
    fallback_deterministic: bool = False
    convention: str = "stratonovich"

    def __post_init__(self):
        if self.convention != "stratonovich":
            raise ValueError("only the stratonovich convention is supported")


class NoiseSequence:
    """Draws dW vectors keyed by (seed, step, mode); refuses reused steps."""

    def __init__(self, spec: NoiseSpec, last_step: int = -1):
        self.spec = spec
        self._last_step = last_step

    def draw(self, step: int, dt: float) -> np.ndarray:
        if step <= self._last_step:
            raise NoiseReuseError(
                f"step index {step} already consumed (last was {self._last_step})"
            )
        self._last_step = step
        out = np.empty(len(self.spec.modes))
        root_dt = np.sqrt(dt)
        for i in range(len(self.spec.modes)):
            bitgen = np.random.Philox(
                key=np.array([self.spec.seed, 0], dtype=np.uint64),
                counter=np.array([step, i, 0, 0], dtype=np.uint64),
            )
            out[i] = np.random.Generator(bitgen).standard_normal() * root_dt
        return out


@dataclass(frozen=True)
class StepOptions:
    elliptic: EllipticOptions = EllipticOptions()
    nu_hyper: float = 0.0
    wave_only: bool = False
    check_stage_residual: bool = False
    extra_wave_rhs: object = None


@dataclass
class StageTrace:
    """Test hook: per-stage elliptic residuals of the last step."""

    residuals: list[float] = dc_field(default_factory=list)


def _combine(
    c0: float,
    s0: CoupledState,
    c1: float,
    s1: CoupledState,
    dt: float,
    tend,
    t_new: float,
    stage: int,
) -> CoupledState:
    """c0*s0 + c1*(s1 + dt*tend), with the blow-up check."""
    dz, drho, da, db = tend

    def mix(f0: Field, f1: Field, df: Field) -> Field:
        data = c0 * f0.data + c1 * (f1.data + dt * df.data)
        if not np.all(np.isfinite(data)):
            raise BlowUpError(t_new, stage)
        return f0.with_data(data)

    return CoupledState(
        fluid=FluidState(
            Z=mix(s0.fluid.Z, s1.fluid.Z, dz),
            rho=mix(s0.fluid.rho, s1.fluid.rho, drho),
        ),
        wave=WaveState(
            a=mix(s0.wave.a, s1.wave.a, da),
            b=mix(s0.wave.b, s1.wave.b, db),
        ),
        t=t_new,
    )


def ssp_rk3_step(
    state: CoupledState,
    dt: float,
    params: WaveParams,
    solver: PoissonSolver,
    opts: StepOptions = StepOptions(),
    trace: StageTrace | None = None,
    diag0: Diagnosed | None = None,
) -> CoupledState:
    """One deterministic Shu-Osher SSP-RK3 step.

    diag0, when given, must be diagnose(state, ...) and saves the stage-one
    elliptic solve (the driver has usually just computed it for dt control).
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if trace is not None:
        trace.residuals.clear()

    def rhs(s: CoupledState, stage: int, known: Diagnosed | None = None):
        try:
            diag = known or diagnose(
                s, params, solver, opts.elliptic, coupled=not opts.wave_only
            )
            if trace is not None:
                trace.residuals.append(diag.elliptic_residual)
            if (
                opts.check_stage_residual
                and diag.elliptic_residual > opts.elliptic.rel_tol
            ):
                raise AssertionError(
                    f"stage {stage} elliptic residual {diag.elliptic_residual:.3e} "
                    f"exceeds rel_tol {opts.elliptic.rel_tol:g}"
                )
            return coupled_rhs(
                s,
                params,
                diag,
                nu_hyper=opts.nu_hyper,
                wave_only=opts.wave_only,
                extra_wave_rhs=opts.extra_wave_rhs,
            )
        except ValueError as exc:  # non-finite intermediates surface here
            raise BlowUpError(state.t, stage) from exc

    t = state.t
    s1 = _combine(0.0, state, 1.0, state, dt, rhs(state, 1, diag0), t, 1)
    s2 = _combine(0.75, state, 0.25, s1, dt, rhs(s1, 2), t, 2)
    return _combine(
        1.0 / 3.0, state, 2.0 / 3.0, s2, dt, rhs(s2, 3), t + dt, 3
    )


def _noise_psi(state_psi: Field | None, psi_noise: np.ndarray | None, grid: GridSpec):
    if psi_noise is None:
        return state_psi
    base = psi_noise if state_psi is None else state_psi.data + psi_noise
    return Field(grid, BcClass.DIRICHLET_Y, base)


def stratonovich_step(
    state: CoupledState,
    dt: float,
    noise: NoiseSpec,
    sequence: NoiseSequence,
    step_index: int,
    params: WaveParams,
    solver: PoissonSolver,
    opts: StepOptions = StepOptions(),
    diag0: Diagnosed | None = None,
) -> CoupledState:
    """One Heun (Stratonovich-consistent) step with transport noise.

    With no modes this reduces to a deterministic Heun step, or delegates
    to ssp_rk3_step bit-for-bit when noise.fallback_deterministic is set.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if not noise.modes:
        if noise.fallback_deterministic:
            return ssp_rk3_step(state, dt, params, solver, opts, diag0=diag0)
        psi_noise = None
    else:
        dw = sequence.draw(step_index, dt)
        psi_noise = np.zeros((state.grid.ny, state.grid.nx))
        for mode, dwi in zip(noise.modes, dw):
            psi_noise += (mode.amplitude * dwi / dt) * mode.xi.data

    g = state.grid

    def rhs(s: CoupledState, stage: int, known: Diagnosed | None = None):
        try:
            diag = known or diagnose(
                s, params, solver, opts.elliptic, coupled=not opts.wave_only
            )
            psi_adv = _noise_psi(None if opts.wave_only else diag.psi, psi_noise, g)
            return coupled_rhs(
                s,
                params,
                diag,
                psi_adv=psi_adv,
                nu_hyper=opts.nu_hyper,
                wave_only=opts.wave_only,
                extra_wave_rhs=opts.extra_wave_rhs,
            )
        except ValueError as exc:
            raise BlowUpError(state.t, stage) from exc

    t = state.t
    k1 = rhs(state, 1, diag0)
    pred = _combine(0.0, state, 1.0, state, dt, k1, t, 1)
    k2 = rhs(pred, 2)
    half = _combine(0.0, state, 1.0, state, 0.5 * dt, k1, t, 2)
    return _combine(0.0, half, 1.0, half, 0.5 * dt, k2, t + dt, 3)


def suggest_dt(
    diag: Diagnosed,
    cfl_number: float,
    params: WaveParams,
    grid: GridSpec,
    u_floor: float = 1e-6,
) -> float:
    """Advective CFL step, capped by the dispersive limit of the 1/2 lap term."""
    speed = float(np.sqrt(diag.u.data**2 + diag.v.data**2).max())
    h = min(grid.dx, grid.dy)
    dt = cfl_number * h / max(speed, u_floor)
    if params.model is WaveModel.NLS:
        lam = 4.0 / grid.dx**2 + 4.0 / grid.dy**2  # 5-point stencil bound
        dt = min(dt, cfl_number / (0.5 * lam))
    return dt
