"""Prognostic fluid dynamics in potential-vorticity / stream-function form.

Prognostics are Z (total PV) and the advected buoyancy rho:

    dZ/dt   + J(Psi, Z)   = 1/2 J(rho, |u|^2)
    drho/dt + J(Psi, rho) = 0

with the stream function diagnosed from div(rho grad Psi) = Q_F and
u = grad_perp(Psi).  What Z means depends on the wave model:

  * NLS:      Z = Q_F - Q_W, so Q_F = Z + Q_W with Q_W = 2 J(a, b)
              diagnosed from the wave fields.  The wave feedback on the
              flow enters exclusively through this diagnosis.
  * harmonic: Z = Q_F.  The oscillator feedback is an exact gradient that
              a PV formulation absorbs into the pressure, so the mean flow
              never sees the wave fields; Q_W = J(w, zeta) remains
              available as a diagnostic.
  * none:     Z = Q_F.

The baroclinic source is projected to exact zero mean.  Analytically
int J(rho, |u|^2) reduces to wall circulations of rho d(|u|^2), which
vanish when rho is constant along each wall (true for the configurations
simulated here); the projection enforces that conservation law discretely
so int Z is preserved to round-off over arbitrarily long runs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .elliptic import EllipticOptions, PoissonSolver
from .grid import (
    BcClass,
    Field,
    GridSpec,
    grad_perp,
    integrate,
    jacobian,
    laplacian,
    zeros,
)
from .waves import WaveModel, WaveParams, WaveState, wave_pv, wave_rhs


@dataclass(frozen=True)
class FluidState:
    """Total PV Z and buoyancy rho, both extrap_y."""

    Z: Field
    rho: Field

    @property
    def grid(self) -> GridSpec:
        return self.Z.grid


@dataclass(frozen=True)
class CoupledState:
    fluid: FluidState
    wave: WaveState
    t: float = 0.0

    @property
    def grid(self) -> GridSpec:
        return self.fluid.grid

    def with_time(self, t: float) -> "CoupledState":
        return replace(self, t=t)


@dataclass(frozen=True)
class Diagnosed:
    """Fields recomputed from prognostics; never carried across a step."""

    q_w: Field
    q_f: Field
    psi: Field
    u: Field
    v: Field
    elliptic_residual: float


def pv_sign(model: WaveModel) -> float:
    """Coefficient of Q_W in Q_F = Z + sign * Q_W."""
    return 1.0 if model is WaveModel.NLS else 0.0


def diagnose(
    state: CoupledState,
    params: WaveParams,
    solver: PoissonSolver,
    opts: EllipticOptions = EllipticOptions(),
    coupled: bool = True,
) -> Diagnosed:
    """Recover (Q_W, Q_F, Psi, u) from the prognostic fields.

    coupled=False forces Psi = 0 (uncoupled wave runs); no elliptic solve
    is performed in that case.
    """
    g = state.grid
    q_w = wave_pv(state.wave, params)
    s = pv_sign(params.model)
    if s != 0.0:
        q_f = state.fluid.Z.with_data(state.fluid.Z.data + s * q_w.data)
    else:
        q_f = state.fluid.Z
    if not coupled:
        psi = zeros(g, BcClass.DIRICHLET_Y)
        u, v = grad_perp(psi)
        return Diagnosed(q_w, q_f, psi, u, v, 0.0)
    psi = solver.solve_variable(state.fluid.rho, q_f, opts)
    residual = solver.residual(state.fluid.rho, psi, q_f)
    u, v = grad_perp(psi)
    return Diagnosed(q_w, q_f, psi, u, v, residual)


def baroclinic_source(rho: Field, u: Field, v: Field) -> Field:
    """1/2 J(rho, |u|^2), projected to zero mean (see module docstring)."""
    g = rho.grid
    speed2 = Field(g, BcClass.EXTRAP_Y, u.data * u.data + v.data * v.data)
    src = jacobian(rho, speed2)
    out = 0.5 * src.data
    mean = integrate(Field(g, BcClass.EXTRAP_Y, out)) / (g.Lx * g.Ly)
    return Field(g, BcClass.EXTRAP_Y, out - mean)


def fluid_rhs(
    state: CoupledState,
    diag: Diagnosed,
    psi_adv: Field | None = None,
    nu_hyper: float = 0.0,
) -> tuple[Field, Field]:
    """Tendencies (dZ/dt, drho/dt).

    psi_adv overrides the advecting stream function (stochastic transport);
    the baroclinic source always uses the diagnosed deterministic velocity.
    nu_hyper > 0 adds an optional -nu lap^2 filter on Z (off by default and
    in every acceptance configuration).
    """
    psi = diag.psi if psi_adv is None else psi_adv
    Z, rho = state.fluid.Z, state.fluid.rho
    src = baroclinic_source(rho, diag.u, diag.v)
    dz = src.data - jacobian(psi, Z).data
    if nu_hyper > 0.0:
        dz = dz - nu_hyper * laplacian(laplacian(Z)).data
    drho = -jacobian(psi, rho).data
    return Z.with_data(dz), rho.with_data(drho)


def coupled_rhs(
    state: CoupledState,
    params: WaveParams,
    diag: Diagnosed,
    psi_adv: Field | None = None,
    nu_hyper: float = 0.0,
    wave_only: bool = False,
    extra_wave_rhs=None,
):
    """Full tendency of (Z, rho, a, b) at one stage.

    Returns (dZ, drho, da, db) Fields.  wave_only freezes the fluid and
    forces Psi = 0 in the wave equations (uncoupled stages).
    extra_wave_rhs(state, diag) may return an additional (da, db) pair;
    hook for wave-Hamiltonian perturbations.
    """
    g = state.grid
    if wave_only:
        dz = zeros(g, BcClass.EXTRAP_Y)
        drho = zeros(g, BcClass.EXTRAP_Y)
        psi_wave = psi_adv  # None unless transport noise is active
    else:
        dz, drho = fluid_rhs(state, diag, psi_adv, nu_hyper)
        psi_wave = psi_adv if psi_adv is not None else diag.psi
    da, db = wave_rhs(state.wave, psi_wave, params)
    if extra_wave_rhs is not None:
        ea, eb = extra_wave_rhs(state, diag)
        da = da.with_data(da.data + ea.data)
        db = db.with_data(db.data + eb.data)
    return dz, drho, da, db
