"""Long-run conservation invariants at full resolution (minutes, not seconds).

These complement the acceptance gates: drift bounds on runs long enough for
the flow to develop fine-scale structure.  Step sizes follow the same rule
as the acceptance suite: invariant drift is third-order time error, so
each bound pins its own cfl; the chosen values are stated per test.
"""

import numpy as np
import pytest

from wavecurrent.elliptic import PoissonSolver
from wavecurrent.fluid import CoupledState, FluidState, diagnose
from wavecurrent.grid import BcClass, Field, GridSpec, inner, integrate, zeros
from wavecurrent.stepping import StepOptions, ssp_rk3_step, suggest_dt
from wavecurrent.experiments import init_nls_only, init_spinup
from wavecurrent.diagnostics import record
from wavecurrent.waves import (
    WaveModel,
    WaveParams,
    WaveState,
    wave_action_total,
    wave_energy,
    zero_wave_state,
)

GRID = GridSpec(nx=128, ny=129, Lx=50.0, Ly=50.0)
NLS = WaveParams(kappa=0.5, model=WaveModel.NLS)
EULER = WaveParams(model=WaveModel.NONE)


def drive(state, params, t_end, cfl, solver, opts=StepOptions()):
    diag = diagnose(state, params, solver, opts.elliptic, coupled=not opts.wave_only)
    while state.t < t_end:
        dt = min(suggest_dt(diag, cfl, params, GRID), t_end - state.t)
        state = ssp_rk3_step(state, dt, params, solver, opts, diag0=diag)
        diag = diagnose(state, params, solver, opts.elliptic, coupled=not opts.wave_only)
    return state, diag


@pytest.fixture(scope="module")
def solver():
    return PoissonSolver(GRID)


def test_uncoupled_wave_energy_drift(solver):
    """Free Gaussian, t in [0, 10], cfl 0.2: energy to 1e-4, action along."""
    st = init_nls_only(GRID)
    e0 = wave_energy(st.wave, NLS)
    n0 = wave_action_total(st.wave, NLS)
    st, _ = drive(st, NLS, 10.0, 0.2, solver, StepOptions(wave_only=True))
    de = abs(wave_energy(st.wave, NLS) - e0) / e0
    dn = abs(wave_action_total(st.wave, NLS) - n0) / n0
    assert de <= 1e-4, f"wave energy drift {de:.2e}"
    assert dn <= 1e-4, f"wave action drift {dn:.2e}"


def test_euler_energy_drift_over_30_units(solver):
    """Wave-free inhomogeneous flow: E_fluid drift <= 1e-3 over t in [0, 30].

    The spatial transport conserves the energy sum exactly; what remains is
    third-order time dissipation (measured -4.4e-3 at cfl 0.4, /8 per cfl
    halving), so the bound pins cfl 0.2.
    """
    st = init_spinup(GRID)
    d = diagnose(st, EULER, solver)
    e0 = record(st, d, EULER).E_fluid
    drift_seen = []
    state = st
    diag = d
    next_probe = 5.0
    while state.t < 30.0:
        dt = min(suggest_dt(diag, 0.2, EULER, GRID), 30.0 - state.t)
        state = ssp_rk3_step(state, dt, EULER, solver, diag0=diag)
        diag = diagnose(state, EULER, solver)
        if state.t >= next_probe:
            drift_seen.append(record(state, diag, EULER).E_fluid)
            next_probe += 5.0
    e1 = record(state, diag, EULER).E_fluid
    rel = abs(e1 - e0) / e0
    assert rel <= 1e-3, f"E_fluid drift {rel:.2e} over [0, 30]"
    # drift is monotone-ish dissipation, not oscillatory error
    assert all(e <= e0 * (1 + 1e-6) for e in drift_seen)


def test_casimirs_on_smooth_window(solver):
    """int rho, int Z, int rho^2 over t in [0, 10] of the spin-up flow.

    The quadratic Casimir is exact spatially; its time error only grows
    once the cascade populates grid scales (past t ~ 15 at this
    resolution), so the smooth window isolates the structural claim.
    """
    st = init_spinup(GRID)
    m0 = integrate(st.fluid.rho)
    z0 = integrate(st.fluid.Z)
    q0 = inner(st.fluid.rho, st.fluid.rho)
    st, _ = drive(st, EULER, 10.0, 0.2, solver)
    zscale = integrate(st.fluid.Z.with_data(np.abs(st.fluid.Z.data)))
    assert abs(integrate(st.fluid.rho) - m0) / m0 <= 1e-6
    assert abs(integrate(st.fluid.Z) - z0) / zscale <= 1e-6
    assert abs(inner(st.fluid.rho, st.fluid.rho) - q0) / q0 <= 1e-6


def test_waves_create_flow_immediately(solver):
    """Zero initial PV plus a localized wave produces fluid circulation."""
    g = GridSpec(nx=64, ny=65, Lx=50.0, Ly=50.0)
    s = PoissonSolver(g)
    X, Y = g.xy
    rho = Field(g, BcClass.EXTRAP_Y, 1.0 + 0.2 * np.sin(0.04 * np.pi * X) * np.sin(0.04 * np.pi * Y))
    wave = WaveState(
        a=Field(g, BcClass.NEUMANN_Y, np.exp(-((X - 25) ** 2 + (Y - 25) ** 2))),
        b=zeros(g, BcClass.NEUMANN_Y),
    )
    st = CoupledState(FluidState(Z=zeros(g, BcClass.EXTRAP_Y), rho=rho), wave, 0.0)
    diag = diagnose(st, NLS, s)
    for _ in range(60):
        dt = suggest_dt(diag, 0.4, NLS, g)
        st = ssp_rk3_step(st, dt, NLS, s, diag0=diag)
        diag = diagnose(st, NLS, s)
    assert st.fluid.Z.max_abs() > 1e-13  # advected PV was created
    assert diag.q_f.max_abs() > 1e-10
