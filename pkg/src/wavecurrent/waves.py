"""Wave-field dynamics in real variables, and the quantities they feed back.

The complex amplitude psi = a + i b evolves under the current-boosted NLS
system

    da/dt + J(Psi, a) = -1/2 lap(b) + kappa (a^2 + b^2) b
    db/dt + J(Psi, b) = +1/2 lap(a) - kappa (a^2 + b^2) a

with wave action density N = a^2 + b^2, momentum density
Jvec = hbar (a grad b - b grad a) and wave potential vorticity
Q_W = curl Jvec = 2 hbar J(a, b).  hbar is fixed at 1.

A second wave model is a transported field of harmonic oscillators
(zeta, w) with stiffness alpha:

    dzeta/dt + J(Psi, zeta) = w
    dw/dt    + J(Psi, w)    = -alpha zeta

whose momentum 1-form is w d(zeta), giving Q_W = J(w, zeta).  Its feedback
on the flow is a pure gradient; in vorticity form the mean flow does not
see it at all.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .grid import (
    BcClass,
    Field,
    GridSpec,
    ddx,
    ddy,
    gradient_energy,
    inner,
    integrate,
    jacobian,
    laplacian,
    zeros,
)


class WaveModel(Enum):
    NONE = "none"
    NLS = "nls"
    HARMONIC = "harmonic"


class WaveModelError(ValueError):
    """Raised when an operation is called with the wrong wave model."""


@dataclass(frozen=True)
class WaveParams:
    kappa: float = 0.5
    alpha: float = 1.0
    model: WaveModel = WaveModel.NLS
    hbar: float = 1.0

    def __post_init__(self):
        if self.hbar != 1.0:
            raise ValueError("hbar is fixed at 1")
        if self.alpha < 0.0:
            raise ValueError("alpha must be >= 0")


@dataclass(frozen=True)
class WaveState:
    """Two prognostic wave fields, both neumann_y.

    For the NLS model these are (a, b) = (Re psi, Im psi); for the harmonic
    model the same slots hold (zeta, w).  The aliases below spell that out.
    """

    a: Field
    b: Field

    @property
    def zeta(self) -> Field:
        return self.a

    @property
    def w(self) -> Field:
        return self.b

    @property
    def grid(self) -> GridSpec:
        return self.a.grid


def zero_wave_state(grid: GridSpec) -> WaveState:
    return WaveState(
        a=zeros(grid, BcClass.NEUMANN_Y), b=zeros(grid, BcClass.NEUMANN_Y)
    )


def wave_action_density(ws: WaveState, params: WaveParams) -> Field:
    """N = a^2 + b^2; for the harmonic model the oscillator energy density."""
    if params.model is WaveModel.HARMONIC:
        z, w = ws.zeta.data, ws.w.data
        return ws.a.with_data(0.5 * (w * w + params.alpha * z * z))
    a, b = ws.a.data, ws.b.data
    return ws.a.with_data(a * a + b * b)


def momentum_map(ws: WaveState, params: WaveParams) -> tuple[Field, Field]:
    """Wave momentum density: hbar (a grad b - b grad a), or w grad zeta."""
    if params.model is WaveModel.HARMONIC:
        zx, zy = ddx(ws.zeta), ddy(ws.zeta)
        w = ws.w.data
        jx = w * zx.data
        jy = w * zy.data
    else:
        a, b = ws.a.data, ws.b.data
        jx = params.hbar * (a * ddx(ws.b).data - b * ddx(ws.a).data)
        jy = params.hbar * (a * ddy(ws.b).data - b * ddy(ws.a).data)
    g = ws.grid
    return (
        Field(g, BcClass.EXTRAP_Y, jx),
        Field(g, BcClass.DIRICHLET_Y, jy),
    )


def wave_pv(ws: WaveState, params: WaveParams) -> Field:
    """Q_W: curl of the wave momentum density."""
    if params.model is WaveModel.HARMONIC:
        return jacobian(ws.w, ws.zeta)
    out = jacobian(ws.a, ws.b)
    return out.with_data((2.0 * params.hbar) * out.data)


def _nls_forces(ws: WaveState, params: WaveParams) -> tuple[np.ndarray, np.ndarray]:
    """Non-advective NLS tendencies (F_a, F_b) as raw arrays."""
    a, b = ws.a, ws.b
    kn = params.kappa * (a.data * a.data + b.data * b.data)
    fa = -0.5 * laplacian(b).data + kn * b.data
    fb = 0.5 * laplacian(a).data - kn * a.data
    return fa, fb


def nls_rhs(
    ws: WaveState, psi: Field | None, params: WaveParams
) -> tuple[Field, Field]:
    """Tendencies (da/dt, db/dt); psi=None means an uncoupled wave (Psi = 0)."""
    if params.model is not WaveModel.NLS:
        raise WaveModelError(f"nls_rhs called with model {params.model.value}")
    fa, fb = _nls_forces(ws, params)
    if psi is not None:
        fa = fa - jacobian(psi, ws.a).data
        fb = fb - jacobian(psi, ws.b).data
    return ws.a.with_data(fa), ws.b.with_data(fb)


def harmonic_rhs(
    ws: WaveState, psi: Field | None, params: WaveParams
) -> tuple[Field, Field]:
    """Tendencies (dzeta/dt, dw/dt) of the transported oscillator field."""
    if params.model is not WaveModel.HARMONIC:
        raise WaveModelError(f"harmonic_rhs called with model {params.model.value}")
    dz = ws.w.data.copy()
    dw = -params.alpha * ws.zeta.data
    if psi is not None:
        dz -= jacobian(psi, ws.zeta).data
        dw -= jacobian(psi, ws.w).data
    return ws.a.with_data(dz), ws.b.with_data(dw)


def wave_rhs(
    ws: WaveState, psi: Field | None, params: WaveParams
) -> tuple[Field, Field]:
    """Model dispatch; the NONE model has identically zero tendencies."""
    if params.model is WaveModel.NLS:
        return nls_rhs(ws, psi, params)
    if params.model is WaveModel.HARMONIC:
        return harmonic_rhs(ws, psi, params)
    zero = ws.a.with_data(np.zeros_like(ws.a.data))
    return zero, zero.with_data(np.zeros_like(ws.b.data))


def wave_energy(ws: WaveState, params: WaveParams) -> float:
    """Wave Hamiltonian.

    NLS: 1/2 int |grad a|^2 + |grad b|^2 + kappa (a^2+b^2)^2, with the
    gradient terms in compatible face-difference form (the exact invariant
    of the semi-discrete flow).  Harmonic: 1/2 int w^2 + alpha zeta^2.
    """
    if params.model is WaveModel.NONE:
        return 0.0
    if params.model is WaveModel.HARMONIC:
        return 0.5 * (
            inner(ws.w, ws.w) + params.alpha * inner(ws.zeta, ws.zeta)
        )
    n = wave_action_density(ws, params)
    quartic = params.kappa * inner(n, n)
    return 0.5 * (gradient_energy(ws.a) + gradient_energy(ws.b) + quartic)


def wave_action_total(ws: WaveState, params: WaveParams) -> float:
    return integrate(wave_action_density(ws, params))


def kelvin_wave_force(ws: WaveState, params: WaveParams) -> tuple[Field, Field]:
    """Covector G with dJvec/dt|_waves = G: the non-inertial Kelvin source.

    In (a, b) variables G = F_a grad b + a grad F_b - F_b grad a - b grad F_a,
    which equals -(div(Jvec) grad phi + N grad varpi) without ever forming
    the phase.  The harmonic model's wave force is an exact differential, so
    it contributes nothing on closed loops and G = 0 there.
    """
    g = ws.grid
    if params.model is not WaveModel.NLS:
        z = zeros(g, BcClass.EXTRAP_Y)
        return z, z
    fa, fb = _nls_forces(ws, params)
    fa_f = Field(g, BcClass.NEUMANN_Y, fa)
    fb_f = Field(g, BcClass.NEUMANN_Y, fb)
    a, b = ws.a, ws.b
    gx = (
        fa * ddx(b).data
        + a.data * ddx(fb_f).data
        - fb * ddx(a).data
        - b.data * ddx(fa_f).data
    )
    gy = (
        fa * ddy(b).data
        + a.data * ddy(fb_f).data
        - fb * ddy(a).data
        - b.data * ddy(fa_f).data
    )
    return Field(g, BcClass.EXTRAP_Y, gx), Field(g, BcClass.EXTRAP_Y, gy)
