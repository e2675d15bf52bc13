"""Conservation monitors, material loops, and Kelvin circulation balance.

A DiagnosticsRecord is one time-sample of every monitored integral and
extremum; the experiment driver appends them to a CSV file (17 significant
digits, one row per record).

Circulations are line integrals along a MaterialLoop (closed marker
polyline) of bilinearly interpolated covector fields:

    circ_fluid = loop integral of u . dx
    circ_wave  = loop integral of (Jvec / rho) . dx
    circ_total = circ_fluid - circ_wave     (the momentum-shifted invariant)

The Kelvin balance check compares d/dt circ_fluid against the wave force
term along an advected loop.  Pressure and Bernoulli gradients close on a
loop, so for constant rho the deterministic theorem reads

    d/dt circ_fluid = loop integral of (1/rho) G . dx

with G the non-advective wave momentum tendency (zero without waves, an
exact differential for the harmonic model).  Residuals are reported
relative to the size the cancelling gradient terms would have had, i.e.
the unsigned line integrals of grad(|u|^2/2) and the wave force.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields as dc_fields

import numpy as np

from .fluid import CoupledState, Diagnosed
from .grid import BcClass, Field, GridSpec, ddx, ddy, integrate, inner
from .waves import (
    WaveParams,
    kelvin_wave_force,
    momentum_map,
    wave_action_density,
    wave_energy,
)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    E_fluid: float
    E_wave: float
    E_total: float
    int_N: float
    int_rho: float
    int_rho2: float
    int_Z: float
    int_QF: float
    int_QW: float
    max_abs_QF: float
    max_abs_QW: float
    circ_total: float
    circ_fluid: float
    circ_wave: float
    elliptic_residual: float


CSV_COLUMNS = tuple(f.name for f in dc_fields(DiagnosticsRecord))


def record_to_row(rec: DiagnosticsRecord) -> list[str]:
    return [format(getattr(rec, name), ".17g") for name in CSV_COLUMNS]


class DiagnosticsWriter:
    """Appends records to a CSV file; header on first write."""

    def __init__(self, path):
        self.path = path
        self._started = False

    def append(self, rec: DiagnosticsRecord):
        mode = "a" if self._started else "w"
        with open(self.path, mode, newline="") as fh:
            writer = csv.writer(fh)
            if not self._started:
                writer.writerow(CSV_COLUMNS)
                self._started = True
            writer.writerow(record_to_row(rec))


# ---------------------------------------------------------------------------
# material loops


@dataclass(frozen=True)
class MaterialLoop:
    """Closed polyline of markers, shape (n, 2); first marker not repeated."""

    markers: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.markers, dtype=np.float64)
        if m.ndim != 2 or m.shape[1] != 2 or m.shape[0] < 32:
            raise ValueError("a loop needs at least 32 (x, y) markers")
        if not np.all(np.isfinite(m)):
            raise ValueError("loop markers must be finite")
        m = np.ascontiguousarray(m)
        m.flags.writeable = False
        object.__setattr__(self, "markers", m)

    @property
    def count(self) -> int:
        return self.markers.shape[0]


def circle_loop(cx: float, cy: float, radius: float, count: int = 64) -> MaterialLoop:
    theta = 2.0 * np.pi * np.arange(count) / count
    pts = np.stack([cx + radius * np.cos(theta), cy + radius * np.sin(theta)], axis=1)
    return MaterialLoop(pts)


def sample_bilinear(f: Field, points: np.ndarray) -> np.ndarray:
    """Bilinear interpolation at (n, 2) points; x wraps, y clamps to the walls."""
    g = f.grid
    x = np.mod(points[:, 0], g.Lx) / g.dx
    y = np.clip(points[:, 1], 0.0, g.Ly) / g.dy
    i0 = np.floor(x).astype(int) % g.nx
    j0 = np.minimum(np.floor(y).astype(int), g.ny - 2)
    fx = x - np.floor(x)
    fy = y - j0
    i1 = (i0 + 1) % g.nx
    j1 = j0 + 1
    d = f.data
    return (
        d[j0, i0] * (1 - fx) * (1 - fy)
        + d[j0, i1] * fx * (1 - fy)
        + d[j1, i0] * (1 - fx) * fy
        + d[j1, i1] * fx * fy
    )


def velocity_sampler(u: Field, v: Field):
    def sample(points: np.ndarray) -> np.ndarray:
        return np.stack(
            [sample_bilinear(u, points), sample_bilinear(v, points)], axis=1
        )

    return sample


def advect_loop(loop: MaterialLoop, sampler, dt: float, grid: GridSpec) -> MaterialLoop:
    """Advance markers one SSP-RK3 step in the (frozen) sampled velocity.

    Written in increment form (p + dt (v1 + v2 + 4 v3)/6 with the scheme's
    stage points), so zero velocity leaves the markers bit-identical.
    Marker y-coordinates are kept one cell away from the walls, matching
    the loop invariant (the wall-normal velocity vanishes there anyway).
    """

    def clampy(p):
        out = p.copy()
        out[:, 1] = np.clip(out[:, 1], grid.dy, grid.Ly - grid.dy)
        return out

    p0 = loop.markers
    v1 = sampler(p0)
    v2 = sampler(clampy(p0 + dt * v1))
    v3 = sampler(clampy(p0 + 0.25 * dt * (v1 + v2)))
    return MaterialLoop(clampy(p0 + (dt / 6.0) * (v1 + v2 + 4.0 * v3)))


def loop_spacings(loop: MaterialLoop) -> np.ndarray:
    seg = np.roll(loop.markers, -1, axis=0) - loop.markers
    return np.hypot(seg[:, 0], seg[:, 1])


def resample_loop(loop: MaterialLoop, count: int | None = None) -> MaterialLoop:
    """Arc-length re-parameterisation (controls marker stretching)."""
    n = count or loop.count
    pts = np.vstack([loop.markers, loop.markers[:1]])
    seg = np.diff(pts, axis=0)
    s = np.concatenate([[0.0], np.cumsum(np.hypot(seg[:, 0], seg[:, 1]))])
    total = s[-1]
    snew = np.linspace(0.0, total, n, endpoint=False)
    x = np.interp(snew, s, pts[:, 0])
    y = np.interp(snew, s, pts[:, 1])
    return MaterialLoop(np.stack([x, y], axis=1))


def loop_self_intersects(loop: MaterialLoop) -> bool:
    """Segment-pair test; adjacent segments share endpoints and are skipped."""
    p = np.vstack([loop.markers, loop.markers[:1]])
    n = loop.count

    def ccw(a, b, c):
        return (c[1] - a[1]) * (b[0] - a[0]) - (b[1] - a[1]) * (c[0] - a[0])

    for i in range(n):
        a1, a2 = p[i], p[i + 1]
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            b1, b2 = p[j], p[j + 1]
            d1 = ccw(a1, a2, b1)
            d2 = ccw(a1, a2, b2)
            d3 = ccw(b1, b2, a1)
            d4 = ccw(b1, b2, a2)
            if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
                return True
    return False


def circulation(loop: MaterialLoop, covector: tuple[Field, Field]) -> float:
    """Trapezoidal line integral of the interpolated covector along the loop."""
    fx, fy = covector
    pts = loop.markers
    vx = sample_bilinear(fx, pts)
    vy = sample_bilinear(fy, pts)
    dx = np.roll(pts[:, 0], -1) - pts[:, 0]
    dy = np.roll(pts[:, 1], -1) - pts[:, 1]
    fx_avg = 0.5 * (vx + np.roll(vx, -1))
    fy_avg = 0.5 * (vy + np.roll(vy, -1))
    return float(np.sum(fx_avg * dx + fy_avg * dy))


def circulation_magnitude(loop: MaterialLoop, covector: tuple[Field, Field]) -> float:
    """Unsigned line integral: sum of |segment contributions|."""
    fx, fy = covector
    pts = loop.markers
    vx = sample_bilinear(fx, pts)
    vy = sample_bilinear(fy, pts)
    dx = np.roll(pts[:, 0], -1) - pts[:, 0]
    dy = np.roll(pts[:, 1], -1) - pts[:, 1]
    fx_avg = 0.5 * (vx + np.roll(vx, -1))
    fy_avg = 0.5 * (vy + np.roll(vy, -1))
    return float(np.sum(np.abs(fx_avg * dx + fy_avg * dy)))


# ---------------------------------------------------------------------------
# records


def _momentum_shift_covector(
    state: CoupledState, diag: Diagnosed, params: WaveParams
) -> tuple[tuple[Field, Field], tuple[Field, Field]]:
    """(u covector, wave covector Jvec/rho)."""
    jx, jy = momentum_map(state.wave, params)
    rho = state.fluid.rho.data
    wave_cov = (jx.with_data(jx.data / rho), jy.with_data(jy.data / rho))
    return (diag.u, diag.v), wave_cov


def record(
    state: CoupledState,
    diag: Diagnosed,
    params: WaveParams,
    loop: MaterialLoop | None = None,
) -> DiagnosticsRecord:
    """One deterministic sample of every monitored quantity.

    E_fluid is the flux-form quadrature of 1/2 int rho |u|^2 (see
    quadratic_energy), the functional the discrete dynamics conserves.
    """
    from .elliptic import quadratic_energy

    rho = state.fluid.rho
    e_fluid = quadratic_energy(rho, diag.psi)
    e_wave = wave_energy(state.wave, params)
    n = wave_action_density(state.wave, params)
    if loop is not None:
        u_cov, wave_cov = _momentum_shift_covector(state, diag, params)
        circ_fluid = circulation(loop, u_cov)
        circ_wave = circulation(loop, wave_cov)
        shift = (
            u_cov[0].with_data(u_cov[0].data - wave_cov[0].data),
            u_cov[1].with_data(u_cov[1].data - wave_cov[1].data),
        )
        circ_total = circulation(loop, shift)
    else:
        circ_fluid = circ_wave = circ_total = 0.0
    return DiagnosticsRecord(
        t=state.t,
        E_fluid=e_fluid,
        E_wave=e_wave,
        E_total=e_fluid + e_wave,
        int_N=integrate(n),
        int_rho=integrate(rho),
        int_rho2=inner(rho, rho),
        int_Z=integrate(state.fluid.Z),
        int_QF=integrate(diag.q_f),
        int_QW=integrate(diag.q_w),
        max_abs_QF=diag.q_f.max_abs(),
        max_abs_QW=diag.q_w.max_abs(),
        circ_total=circ_total,
        circ_fluid=circ_fluid,
        circ_wave=circ_wave,
        elliptic_residual=diag.elliptic_residual,
    )


# ---------------------------------------------------------------------------
# Kelvin balance


@dataclass(frozen=True)
class KelvinSample:
    """Loop and fields at one instant, as needed by the balance check.

    resampled marks a loop that was re-parameterised since the previous
    sample: the marker set is a new material loop, so time differences of
    the circulation must not straddle it.
    """

    t: float
    loop: MaterialLoop
    circ_fluid: float
    wave_term: float  # signed loop integral of (1/rho) G . dx
    bernoulli_mag: float  # unsigned loop integral of grad(|u|^2/2) . dx
    wave_mag: float
    degenerate: bool
    resampled: bool = False


def kelvin_sample(
    state: CoupledState,
    diag: Diagnosed,
    params: WaveParams,
    loop: MaterialLoop,
    resampled: bool = False,
) -> KelvinSample:
    g = state.grid
    u_cov = (diag.u, diag.v)
    speed2 = Field(g, BcClass.EXTRAP_Y, 0.5 * (diag.u.data**2 + diag.v.data**2))
    bern = (ddx(speed2), ddy(speed2))
    gx, gy = kelvin_wave_force(state.wave, params)
    rho = state.fluid.rho.data
    wave_cov = (gx.with_data(gx.data / rho), gy.with_data(gy.data / rho))
    return KelvinSample(
        t=state.t,
        loop=loop,
        circ_fluid=circulation(loop, u_cov),
        wave_term=circulation(loop, wave_cov),
        bernoulli_mag=circulation_magnitude(loop, bern),
        wave_mag=circulation_magnitude(loop, wave_cov),
        degenerate=loop_self_intersects(loop),
        resampled=resampled,
    )


@dataclass(frozen=True)
class KelvinBalance:
    t: np.ndarray
    dcirc_dt: np.ndarray
    wave_term: np.ndarray
    residual: np.ndarray
    term_scale: np.ndarray
    degenerate: np.ndarray  # warning flags, not fatal

    @property
    def relative_residual(self) -> np.ndarray:
        return np.abs(self.residual) / self.term_scale


def kelvin_balance(samples: list[KelvinSample]) -> KelvinBalance:
    """Centered-difference d/dt of circ_fluid minus the wave force term.

    The residual at each interior sample is normalised by the largest
    unsigned term magnitude there (Bernoulli gradient or wave force), i.e.
    by the size of the contributions whose cancellation the theorem
    asserts.  Differences never straddle a re-parameterised loop: those
    samples belong to a fresh material loop, so triples touching one are
    dropped.
    """
    if len(samples) < 3:
        raise ValueError("kelvin_balance needs at least three samples")
    ts = np.array([s.t for s in samples])
    circ = np.array([s.circ_fluid for s in samples])
    wave = np.array([s.wave_term for s in samples])
    bmag = np.array([s.bernoulli_mag for s in samples])
    wmag = np.array([s.wave_mag for s in samples])
    deg = np.array([s.degenerate for s in samples])
    res = np.array([s.resampled for s in samples])
    dcdt = (circ[2:] - circ[:-2]) / (ts[2:] - ts[:-2])
    mid = slice(1, -1)
    keep = ~(res[:-2] | res[1:-1] | res[2:])
    if not np.any(keep):
        raise ValueError("every difference window straddles a loop resampling")
    residual = dcdt - wave[mid]
    scale = np.maximum(np.maximum(bmag[mid], wmag[mid]), 1e-300)
    return KelvinBalance(
        t=ts[mid][keep],
        dcirc_dt=dcdt[keep],
        wave_term=wave[mid][keep],
        residual=residual[keep],
        term_scale=scale[keep],
        degenerate=deg[mid][keep],
    )
