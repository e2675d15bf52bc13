"""Structured channel grid, scalar fields, and discrete operators.

The domain is a periodic-in-x channel: nx distinct columns spanning [0, Lx)
with dx = Lx/nx, and ny node rows spanning [0, Ly] inclusive of both walls,
dy = Ly/(ny-1).  Arrays are stored (ny, nx), row-major by y then x.

Boundary handling in y is driven by a per-field class:

  * dirichlet_y : wall values are data (stream functions, wall value 0)
  * neumann_y   : zero normal derivative at the walls (wave amplitudes)
  * extrap_y    : no condition; one-sided stencils (buoyancy, vorticity)

Two distinct ghost-row conventions are used on purpose:

  * Differential operators (ddx, ddy, laplacian) use one-sided second-order
    stencils at the walls (quadratic-extrapolation ghosts), except that
    neumann_y uses mirror ghosts, which makes the discrete Laplacian exactly
    self-adjoint under the trapezoidal inner product.
  * The Jacobian (Arakawa) uses parity ghosts: odd reflection for
    dirichlet_y, even (mirror) reflection otherwise.  With these ghosts the
    channel is equivalent to a doubly periodic domain of twice the height,
    so Arakawa's discrete conservation sums

        sum_w J(psi, q) = 0   and   sum_w q * J(psi, q) = 0

    hold to round-off with trapezoidal weights whenever psi is constant
    along each wall (the energy sum psi J(psi, q) closes as well).  Long
    conservation runs rely on this; the price is first-order local
    truncation in the two wall rows, second order everywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np


class GridMismatchError(ValueError):
    """Raised when an operation mixes fields from different grids."""


class BcClass(Enum):
    """Boundary-condition class of a field (x is always periodic)."""

    DIRICHLET_Y = "periodic_x_dirichlet_y"
    NEUMANN_Y = "periodic_x_neumann_y"
    EXTRAP_Y = "periodic_x_extrap_y"


@dataclass(frozen=True)
class GridSpec:
    """Channel grid: nx periodic columns, ny node rows with walls on rows 0 and ny-1."""

    nx: int
    ny: int
    Lx: float
    Ly: float

    def __post_init__(self):
        if self.nx < 8 or self.nx % 2 != 0:
            raise ValueError(f"nx must be even and >= 8, got {self.nx}")
        if self.ny < 9:
            raise ValueError(f"ny must be >= 9, got {self.ny}")
        if not (self.Lx > 0 and self.Ly > 0):
            raise ValueError("domain extents must be positive")

    @property
    def dx(self) -> float:
        return self.Lx / self.nx

    @property
    def dy(self) -> float:
        return self.Ly / (self.ny - 1)

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * self.dx

    @cached_property
    def y(self) -> np.ndarray:
        return np.arange(self.ny) * self.dy

    @cached_property
    def xy(self) -> tuple[np.ndarray, np.ndarray]:
        """Broadcastable meshes (X, Y), each shaped (ny, nx)."""
        X, Y = np.meshgrid(self.x, self.y)
        return X, Y

    @cached_property
    def wy(self) -> np.ndarray:
        """Trapezoidal y-weights: dy on interior rows, dy/2 on the walls."""
        w = np.full(self.ny, self.dy)
        w[0] = w[-1] = 0.5 * self.dy
        w.flags.writeable = False
        return w

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy


@dataclass(frozen=True)
class Field:
    """One scalar field: (ny, nx) float64 samples plus a boundary class.

    Data is frozen (ndarray marked read-only); operators return new Fields.
    Construction rejects non-finite samples, so every public operation
    yields finite output or raises.
    """

    grid: GridSpec
    bc: BcClass
    data: np.ndarray
    units: str = ""

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.shape != (self.grid.ny, self.grid.nx):
            raise ValueError(
                f"field shape {data.shape} does not match grid "
                f"({self.grid.ny}, {self.grid.nx})"
            )
        if not np.all(np.isfinite(data)):
            raise ValueError("field contains non-finite samples")
        data = np.ascontiguousarray(data)
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    def with_data(self, data: np.ndarray, bc: BcClass | None = None) -> "Field":
        return Field(self.grid, self.bc if bc is None else bc, data, self.units)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.data)))


def zeros(grid: GridSpec, bc: BcClass, units: str = "") -> Field:
    return Field(grid, bc, np.zeros((grid.ny, grid.nx)), units)


def from_function(grid: GridSpec, bc: BcClass, fn, units: str = "") -> Field:
    X, Y = grid.xy
    return Field(grid, bc, fn(X, Y), units)


def _check_same_grid(*fields: Field) -> GridSpec:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatchError("fields live on different grids")
    return g


# ---------------------------------------------------------------------------
# ghost rows


def _diff_ghosts(f: Field) -> tuple[np.ndarray, np.ndarray]:
    """Ghost rows below row 0 / above row ny-1 for differential stencils."""
    d = f.data
    if f.bc is BcClass.NEUMANN_Y:
        return d[1], d[-2]
    # quadratic extrapolation == one-sided second-order stencil
    return 3.0 * d[0] - 3.0 * d[1] + d[2], 3.0 * d[-1] - 3.0 * d[-2] + d[-3]


def _transport_ghosts(f: Field) -> tuple[np.ndarray, np.ndarray]:
    """Parity ghost rows for the conservative Jacobian."""
    d = f.data
    if f.bc is BcClass.DIRICHLET_Y:
        # odd reflection about the wall value
        return 2.0 * d[0] - d[1], 2.0 * d[-1] - d[-2]
    return d[1], d[-2]


def _extend(f: Field, ghosts) -> np.ndarray:
    """(ny+2, nx) array with one ghost row on each wall."""
    lo, hi = ghosts(f)
    out = np.empty((f.grid.ny + 2, f.grid.nx))
    out[1:-1] = f.data
    out[0] = lo
    out[-1] = hi
    return out


# ---------------------------------------------------------------------------
# differential operators


def ddx(f: Field) -> Field:
    """Centered periodic x-derivative."""
    d = f.data
    out = (np.roll(d, -1, axis=1) - np.roll(d, 1, axis=1)) / (2.0 * f.grid.dx)
    return f.with_data(out)


def ddy(f: Field) -> Field:
    """Centered y-derivative; one-sided second order at the walls.

    neumann_y forces the wall rows to exactly zero.
    """
    e = _extend(f, _diff_ghosts)
    out = (e[2:] - e[:-2]) / (2.0 * f.grid.dy)
    if f.bc is BcClass.NEUMANN_Y:
        out[0] = 0.0
        out[-1] = 0.0
    return f.with_data(out, bc=BcClass.EXTRAP_Y)


def laplacian(f: Field) -> Field:
    """5-point Laplacian with the field's wall treatment.

    neumann_y walls use the mirror form (2 f1 - 2 f0)/dy^2, which keeps the
    operator self-adjoint under the trapezoidal weights; other classes use
    the one-sided second-order four-point second difference.
    """
    g = f.grid
    d = f.data
    out = (np.roll(d, -1, axis=1) - 2.0 * d + np.roll(d, 1, axis=1)) / g.dx**2
    yy = np.empty_like(d)
    yy[1:-1] = d[2:] - 2.0 * d[1:-1] + d[:-2]
    if f.bc is BcClass.NEUMANN_Y:
        yy[0] = 2.0 * (d[1] - d[0])
        yy[-1] = 2.0 * (d[-2] - d[-1])
    else:
        yy[0] = 2.0 * d[0] - 5.0 * d[1] + 4.0 * d[2] - d[3]
        yy[-1] = 2.0 * d[-1] - 5.0 * d[-2] + 4.0 * d[-3] - d[-4]
    out += yy / g.dy**2
    return f.with_data(out)


def grad_perp(psi: Field) -> tuple[Field, Field]:
    """Velocity (u, v) = (-psi_y, psi_x) of a stream function.

    psi must be dirichlet_y; since the wall rows are constant, v vanishes
    identically on the walls (no flow through them).
    """
    if psi.bc is not BcClass.DIRICHLET_Y:
        raise ValueError("grad_perp expects a dirichlet_y stream function")
    u = ddy(psi)
    u = Field(psi.grid, BcClass.EXTRAP_Y, -u.data, psi.units)
    v = ddx(psi)
    v = Field(psi.grid, BcClass.DIRICHLET_Y, v.data, psi.units)
    return u, v


# ---------------------------------------------------------------------------
# Arakawa Jacobian


def _jacobian_numerators(fe: np.ndarray, he: np.ndarray, ny: int):
    """The J++ numerator and the J+x numerator on ghost-extended arrays.

    Index convention on the (ny+2, nx) extended arrays: rows 1..ny are the
    physical rows; N/S shift rows, E/W wrap columns.
    """

    def sl(a, dj, di):
        w = a[1 + dj : 1 + dj + ny]
        return w if di == 0 else np.roll(w, -di, axis=1)

    fN, fS, fE, fW = sl(fe, 1, 0), sl(fe, -1, 0), sl(fe, 0, 1), sl(fe, 0, -1)
    hN, hS, hE, hW = sl(he, 1, 0), sl(he, -1, 0), sl(he, 0, 1), sl(he, 0, -1)
    hNE, hNW = sl(he, 1, 1), sl(he, 1, -1)
    hSE, hSW = sl(he, -1, 1), sl(he, -1, -1)

    jpp = (fE - fW) * (hN - hS) - (fN - fS) * (hE - hW)
    jpx = (
        fE * (hNE - hSE)
        - fW * (hNW - hSW)
        - fN * (hNE - hNW)
        + fS * (hSE - hSW)
    )
    return jpp, jpx


def jacobian(f: Field, h: Field) -> Field:
    """Arakawa's energy/enstrophy-conserving Jacobian J(f,h) = f_x h_y - f_y h_x.

    Average of the three canonical second-order forms, evaluated on
    parity-ghost extended arrays (see module docstring).  Antisymmetry
    J(f,h) = -J(h,f) and J(f,f) = 0 hold sample-wise in exact bits: the
    cross forms are generated from a single routine via J_x+(f,h) =
    -J+x(h,f), and the J++ products commute.
    """
    g = _check_same_grid(f, h)
    fe = _extend(f, _transport_ghosts)
    he = _extend(h, _transport_ghosts)
    jpp, jpx_fh = _jacobian_numerators(fe, he, g.ny)
    _, jpx_hf = _jacobian_numerators(he, fe, g.ny)
    out = (jpp + (jpx_fh - jpx_hf)) / (12.0 * g.dx * g.dy)
    return Field(g, BcClass.EXTRAP_Y, out)


# ---------------------------------------------------------------------------
# reductions


def integrate(f: Field) -> float:
    """Domain integral: rectangle rule in x, trapezoidal in y.

    The summation order is fixed by the grid shape (rows reduced first),
    so results are reproducible independent of any parallel scheduling.
    """
    row_sums = f.data.sum(axis=1)
    return float(f.grid.dx * (row_sums @ f.grid.wy))


def inner(f: Field, h: Field) -> float:
    """Weighted L2 inner product <f, h> with the integrate() quadrature."""
    _check_same_grid(f, h)
    row_sums = (f.data * h.data).sum(axis=1)
    return float(f.grid.dx * (row_sums @ f.grid.wy))


def norm_l2(f: Field) -> float:
    return float(np.sqrt(max(inner(f, f), 0.0)))


def gradient_energy(f: Field) -> float:
    """int |grad f|^2 by compatible (staggered face) differences.

    For neumann_y fields this equals -<f, laplacian(f)> exactly, i.e. it is
    the gradient form of the discrete Laplacian; wave-energy conservation at
    round-off level depends on using this form rather than centered
    differences.
    """
    g = f.grid
    d = f.data
    fx = (np.roll(d, -1, axis=1) - d) / g.dx  # faces i+1/2, all rows
    fy = (d[1:] - d[:-1]) / g.dy  # faces j+1/2, interior only
    ex = float(g.dx * ((fx * fx).sum(axis=1) @ g.wy))
    ey = float(g.dx * g.dy * (fy * fy).sum())
    return ex + ey
