"""Variable-coefficient elliptic solver: div(rho grad Psi) = q on the channel.

Psi is periodic in x with homogeneous Dirichlet walls, so only the interior
rows 1..ny-2 are unknowns and there is no null space / compatibility
condition.  The operator is the symmetric flux-form 5-point stencil with
arithmetic face averages of rho.

The rho = 1 problem is solved directly (exact to round-off): real FFT in x,
then one pre-factored tridiagonal solve in y per x-wavenumber.  The same
direct solve, scaled by 1/mean(rho), preconditions a conjugate-gradient
iteration for variable rho.  A plain SOR sweep is kept as a slow reference
method.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from enum import Enum

import numpy as np

from .grid import BcClass, Field, GridSpec


class NonPositiveDensityError(ValueError):
    """rho must be strictly positive for the elliptic problem."""


class EllipticConvergenceError(RuntimeError):
    def __init__(self, iterations: int, residual: float, rel_tol: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"elliptic solve did not reach rel_tol={rel_tol:g} in "
            f"{iterations} iterations (relative residual {residual:.3e})"
        )


class EllipticMethod(Enum):
    PCG_FFT = "pcg_fft"
    SOR = "sor"


@dataclass(frozen=True)
class EllipticOptions:
    rel_tol: float = 1e-10
    max_iter: int | None = None  # None -> 10 * max(nx, ny)
    method: EllipticMethod = EllipticMethod.PCG_FFT

    def __post_init__(self):
        if not (0.0 < self.rel_tol <= 1e-4):
            raise ValueError("rel_tol must lie in (0, 1e-4]")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    def cap(self, grid: GridSpec) -> int:
        return self.max_iter if self.max_iter is not None else 10 * max(grid.nx, grid.ny)


@dataclass
class SolveInfo:
    iterations: int = 0
    residuals: list[float] = dc_field(default_factory=list)


def face_density(rho: np.ndarray):
    """Arithmetic face averages (rho_E faces, rho_N faces)."""
    fx = 0.5 * (rho + np.roll(rho, -1, axis=1))  # between i and i+1, all rows
    fy = 0.5 * (rho[:-1] + rho[1:])  # between j and j+1
    return fx, fy


def quadratic_energy(rho: Field, psi: Field) -> float:
    """1/2 sum_faces rho_face |delta psi|^2: the flow energy 1/2 int rho |u|^2
    in the flux-form quadrature.

    By exact summation by parts this equals -1/2 <psi, div(rho grad psi)>,
    i.e. the quadratic form of the elliptic operator itself, which is the
    energy the semi-discrete dynamics conserves (up to time integration);
    a centered-gradient evaluation differs at O(dx^2) and reads the
    forward cascade as spurious dissipation.
    """
    g = psi.grid
    fx, fy = face_density(rho.data)
    p = psi.data
    ex = fx * (np.roll(p, -1, axis=1) - p) ** 2 / g.dx**2
    ey = fy * (p[1:] - p[:-1]) ** 2 / g.dy**2
    return 0.5 * float(g.dx * ((ex.sum(axis=1)) @ g.wy) + g.dx * g.dy * ey.sum())


def apply_operator(rho_faces, psi: np.ndarray, grid: GridSpec) -> np.ndarray:
    """div(rho grad psi) on interior rows; wall rows of the output are zero.

    psi carries its Dirichlet wall rows (zeros), so the stencil can read
    them directly.
    """
    fx, fy = rho_faces
    out = np.zeros_like(psi)
    p = psi
    flux_e = fx * (np.roll(p, -1, axis=1) - p) / grid.dx  # at faces i+1/2
    div_x = (flux_e - np.roll(flux_e, 1, axis=1)) / grid.dx
    flux_n = fy * (p[1:] - p[:-1]) / grid.dy  # at faces j+1/2
    out[1:-1] = div_x[1:-1] + (flux_n[1:] - flux_n[:-1]) / grid.dy
    return out


def _interior_norm(r: np.ndarray) -> float:
    return float(np.sqrt(np.sum(r[1:-1] * r[1:-1])))


class PoissonSolver:
    """Per-grid solver with cached FFT/tridiagonal factorisations."""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        nx, ny = grid.nx, grid.ny
        nk = nx // 2 + 1
        m = ny - 2  # interior rows
        theta = 2.0 * np.pi * np.arange(nk) / nx
        lam_x = (2.0 * np.cos(theta) - 2.0) / grid.dx**2  # <= 0
        sub = 1.0 / grid.dy**2
        diag = -2.0 / grid.dy**2 + lam_x  # (nk,)

        # Thomas factorisation, shared by every solve: c'[j] and the
        # pivots 1/(diag - sub*c'[j-1]), vectorised over wavenumbers.
        cp = np.empty((m, nk))
        inv_piv = np.empty((m, nk))
        inv_piv[0] = 1.0 / diag
        cp[0] = sub * inv_piv[0]
        for j in range(1, m):
            inv_piv[j] = 1.0 / (diag - sub * cp[j - 1])
            cp[j] = sub * inv_piv[j]
        self._cp = cp
        self._inv_piv = inv_piv
        self._sub = sub
        self._m = m

    # -- direct constant-coefficient solve ---------------------------------

    def solve_const_array(self, q: np.ndarray) -> np.ndarray:
        """Solve lap(psi) = q exactly (interior rows of q are used)."""
        g = self.grid
        m = self._m
        qh = np.fft.rfft(q[1:-1], axis=1)  # (m, nk)
        d = np.empty_like(qh)
        d[0] = qh[0] * self._inv_piv[0]
        for j in range(1, m):
            d[j] = (qh[j] - self._sub * d[j - 1]) * self._inv_piv[j]
        for j in range(m - 2, -1, -1):
            d[j] -= self._cp[j] * d[j + 1]
        psi = np.zeros((g.ny, g.nx))
        psi[1:-1] = np.fft.irfft(d, n=g.nx, axis=1)
        return psi

    def solve_const(self, q: Field) -> Field:
        psi = self.solve_const_array(q.data)
        return Field(self.grid, BcClass.DIRICHLET_Y, psi)

    # -- variable-coefficient solve -----------------------------------------

    def solve_variable(
        self,
        rho: Field,
        q: Field,
        opts: EllipticOptions = EllipticOptions(),
        info: SolveInfo | None = None,
    ) -> Field:
        g = self.grid
        rho_min = float(rho.data.min())
        if rho_min <= 0.0:
            raise NonPositiveDensityError(
                f"non-positive density: min(rho) = {rho_min:g}"
            )
        if opts.method is EllipticMethod.SOR:
            psi = self._solve_sor(rho.data, q.data, opts, info)
        else:
            psi = self._solve_pcg(rho.data, q.data, opts, info)
        return Field(g, BcClass.DIRICHLET_Y, psi)

    def _solve_pcg(self, rho, q, opts, info) -> np.ndarray:
        g = self.grid
        faces = face_density(rho)
        inv_mean_rho = 1.0 / float(rho.mean())
        b = q.copy()
        b[0] = 0.0
        b[-1] = 0.0
        b_norm = _interior_norm(b)
        cap = opts.cap(g)
        x = np.zeros_like(b)
        if b_norm == 0.0:
            if info is not None:
                info.iterations = 0
                info.residuals.append(0.0)
            return x

        def precond(r):
            return self.solve_const_array(r) * inv_mean_rho

        r = b.copy()  # x0 = 0
        z = precond(r)
        p = z.copy()
        rz = float(np.sum(r[1:-1] * z[1:-1]))
        res = _interior_norm(r)
        if info is not None:
            info.residuals.append(res / b_norm)
        for it in range(1, cap + 1):
            ap = apply_operator(faces, p, g)
            alpha = rz / float(np.sum(p[1:-1] * ap[1:-1]))
            x += alpha * p
            r -= alpha * ap
            res = _interior_norm(r)
            if info is not None:
                info.iterations = it
                info.residuals.append(res / b_norm)
            if res <= opts.rel_tol * b_norm:
                return x
            z = precond(r)
            rz_new = float(np.sum(r[1:-1] * z[1:-1]))
            p = z + (rz_new / rz) * p
            rz = rz_new
        raise EllipticConvergenceError(cap, res / b_norm, opts.rel_tol)

    def _solve_sor(self, rho, q, opts, info) -> np.ndarray:
        """Red-black point SOR; slow reference method for small problems."""
        g = self.grid
        faces = face_density(rho)
        fx, fy = faces
        b = q.copy()
        b[0] = 0.0
        b[-1] = 0.0
        b_norm = _interior_norm(b)
        x = np.zeros_like(b)
        if b_norm == 0.0:
            return x
        omega = 2.0 / (1.0 + np.sin(np.pi / max(g.nx, g.ny)))
        cap = opts.cap(g)
        idx2 = 1.0 / g.dx**2
        idy2 = 1.0 / g.dy**2
        fxw = np.roll(fx, 1, axis=1)
        diag = -(fx + fxw) * idx2
        diag[1:-1] -= (fy[1:] + fy[:-1]) * idy2
        ii, jj = np.meshgrid(np.arange(g.nx), np.arange(g.ny))
        colors = [((ii + jj) % 2 == c) & (jj > 0) & (jj < g.ny - 1) for c in (0, 1)]
        for it in range(1, cap + 1):
            for mask in colors:
                nb = (
                    fx * np.roll(x, -1, axis=1) * idx2
                    + fxw * np.roll(x, 1, axis=1) * idx2
                )
                nb[1:-1] += fy[1:] * x[2:] * idy2 + fy[:-1] * x[:-2] * idy2
                gs = (b - nb) / diag
                x[mask] = (1.0 - omega) * x[mask] + omega * gs[mask]
            r = b - apply_operator(faces, x, g)
            res = _interior_norm(r)
            if info is not None:
                info.iterations = it
                info.residuals.append(res / b_norm)
            if res <= opts.rel_tol * b_norm:
                return x
        raise EllipticConvergenceError(cap, res / b_norm, opts.rel_tol)

    def residual(self, rho: Field, psi: Field, q: Field) -> float:
        """Relative interior residual |div(rho grad psi) - q| / |q|."""
        faces = face_density(rho.data)
        r = apply_operator(faces, psi.data, self.grid)
        r[1:-1] -= q.data[1:-1]
        qn = _interior_norm(q.data)
        rn = _interior_norm(r)
        return rn / qn if qn > 0.0 else rn


def solve_poisson_const(q: Field, solver: PoissonSolver | None = None) -> Field:
    solver = solver or PoissonSolver(q.grid)
    return solver.solve_const(q)


def solve_poisson_variable(
    rho: Field,
    q: Field,
    opts: EllipticOptions = EllipticOptions(),
    solver: PoissonSolver | None = None,
    info: SolveInfo | None = None,
) -> Field:
    solver = solver or PoissonSolver(rho.grid)
    return solver.solve_variable(rho, q, opts, info)
