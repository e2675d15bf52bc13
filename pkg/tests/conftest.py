import numpy as np
import pytest

from wavecurrent.elliptic import PoissonSolver
from wavecurrent.grid import BcClass, Field, GridSpec


@pytest.fixture(scope="session")
def small_grid() -> GridSpec:
    return GridSpec(nx=32, ny=17, Lx=50.0, Ly=50.0)


@pytest.fixture(scope="session")
def square_grid() -> GridSpec:
    """Equal spacing in both directions (dy = dx)."""
    return GridSpec(nx=64, ny=65, Lx=50.0, Ly=50.0)


@pytest.fixture(scope="session")
def small_solver(small_grid) -> PoissonSolver:
    return PoissonSolver(small_grid)


def smooth_random(grid: GridSpec, rng, modes: int = 4, bc=BcClass.EXTRAP_Y) -> Field:
    """Band-limited random field (smooth enough for tolerance-based checks)."""
    X, Y = grid.xy
    data = np.zeros((grid.ny, grid.nx))
    for _ in range(modes):
        mx = rng.integers(0, 4)
        my = rng.integers(0, 4)
        phase = rng.uniform(0, 2 * np.pi)
        amp = rng.standard_normal()
        data += amp * np.cos(2 * np.pi * mx * X / grid.Lx + phase) * np.cos(
            np.pi * my * Y / grid.Ly
        )
    return Field(grid, bc, data)


def dirichlet_random(grid: GridSpec, rng, smooth: bool = False) -> Field:
    """Random stream-function-like field: zero on both walls."""
    if smooth:
        f = smooth_random(grid, rng)
        Y = grid.xy[1]
        data = f.data * np.sin(np.pi * Y / grid.Ly)
    else:
        data = rng.standard_normal((grid.ny, grid.nx))
    data[0] = 0.0
    data[-1] = 0.0
    return Field(grid, BcClass.DIRICHLET_Y, data)


def neumann_random(grid: GridSpec, rng, modes: int = 5) -> Field:
    """Random field with exactly zero wall-normal derivative (cosine modes)."""
    return smooth_random(grid, rng, modes=modes, bc=BcClass.NEUMANN_Y)
