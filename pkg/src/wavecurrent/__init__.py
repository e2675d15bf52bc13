"""Hybrid wave / mean-flow interaction on a periodic channel.

2D inhomogeneous incompressible Euler flow in potential-vorticity /
stream-function form, coupled to NLS wave amplitudes (or a transported
harmonic-oscillator field), with conservation-law and Kelvin-circulation
diagnostics, deterministic SSP-RK3 and Stratonovich transport-noise
stepping, and a batch experiment CLI.
"""

from .grid import BcClass, Field, GridSpec, ddx, ddy, grad_perp, integrate, jacobian, laplacian
from .elliptic import EllipticOptions, PoissonSolver, solve_poisson_const, solve_poisson_variable
from .waves import WaveModel, WaveParams, WaveState
from .fluid import CoupledState, FluidState, diagnose
from .stepping import NoiseMode, NoiseSpec, ssp_rk3_step, stratonovich_step, suggest_dt
from .diagnostics import DiagnosticsRecord, MaterialLoop, advect_loop, circulation, record
from .config import SimConfig

__version__ = "0.1.0"
