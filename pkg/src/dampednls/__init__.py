"""Pseudospectral simulation and diagnostics for the linearly damped NLS

    i u_t + Δu + i a u = mu |u|^alpha u

on a periodic box standing in for R^N.
"""

from .model import (CriticalityClass, Field, Grid, ProblemSpec, alpha_star, classify,
                    gaussian_data, make_grid, make_initial_data)
from .solver import RunOutcome, SolverConfig, Status, run, strang_step

__all__ = [
    "CriticalityClass", "Field", "Grid", "ProblemSpec", "alpha_star", "classify",
    "gaussian_data", "make_grid", "make_initial_data",
    "RunOutcome", "SolverConfig", "Status", "run", "strang_step",
]
__version__ = "0.1.0"
