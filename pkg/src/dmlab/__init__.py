"""Numerical laboratory for ground-state dispersion-managed solitons at zero average dispersion."""

from .grid import FREQUENCY, POSITION, Field, Grid
from .propagator import ChirpedGaussian, evolve
from .functionals import eval_H, eval_Q3, eval_Q4, eval_R
from .solver import SolverConfig, SolitonResult, solve_ground_state

__all__ = [
    "FREQUENCY",
    "POSITION",
    "ChirpedGaussian",
    "Field",
    "Grid",
    "SolitonResult",
    "SolverConfig",
    "eval_H",
    "eval_Q3",
    "eval_Q4",
    "eval_R",
    "evolve",
    "solve_ground_state",
]
