"""Ground-state dispersion-managed soliton at zero average dispersion.

The ground state maximises Q4(f, f, f, f) on the sphere ||f||^2 = lam, and
solves omega f = Q3(f, f, f).  It is found by the normalised fixed-point
iteration

    g_n = Q3(f_n, f_n, f_n),    f_{n+1} = (1 - theta) f_n + theta sqrt(lam) g_n / ||g_n||

(renormalised to the sphere), which for theta = 1 is a power iteration on
the convex functional Q4 and increases it monotonically.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import optimize_delta
from .grid import FREQUENCY, Field, Grid, inner, to_frequency, to_position
from .functionals import cubic_spectrum, default_rule, eval_Q3, eval_Q4
from .propagator import ChirpedGaussian
from .quadrature import QuadratureRule

log = logging.getLogger(__name__)


class DegenerateIterate(RuntimeError):
    """The cubic map collapsed to (numerically) zero."""


class AscentViolation(RuntimeError):
    """Q4 decreased along an undamped iteration."""


@dataclass(frozen=True)
class SolverConfig:
    lam: float = 1.0
    max_iters: int = 2000
    tol_step: float = 1e-10
    tol_residual: float = 1e-8
    init: ChirpedGaussian | None = None
    theta: float = 1.0
    pin_translation: bool = True

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        if not (self.tol_step > 0 and self.tol_residual > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.theta <= 1:
            raise ValueError(f"theta must lie in (0, 1], got {self.theta}")

    def initial_profile(self) -> ChirpedGaussian:
        if self.init is not None:
            return self.init
        delta, _ = optimize_delta()
        return ChirpedGaussian.optimal(delta, self.lam)


@dataclass
class SolitonResult:
    field: Field
    omega: float
    q_value: float
    residual: float
    iterations: int
    lam: float
    converged: bool
    step_history: list[float] = field(default_factory=list)
    q_history: list[float] = field(default_factory=list)
    residual_history: list[float] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "omega": self.omega,
            "q_value": self.q_value,
            "residual": self.residual,
            "iterations": self.iterations,
            "lambda": self.lam,
            "converged": self.converged,
        }


def _norm(fh: np.ndarray, grid: Grid) -> float:
    return math.sqrt(grid.dk) * float(np.linalg.norm(fh))


def rayleigh_omega(f: Field, rule: QuadratureRule | None = None) -> float:
    """<f, Q3(f, f, f)> / ||f||^2, the least-squares multiplier for fixed f."""
    q = eval_Q3(f, f, f, rule)
    fp = to_position(f)
    return inner(fp, q).real / inner(fp, fp).real


def residual(f: Field, omega: float, rule: QuadratureRule | None = None) -> float:
    """||omega f - Q3(f, f, f)|| / ||f||."""
    fp = to_position(f)
    nrm = fp.norm()
    if nrm == 0:
        raise ValueError("residual is undefined for the zero field")
    return (omega * fp - eval_Q3(fp, fp, fp, rule)).norm() / nrm


def _recenter(fh: np.ndarray, grid: Grid) -> np.ndarray:
    """Translate so that the |f|^2 centroid sits at x = 0."""
    fp = to_position(Field(grid, fh, FREQUENCY)).values
    dens = np.abs(fp) ** 2
    c = float(np.sum(grid.x * dens) / np.sum(dens))
    return fh * np.exp(1j * grid.k * c)


def solve_ground_state(
    cfg: SolverConfig | None = None,
    rule: QuadratureRule | None = None,
    grid: Grid | None = None,
    init_field: Field | None = None,
) -> SolitonResult:
    """Run the normalised fixed-point iteration from ``cfg``'s initial profile.

    ``init_field`` overrides the chirped-Gaussian start (it is rescaled to
    mass ``cfg.lam``).  Returns a result with ``converged=False`` when the
    iteration budget runs out.
    """
    cfg = cfg or SolverConfig()
    rule = rule or default_rule()
    if grid is None:
        grid = init_field.grid if init_field is not None else Grid(1024, 80.0)
    if init_field is None:
        init_field = cfg.initial_profile().sample(grid)
    if init_field.grid != grid:
        raise ValueError("initial field lives on a different grid")
    sqrt_lam = math.sqrt(cfg.lam)

    fh = to_frequency(init_field).values
    if _norm(fh, grid) == 0:
        raise ValueError("the initial field is zero")
    fh = fh * (sqrt_lam / _norm(fh, grid))
    steps: list[float] = []
    qs: list[float] = []
    residuals: list[float] = []
    converged = False
    res = math.inf
    it = 0
    while it < cfg.max_iters:
        it += 1
        g = cubic_spectrum(*(Field(grid, fh, FREQUENCY),) * 3, rule).values
        gnorm = _norm(g, grid)
        if gnorm < 1e-14:
            raise DegenerateIterate(f"||Q(f,f,f)|| = {gnorm:.3e} at iteration {it}")
        q = grid.dk * float(np.vdot(fh, g).real)
        omega = q / cfg.lam
        res = _norm(omega * fh - g, grid) / sqrt_lam
        if qs and cfg.theta == 1.0 and q < qs[-1] - 1e-12 * abs(qs[-1]):
            raise AscentViolation(f"Q4 decreased from {qs[-1]!r} to {q!r} at iteration {it}")
        qs.append(q)
        residuals.append(res)

        new = g * (sqrt_lam / gnorm)
        # remove the global phase before comparing iterates
        ph = np.vdot(fh, new)
        if abs(ph) > 0:
            new = new * (abs(ph) / ph)
        if cfg.theta < 1.0:
            new = (1.0 - cfg.theta) * fh + cfg.theta * new
            new = new * (sqrt_lam / _norm(new, grid))
        if cfg.pin_translation:
            new = _recenter(new, grid)
        step = _norm(new - fh, grid)
        steps.append(step)
        fh = new
        log.debug("iter %d  Q=%.15g  residual=%.3e  step=%.3e", it, q, res, step)
        if step <= cfg.tol_step * sqrt_lam and res <= cfg.tol_residual:
            converged = True
            break

    f = to_position(Field(grid, fh, FREQUENCY))
    q_value = eval_Q4(f, f, f, f, rule).real
    omega = q_value / cfg.lam
    final_res = residual(f, omega, rule)
    if not converged:
        log.warning("no convergence after %d iterations (residual %.3e)", it, res)
    return SolitonResult(
        field=f,
        omega=omega,
        q_value=q_value,
        residual=final_res,
        iterations=it,
        lam=cfg.lam,
        converged=converged and final_res <= cfg.tol_residual,
        step_history=steps,
        q_history=qs,
        residual_history=residuals,
    )
