"""Analytic constants, the chirped-Gaussian lower bound on P1, and Strichartz checks."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .functionals import default_rule, eval_Q4, sextic_integral
from .grid import Field, Grid, to_frequency, to_position
from .propagator import ChirpedGaussian
from .quadrature import QuadratureRule, composite, gauss_legendre, geometric_breaks

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Constants:
    S1: float = 12.0 ** (-1.0 / 12.0)
    P1_upper: float = 12.0 ** (-0.25)
    R_bound: float = 12.0 ** (-0.25) / math.sqrt(3.0)
    P1_lower_factor: float = 1.05 / math.sqrt(2.0 * math.pi)
    multilinear_x: float = 2.0 ** (-0.25) * 3.0 ** (-3.0 / 8.0)
    multilinear_k: float = 2.0 ** (-0.75) * 3.0 ** (-1.0 / 8.0)
    # refined prefactors, used as P1 * min(1, c / sqrt(dist))
    refined_x: float = 1.33
    refined_k: float = 1.1

    @property
    def strichartz_rhs(self) -> float:
        """S1^6 = 12^(-1/2)."""
        return self.S1**6


CONSTANTS = Constants()


def gaussian_lower_bound(delta: float) -> float:
    """asinh(delta) / sqrt(2 pi delta): Q4 of the normalised Gaussian with sigma0 = 2/delta - 2i."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    return math.asinh(delta) / math.sqrt(2.0 * math.pi * delta)


def optimize_delta() -> tuple[float, float]:
    """Golden-section maximisation of ``gaussian_lower_bound`` over [0.1, 100]."""
    res = minimize_scalar(
        lambda d: -gaussian_lower_bound(d),
        bracket=(0.1, 1.0, 100.0),
        method="golden",
        tol=1e-8,
    )
    delta = float(res.x)
    if not 0.1 <= delta <= 100.0:
        raise RuntimeError(f"golden-section search left the bracket: {delta}")
    return delta, gaussian_lower_bound(delta)


@dataclass(frozen=True)
class StrichartzResult:
    lhs: float
    rhs: float
    ok: bool
    t_extent: float
    tail_bound: float
    tail_estimate: float

    @property
    def corrected(self) -> float:
        """Truncated integral plus the leading-order tail beyond +-t_extent."""
        return self.lhs + self.tail_estimate


def strichartz_tail(f: Field, t_extent: float) -> tuple[float, float]:
    """(rigorous bound, asymptotic estimate) for int_{|t|>T} int |T_t f|^6 dx dt.

    The bound uses the dispersive estimate |T_t f| <= ||f||_1 / sqrt(4 pi |t|),
    giving ||f||_1^4 ||f||^2 / (8 pi^2 T).  The estimate uses the far-field
    form |T_t f(x)| ~ |fhat(x / 2t)| / sqrt(2|t|), giving ||fhat||_6^6 / (2T).
    """
    fp = to_position(f)
    fh = to_frequency(f)
    l1 = fp.grid.dx * float(np.sum(np.abs(fp.values)))
    bound = l1**4 * fp.norm() ** 2 / (8.0 * math.pi**2 * t_extent)
    estimate = fh.grid.dk * float(np.sum(np.abs(fh.values) ** 6)) / (2.0 * t_extent)
    return bound, estimate


def strichartz_nodes(t_extent: float, rule: QuadratureRule, first: float = 1.0 / 32.0):
    """Symmetric composite rule on [-T, T] with panels doubling away from t = 0."""
    breaks = geometric_breaks(t_extent, first)
    t, w = composite(rule, breaks)
    return np.concatenate([-t[::-1], t]), np.concatenate([w[::-1], w])


def strichartz_check(
    f: Field,
    t_extent: float = 20.0,
    rule: QuadratureRule | None = None,
    tol: float = 1e-6,
) -> StrichartzResult:
    """Compare int_{-T}^{T} int |T_t f|^6 dx dt with S1^6 ||f||^6."""
    rule = rule or gauss_legendre(16)
    fp = to_position(f)
    t, w = strichartz_nodes(t_extent, rule)
    lhs = sextic_integral(fp, t, w)
    rhs = CONSTANTS.strichartz_rhs * fp.norm() ** 6
    bound, estimate = strichartz_tail(fp, t_extent)
    log.info("Strichartz: truncated lhs %.10g, tail bound %.3e, tail estimate %.3e", lhs, bound, estimate)
    return StrichartzResult(lhs, rhs, lhs <= rhs + tol, t_extent, bound, estimate)


# -- random search for the P1 bracket ------------------------------------------------

@dataclass(frozen=True)
class FieldDescriptor:
    """Parameters of a random chirped-Gaussian mixture (for reporting)."""

    label: str
    centers: tuple[float, ...]
    sigmas: tuple[complex, ...]
    amplitudes: tuple[complex, ...]

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "centers": list(self.centers),
            "sigmas": [[s.real, s.imag] for s in self.sigmas],
            "amplitudes": [[a.real, a.imag] for a in self.amplitudes],
        }


def mixture(grid: Grid, desc: FieldDescriptor, mass: float = 1.0) -> Field:
    x = grid.x
    vals = np.zeros(grid.n, dtype=complex)
    for c, s, a in zip(desc.centers, desc.sigmas, desc.amplitudes):
        vals += a * np.exp(-((x - c) ** 2) / s)
    return Field(grid, vals).normalized(mass)


def random_descriptor(rng: np.random.Generator, label: str = "random", max_terms: int = 4,
                      re_sigma=(0.3, 3.0), im_sigma=(-4.0, 4.0), spread: float = 3.0) -> FieldDescriptor:
    m = int(rng.integers(1, max_terms + 1))
    centers = tuple(float(c) for c in rng.uniform(-spread, spread, m))
    sigmas = tuple(complex(a, b) for a, b in zip(rng.uniform(*re_sigma, m), rng.uniform(*im_sigma, m)))
    amps = tuple(complex(a, b) for a, b in zip(rng.normal(size=m), rng.normal(size=m)))
    return FieldDescriptor(label, centers, sigmas, amps)


def sample_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """Independent per-sample generators derived from one 64-bit seed."""
    children = np.random.SeedSequence(int(seed) & (2**64 - 1)).spawn(count)
    return [np.random.default_rng(c) for c in children]


def random_fields(grid: Grid, count: int, seed: int, **kwargs) -> list[tuple[FieldDescriptor, Field]]:
    out = []
    for i, rng in enumerate(sample_rngs(seed, count)):
        desc = random_descriptor(rng, label=f"random-{i}", **kwargs)
        out.append((desc, mixture(grid, desc)))
    return out


def seed_set(grid: Grid) -> list[tuple[FieldDescriptor, Field]]:
    """Fields always included in the P1 search: the optimal chirp and the plain Gaussian."""
    delta, _ = optimize_delta()
    out = []
    for label, s in (("optimal-chirp", complex(2.0 / delta, -2.0)), ("gaussian", 1.0 + 0j)):
        desc = FieldDescriptor(label, (0.0,), (complex(s),), (1.0 + 0j,))
        out.append((desc, ChirpedGaussian.normalized(s).sample(grid)))
    return out


@dataclass(frozen=True)
class P1Estimate:
    max_Q: float
    argmax: FieldDescriptor
    gaussian_floor: float
    upper: float
    values: tuple[float, ...]

    @property
    def in_bracket(self) -> bool:
        return self.gaussian_floor - 1e-6 <= self.max_Q <= self.upper + 1e-6


def p1_estimate_random(
    samples: int,
    seed: int,
    grid: Grid | None = None,
    rule: QuadratureRule | None = None,
) -> P1Estimate:
    """Largest Q4(f, f, f, f) over the seed set plus ``samples`` random unit fields."""
    grid = grid or Grid(1024, 80.0)
    rule = rule or default_rule()
    candidates = seed_set(grid) + random_fields(grid, samples, seed)
    values = [eval_Q4(f, f, f, f, rule).real for _, f in candidates]
    best = int(np.argmax(values))
    # best closed-form lower bound among the Gaussians that were drawn
    floor = max(
        _gaussian_value(d.sigmas[0]) for d, _ in candidates if len(d.sigmas) == 1
    )
    return P1Estimate(values[best], candidates[best][0], floor, CONSTANTS.P1_upper, tuple(values))


def _gaussian_value(sigma0: complex) -> float:
    """Q4 of a normalised single chirped Gaussian, in closed form.

    Q4 = sqrt(Re s0 / pi) int_0^1 dt / |s0 + 4it|, and the t integral is an
    arcsinh difference.
    """
    a, b = sigma0.real, sigma0.imag
    integral = (math.asinh((b + 4.0) / a) - math.asinh(b / a)) / 4.0
    return math.sqrt(a / math.pi) * integral
