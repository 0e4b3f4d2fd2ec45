"""Free Schroedinger evolution T_t = exp(i t d^2/dx^2) and chirped Gaussians.

``evolve`` applies the Fourier multiplier exp(-i t k^2).  The chirped
Gaussian A0 exp(-x^2/sigma0) stays Gaussian under the flow, with
sigma(t) = sigma0 + 4 i t and A(t) = A0 sqrt(sigma0 / sigma(t)); that
closed form is the analytic oracle for the spectral propagator.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .grid import (
    FREQUENCY,
    POSITION,
    Field,
    Grid,
    fourier,
    inverse_fourier,
    require_space,
    to_frequency,
)


def multiplier(grid: Grid, t) -> np.ndarray:
    """exp(-i t k^2) on the grid lattice; ``t`` may be an array of times (leading axis)."""
    t = np.asarray(t, dtype=float)
    return np.exp(-1j * np.multiply.outer(t, grid.k**2))


def evolve(f: Field, t: float) -> Field:
    """T_t f for any real t (negative t runs the flow backwards)."""
    require_space(f, POSITION)
    if t == 0:
        return f
    fh = fourier(f)
    return inverse_fourier(fh.with_values(multiplier(f.grid, t) * fh.values))


def evolve_spectrum(f: Field, t: float) -> Field:
    """T_t f returned in frequency space (accepts either representation)."""
    fh = to_frequency(f)
    return Field(f.grid, multiplier(f.grid, t) * fh.values, FREQUENCY)


@dataclass(frozen=True)
class ChirpedGaussian:
    """A0 * exp(-x^2 / sigma0) with Re(sigma0) > 0."""

    A0: complex
    sigma0: complex

    def __post_init__(self):
        if not complex(self.sigma0).real > 0:
            raise ValueError(f"Re(sigma0) must be positive, got sigma0={self.sigma0}")
        object.__setattr__(self, "A0", complex(self.A0))
        object.__setattr__(self, "sigma0", complex(self.sigma0))

    @classmethod
    def normalized(cls, sigma0: complex, mass: float = 1.0) -> "ChirpedGaussian":
        s = complex(sigma0)
        if not s.real > 0:
            raise ValueError(f"Re(sigma0) must be positive, got sigma0={sigma0}")
        # |A0|^2 = sqrt(2 Re(sigma0) / (|sigma0|^2 pi)) gives unit mass
        amp2 = math.sqrt(2.0 * s.real / (abs(s) ** 2 * math.pi))
        return cls(math.sqrt(mass * amp2), s)

    @classmethod
    def optimal(cls, delta: float, mass: float = 1.0) -> "ChirpedGaussian":
        """The chirped Gaussian with Im(sigma0) = -2 and Re(sigma0) = 2/delta."""
        return cls.normalized(complex(2.0 / delta, -2.0), mass)

    def sigma(self, t: float) -> complex:
        return self.sigma0 + 4j * t

    def amplitude(self, t: float) -> complex:
        return gaussian_amplitude(self, t)

    def mass(self) -> float:
        """Analytic squared L2 norm."""
        s = self.sigma0
        return abs(self.A0) ** 2 * math.sqrt(math.pi * abs(s) ** 2 / (2.0 * s.real))

    def width(self, t: float) -> float:
        """Standard deviation of |T_t f|^2."""
        s = self.sigma(t)
        # |exp(-x^2/s)|^2 = exp(-2 Re(1/s) x^2)
        return math.sqrt(1.0 / (4.0 * (1.0 / s).real))

    def sample(self, grid: Grid) -> Field:
        return gaussian_exact(self, 0.0, grid)


def continuous_sqrt(sigma0: complex, t: float) -> complex:
    """sqrt(sigma0 + 4 i t) continued continuously in t from the principal value at t = 0.

    sigma(t) moves on the vertical line Re = Re(sigma0) > 0, so its argument
    stays in (-pi/2, pi/2) and the principal branch is already continuous
    along the path; the argument is tracked explicitly anyway so that the
    definition does not depend on where the branch cut of ``cmath`` sits.
    """
    s = sigma0 + 4j * t
    arg0 = cmath.phase(sigma0)
    # unwrap the change of argument along the straight path
    darg = math.atan2(s.imag, s.real) - arg0
    darg = (darg + math.pi) % (2.0 * math.pi) - math.pi
    return math.sqrt(abs(s)) * cmath.exp(0.5j * (arg0 + darg))


def gaussian_amplitude(p: ChirpedGaussian, t: float) -> complex:
    """A(t) = A0 sqrt(sigma0) / sqrt(sigma(t)) on the continuous branch."""
    return p.A0 * continuous_sqrt(p.sigma0, 0.0) / continuous_sqrt(p.sigma0, t)


def gaussian_exact(p: ChirpedGaussian, t: float, grid: Grid) -> Field:
    """Samples of the closed-form evolution A(t) exp(-x^2 / sigma(t))."""
    if not p.sigma0.real > 0:
        raise ValueError("Re(sigma0) must be positive")
    x = grid.x
    return Field(grid, gaussian_amplitude(p, t) * np.exp(-(x**2) / p.sigma(t)), POSITION)


def gaussian_fits(p: ChirpedGaussian, t: float, grid: Grid, fraction: float = 0.25) -> bool:
    """Aliasing guard: True while the evolved packet stays inside ``fraction * L``.

    The packet extent is taken as 6 standard deviations of |T_t f|^2, which
    contains all but ~1e-8 of the mass.
    """
    return 6.0 * p.width(t) <= fraction * grid.length


def spread_extent(f: Field, t: float, tol: float = 1e-12) -> float:
    """Rough upper bound on the half-width of the region holding T_t f.

    Uses the position extent of f (where |f|^2 exceeds ``tol`` of its peak)
    plus the distance 2|k| |t| travelled by the fastest frequency whose
    spectral weight exceeds the same fraction.
    """
    fp = f if f.space == POSITION else inverse_fourier(f)
    fh = to_frequency(f)
    dens = np.abs(fp.values) ** 2
    spec = np.abs(fh.values) ** 2
    xs = f.grid.x[dens > tol * dens.max()] if dens.max() > 0 else np.zeros(1)
    ks = f.grid.k[spec > tol * spec.max()] if spec.max() > 0 else np.zeros(1)
    return float(np.abs(xs).max() + 2.0 * np.abs(ks).max() * abs(t))


def check_no_wrap(f: Field, t: float, fraction: float = 0.5, tol: float = 1e-12) -> bool:
    """Whether T_s f, |s| <= |t|, plausibly stays clear of the periodic boundary."""
    ok = spread_extent(f, t, tol) <= fraction * f.grid.length
    if not ok:
        warnings.warn(
            f"evolved field may wrap around the periodic domain (t={t}, L={f.grid.length})",
            stacklevel=2,
        )
    return ok
