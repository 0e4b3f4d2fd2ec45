"""Uniform periodic grid, unitary Fourier transform and L2 inner products.

The transform follows the continuum convention

    fhat(k) = (2 pi)^(-1/2) * int exp(-i x k) f(x) dx

discretised on x_j = -L/2 + j*dx and k_m = m*dk, m = -n/2 .. n/2-1.  With
that scaling ``fourier`` is unitary between ``dx``- and ``dk``-weighted
sums, so norms and inner products agree in both representations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft

POSITION = "position"
FREQUENCY = "frequency"
_SPACES = (POSITION, FREQUENCY)

# number of FFT workers; set through ``set_workers`` (CLI --threads)
_WORKERS = 1


def set_workers(n: int) -> None:
    global _WORKERS
    _WORKERS = max(1, int(n))


def fft(a, axis=-1):
    return scipy.fft.fft(a, axis=axis, workers=_WORKERS)


def ifft(a, axis=-1):
    return scipy.fft.ifft(a, axis=axis, workers=_WORKERS)


class SpaceError(ValueError):
    """A field was passed in the wrong representation."""


class GridMismatch(ValueError):
    """Two fields do not live on the same grid."""


@dataclass(frozen=True)
class Grid:
    n: int
    length: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 16 or self.n % 2:
            raise ValueError(f"grid size must be an even integer >= 16, got {self.n}")
        if not (self.length > 0 and math.isfinite(self.length)):
            raise ValueError(f"grid length must be positive, got {self.length}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "length", float(self.length))

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def dk(self) -> float:
        return 2.0 * math.pi / self.length

    @property
    def x(self) -> np.ndarray:
        return -0.5 * self.length + self.dx * np.arange(self.n)

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.n // 2, self.n // 2)

    @property
    def k(self) -> np.ndarray:
        return self.dk * self.modes

    @property
    def k_max(self) -> float:
        return math.pi / self.dx

    def dual(self) -> "Grid":
        """Grid whose frequency lattice coincides with this grid's positions.

        Used to read position samples as a function of the frequency
        variable, i.e. to form the inverse transform of a field.
        """
        return Grid(self.n, 2.0 * math.pi / self.dx)

    def refined(self, factor: int = 2) -> "Grid":
        """Same domain, ``factor`` times as many points."""
        return Grid(self.n * factor, self.length)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples of a function on ``grid`` in one representation."""

    grid: Grid
    values: np.ndarray = field(repr=False)
    space: str = POSITION

    def __post_init__(self):
        if self.space not in _SPACES:
            raise ValueError(f"unknown space {self.space!r}")
        vals = np.asarray(self.values)
        if vals.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {vals.shape}")
        object.__setattr__(self, "values", _readonly(vals))

    @property
    def weight(self) -> float:
        return self.grid.dx if self.space == POSITION else self.grid.dk

    @property
    def coords(self) -> np.ndarray:
        return self.grid.x if self.space == POSITION else self.grid.k

    def norm(self) -> float:
        return math.sqrt(self.weight * float(np.vdot(self.values, self.values).real))

    def with_values(self, values) -> "Field":
        return Field(self.grid, values, self.space)

    def __add__(self, other: "Field") -> "Field":
        _check_pair(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _check_pair(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c) -> "Field":
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return self.with_values(-self.values)

    def conj(self) -> "Field":
        return self.with_values(np.conj(self.values))

    def normalized(self, mass: float = 1.0) -> "Field":
        nrm = self.norm()
        if nrm == 0:
            raise ValueError("cannot normalise the zero field")
        return self * (math.sqrt(mass) / nrm)


def _check_pair(f: Field, g: Field) -> None:
    if f.grid != g.grid:
        raise GridMismatch(f"grids differ: {f.grid} vs {g.grid}")
    if f.space != g.space:
        raise SpaceError(f"spaces differ: {f.space} vs {g.space}")


def require_space(f: Field, space: str) -> None:
    if f.space != space:
        raise SpaceError(f"expected a {space}-space field, got {f.space}")


def same_grid(*fields: Field) -> Grid:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridMismatch(f"grids differ: {grid} vs {f.grid}")
    return grid


def _phase(grid: Grid) -> np.ndarray:
    # exp(-i k_m x_0) with x_0 = -L/2 reduces to (-1)^m
    return np.where(grid.modes % 2 == 0, 1.0, -1.0)


def fft_coeffs(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Array version of ``fourier``; works along the last axis."""
    scale = grid.dx / math.sqrt(2.0 * math.pi)
    return scale * _phase(grid) * np.fft.fftshift(fft(values), axes=-1)


def ifft_coeffs(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    """Array version of ``inverse_fourier``; works along the last axis."""
    scale = grid.n * grid.dk / math.sqrt(2.0 * math.pi)
    return scale * ifft(np.fft.ifftshift(_phase(grid) * coeffs, axes=-1))


def fourier(f: Field) -> Field:
    """Unitary transform to frequency space on the grid's k lattice."""
    require_space(f, POSITION)
    return Field(f.grid, fft_coeffs(f.values, f.grid), FREQUENCY)


def inverse_fourier(g: Field) -> Field:
    """Inverse of ``fourier``."""
    require_space(g, FREQUENCY)
    return Field(g.grid, ifft_coeffs(g.values, g.grid), POSITION)


def to_position(f: Field) -> Field:
    return f if f.space == POSITION else inverse_fourier(f)


def to_frequency(f: Field) -> Field:
    return f if f.space == FREQUENCY else fourier(f)


def inner(f: Field, g: Field) -> complex:
    """<f, g>, conjugate-linear in ``f``."""
    _check_pair(f, g)
    return complex(f.weight * np.vdot(f.values, g.values))


def check_transform(f: Field) -> Field:
    """The inverse transform of ``f`` read as a function of the frequency variable.

    The position samples of ``f`` become the frequency samples of the
    result on the dual grid, so the transform of the returned field is
    ``f`` itself.
    """
    require_space(f, POSITION)
    dual = f.grid.dual()
    return inverse_fourier(Field(dual, f.values, FREQUENCY))


def spectral_derivative(f: Field) -> Field:
    fh = to_frequency(f)
    return inverse_fourier(fh.with_values(1j * f.grid.k * fh.values))


def shift(f: Field, a: float) -> Field:
    """Translate by ``a`` (periodically, exact for band-limited fields)."""
    fh = to_frequency(f)
    out = inverse_fourier(fh.with_values(np.exp(-1j * f.grid.k * a) * fh.values))
    return out if f.space == POSITION else fourier(out)


def sample(grid: Grid, func, space: str = POSITION) -> Field:
    coords = grid.x if space == POSITION else grid.k
    return Field(grid, np.asarray(func(coords), dtype=complex), space)


def spectral_tail(f: Field) -> float:
    """Largest frequency magnitude in the outer eighth of the lattice, relative to the peak."""
    fh = np.abs(to_frequency(f).values)
    peak = fh.max()
    if peak == 0:
        return 0.0
    edge = f.grid.n // 16
    return float(max(fh[:edge].max(), fh[-edge:].max()) / peak)


def is_resolved(f: Field, tol: float = 1e-10) -> bool:
    return spectral_tail(f) <= tol


# -- snapshots -------------------------------------------------------------

def write_snapshot(f: Field, path) -> tuple[Path, Path]:
    """Write ``f`` as CSV (x|k,re,im) plus a JSON metadata sidecar."""
    path = Path(path)
    coord = "x" if f.space == POSITION else "k"
    data = np.column_stack([f.coords, f.values.real, f.values.imag])
    np.savetxt(path, data, delimiter=",", header=f"{coord},re,im", comments="", fmt="%.17g")
    meta = path.with_suffix(".json")
    meta.write_text(json.dumps({"n": f.grid.n, "length": f.grid.length, "space": f.space}, indent=2) + "\n")
    return path, meta


def read_snapshot(path) -> Field:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    with path.open() as fh:
        header = fh.readline().strip()
    expected = "x,re,im" if meta["space"] == POSITION else "k,re,im"
    if header != expected:
        raise ValueError(f"{path}: header {header!r} does not match space {meta['space']!r}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    grid = Grid(int(meta["n"]), float(meta["length"]))
    if data.shape != (grid.n, 3):
        raise ValueError(f"{path}: expected {grid.n} rows of 3 columns, got {data.shape}")
    return Field(grid, data[:, 1] + 1j * data[:, 2], meta["space"])
