import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from dmlab.grid import (
    FREQUENCY,
    POSITION,
    Field,
    Grid,
    GridMismatch,
    SpaceError,
    check_transform,
    fourier,
    inner,
    inverse_fourier,
    read_snapshot,
    sample,
    shift,
    spectral_derivative,
    to_frequency,
    write_snapshot,
)
from dmlab.propagator import ChirpedGaussian

from conftest import random_field


def gaussian_transform_quad(k):
    """(2 pi)^(-1/2) int exp(-i k x) exp(-x^2/2) dx by adaptive quadrature (the sine part vanishes)."""
    val, _ = quad(lambda x: math.exp(-0.5 * x * x), 0, 40, weight="cos", wvar=k, epsabs=1e-14, limit=400)
    return 2 * val / math.sqrt(2 * math.pi)


def test_lattice_relations():
    g = Grid(512, 40.0)
    assert abs(g.dx * g.dk * g.n - 2 * math.pi) <= 4 * np.spacing(2 * math.pi)
    assert g.x[0] == -20.0
    assert g.k[0] == -256 * g.dk and g.k[-1] == 255 * g.dk
    assert g.dual().dk == pytest.approx(g.dx)


@pytest.mark.parametrize("n,length", [(15, 1.0), (17, 1.0), (8, 1.0), (64, 0.0), (64, -2.0)])
def test_grid_rejects_bad_parameters(n, length):
    with pytest.raises(ValueError):
        Grid(n, length)


def test_fourier_of_gaussian_matches_quadrature():
    g = Grid(512, 40.0)
    fh = fourier(sample(g, lambda x: np.exp(-(x**2) / 2)))
    assert np.max(np.abs(fh.values - np.exp(-(g.k**2) / 2))) <= 1e-10
    for j in (256, 260, 270, 300):
        assert abs(fh.values[j] - gaussian_transform_quad(g.k[j])) <= 1e-10


def test_inverse_fourier_of_gaussian():
    g = Grid(512, 40.0)
    f = inverse_fourier(sample(g, lambda k: np.exp(-(k**2) / 2), FREQUENCY))
    assert np.max(np.abs(f.values - np.exp(-(g.x**2) / 2))) <= 1e-10


def test_zero_maps_to_zero(grid):
    z = Field(grid, np.zeros(grid.n))
    assert np.all(fourier(z).values == 0)


def test_single_mode_has_constant_modulus(grid):
    vals = np.zeros(grid.n, dtype=complex)
    vals[grid.n // 2 + 1] = 1.0
    f = inverse_fourier(Field(grid, vals, FREQUENCY))
    mag = np.abs(f.values)
    assert np.ptp(mag) <= 1e-12 * mag.max()
    assert mag[0] == pytest.approx(grid.dk / math.sqrt(2 * math.pi), rel=1e-12)


def test_space_contract(grid):
    f = Field(grid, np.ones(grid.n))
    with pytest.raises(SpaceError):
        inverse_fourier(f)
    with pytest.raises(SpaceError):
        fourier(fourier(f))
    with pytest.raises(SpaceError):
        inner(f, fourier(f))
    with pytest.raises(GridMismatch):
        inner(f, Field(Grid(256, 40.0), np.ones(256)))
    with pytest.raises(ValueError):
        Field(grid, np.ones(grid.n - 1))


@given(seed=st.integers(0, 2**32 - 1))
def test_round_trip_and_parseval(seed):
    g = Grid(256, 30.0)
    rng = np.random.default_rng(seed)
    f = Field(g, rng.normal(size=g.n) + 1j * rng.normal(size=g.n))
    fh = fourier(f)
    assert abs(f.norm() ** 2 - fh.norm() ** 2) <= 1e-12 * f.norm() ** 2
    back = inverse_fourier(fh)
    assert np.linalg.norm(back.values - f.values) <= 1e-13 * np.linalg.norm(f.values)
    again = fourier(inverse_fourier(fh))
    assert np.linalg.norm(again.values - fh.values) <= 1e-13 * np.linalg.norm(fh.values)


@given(seed=st.integers(0, 2**32 - 1), a=st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_inner_is_sesquilinear(seed, a):
    g = Grid(128, 20.0)
    rng = np.random.default_rng(seed)
    f, h, k = (Field(g, rng.normal(size=g.n) + 1j * rng.normal(size=g.n)) for _ in range(3))
    scale = f.norm() * (h.norm() + k.norm()) * (1 + abs(a))
    assert abs(inner(f, h) - np.conj(inner(h, f))) <= 1e-13 * scale
    assert abs(inner(a * f, h) - np.conj(a) * inner(f, h)) <= 1e-13 * scale
    assert abs(inner(f, a * h + k) - (a * inner(f, h) + inner(f, k))) <= 1e-13 * scale
    assert inner(f, f).real >= 0 and abs(inner(f, f).imag) <= 1e-13 * f.norm() ** 2


def test_inner_with_i_times_f(grid, rng):
    f = random_field(grid, rng)
    assert abs(inner(f, 1j * f) - 1j * f.norm() ** 2) <= 1e-13


def test_normalised_gaussian_has_unit_norm():
    g = Grid(1024, 40.0)
    for s0 in (1.0, 0.5 - 1.0j, 2.0 + 3.0j):
        f = ChirpedGaussian.normalized(s0).sample(g)
        assert abs(inner(f, f).real - 1.0) <= 1e-10


def test_inner_in_frequency_space_matches_position(grid, rng):
    f, h = random_field(grid, rng), random_field(grid, rng)
    assert abs(inner(f, h) - inner(fourier(f), fourier(h))) <= 1e-13


def test_check_transform_is_inverse_transform_on_dual_grid():
    g = Grid(512, 40.0)
    f = ChirpedGaussian.normalized(1.0 - 0.5j).sample(g)
    c = check_transform(f)
    assert c.grid == g.dual()
    # the transform of the result reproduces f
    assert np.max(np.abs(fourier(c).values - f.values)) <= 1e-12
    assert c.norm() == pytest.approx(1.0, abs=1e-12)


def test_derivative_and_shift(grid):
    f = sample(grid, lambda x: np.exp(-(x**2) / 2))
    d = spectral_derivative(f)
    assert np.max(np.abs(d.values + grid.x * np.exp(-(grid.x**2) / 2))) <= 1e-10
    s = shift(f, 1.5)
    assert np.max(np.abs(s.values - np.exp(-((grid.x - 1.5) ** 2) / 2))) <= 1e-10
    assert to_frequency(shift(fourier(f), 1.5)).space == FREQUENCY


@pytest.mark.parametrize("space", [POSITION, FREQUENCY])
def test_snapshot_round_trip(tmp_path, grid, rng, space):
    f = random_field(grid, rng)
    if space == FREQUENCY:
        f = fourier(f)
    path, meta = write_snapshot(f, tmp_path / "f.csv")
    header = path.read_text().splitlines()[0]
    assert header == ("x,re,im" if space == POSITION else "k,re,im")
    back = read_snapshot(path)
    assert back.grid == f.grid and back.space == space
    assert np.array_equal(back.values, f.values)


def test_snapshot_rejects_mismatched_header(tmp_path, grid):
    f = Field(grid, np.ones(grid.n))
    path, meta = write_snapshot(f, tmp_path / "f.csv")
    meta.write_text(meta.read_text().replace("position", "frequency"))
    with pytest.raises(ValueError):
        read_snapshot(path)


def test_fields_are_immutable(grid):
    f = Field(grid, np.ones(grid.n))
    with pytest.raises(ValueError):
        f.values[0] = 2.0
