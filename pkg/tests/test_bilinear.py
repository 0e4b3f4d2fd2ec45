import json
import math

import numpy as np
import pytest

from dmlab.bilinear import (
    QUASILOCAL_S,
    CheckRecord,
    GeometryError,
    SupportSpec,
    bilinear_norm,
    bump,
    dual_window,
    duality_check,
    family_grid,
    fourier_bilinear_bound,
    multilinear_bound,
    multilinear_bound_check,
    multilinear_grid,
    multilinear_quadruple,
    numerical_support_ok,
    position_bilinear_bound,
    quasilocal_family,
    quasilocal_grid,
    quasilocal_rule,
    quasilocal_value,
    quasilocality_check,
    separated_pair,
    write_report,
)
from dmlab.bounds import CONSTANTS
from dmlab.functionals import eval_Q4
from dmlab.grid import FREQUENCY, POSITION, Field, Grid, to_frequency
from dmlab.propagator import ChirpedGaussian
from dmlab.quadrature import gauss_legendre

import oracles

T = 20.0
DUAL_GRID = Grid(2048, 80.0)


def fourier_family(d):
    s1, s2 = separated_pair(d, FREQUENCY)
    g = family_grid(d, FREQUENCY, T)
    return bump(g, *s1.intervals[0], FREQUENCY), bump(g, *s2.intervals[0], FREQUENCY), s1, s2


@pytest.fixture(scope="module")
def fourier_norms():
    out = {}
    for d in (1.0, 2.0, 4.0, 8.0):
        f1, f2, s1, s2 = fourier_family(d)
        out[d] = (bilinear_norm(f1, f2, (-T, T), 0, panels=16).value, fourier_bilinear_bound(f1, f2, s1, s2), f1, f2)
    return out


# -- supports -----------------------------------------------------------------------

def test_support_spec():
    s = SupportSpec(((2.0, 3.0), (-1.0, 0.5)))
    assert s.intervals == ((-1.0, 0.5), (2.0, 3.0))
    assert s.max_abs() == 3.0 and s.min_abs() == 0.0
    t = SupportSpec(((4.0, 5.0),))
    assert s.dist(t) == 1.0 and t.dist(s) == 1.0
    assert t.min_abs() == 4.0
    assert s.dist(SupportSpec(((0.0, 2.5),))) == 0.0
    with pytest.raises(ValueError):
        SupportSpec(((0.0, 2.0), (1.0, 3.0)))
    with pytest.raises(ValueError):
        SupportSpec(((1.0, 1.0),))
    with pytest.raises(ValueError):
        SupportSpec(())
    with pytest.raises(ValueError):
        s.dist(SupportSpec(((4.0, 5.0),), FREQUENCY))


@pytest.mark.parametrize("space", [POSITION, FREQUENCY])
def test_bump_is_numerically_supported(space):
    g = Grid(2048, 200.0)
    f = bump(g, 1.0, 2.0, space)
    assert f.space == POSITION
    assert f.norm() == pytest.approx(1.0, rel=1e-12)
    assert numerical_support_ok(f, SupportSpec(((1.0, 2.0),), space))
    assert not numerical_support_ok(f, SupportSpec(((1.2, 2.0),), space))
    with pytest.raises(ValueError):
        bump(g, 2.0, 1.0)


# -- bilinear norms -----------------------------------------------------------------

def test_diagonal_norm_is_root_Q():
    f = ChirpedGaussian.normalized(1.0).sample(Grid(1024, 80.0))
    rule = gauss_legendre(32)
    n = bilinear_norm(f, f, (0.0, 1.0), 0, rule=rule, panels=1)
    assert abs(n.value - math.sqrt(eval_Q4(f, f, f, f, rule).real)) <= 1e-10
    assert math.isnan(n.tail_bound)


def test_window_validation():
    f = ChirpedGaussian.normalized(1.0).sample(Grid(256, 40.0))
    for window, p, two in [((0.0, 1.0), -1, False), ((1.0, 1.0), 0, False), ((0.0, 1.0), 1, False), ((-1.0, 1.0), 0, True)]:
        with pytest.raises(ValueError):
            bilinear_norm(f, f, window, p, two_sided=two)


def test_two_sided_window():
    g = Grid(1024, 80.0)
    real = ChirpedGaussian.normalized(1.0).sample(g), ChirpedGaussian.normalized(2.0).sample(g)
    one = bilinear_norm(*real, (0.1, 1.0), -1).value
    two = bilinear_norm(*real, (0.1, 1.0), -1, two_sided=True).value
    assert two == pytest.approx(math.sqrt(2) * one, rel=1e-12)
    # chirped fields are not even in t, so the mirrored half is evaluated on its own
    chirped = ChirpedGaussian.normalized(1.0 - 1.0j).sample(g), ChirpedGaussian.normalized(2.0 + 0.5j).sample(g)
    one = bilinear_norm(*chirped, (0.1, 1.0), -1).value
    two = bilinear_norm(*chirped, (0.1, 1.0), -1, two_sided=True).value
    assert abs(two - math.sqrt(2) * one) > 1e-3


def test_fourier_bilinear_bounds(fourier_norms):
    for d, (value, bound, f1, f2) in fourier_norms.items():
        assert bound == pytest.approx(1 / math.sqrt(2 * d), rel=1e-12)
        assert value <= bound


def test_fourier_bilinear_matches_full_time_oracle(fourier_norms):
    for d in (2.0, 4.0):
        value, _, f1, f2 = fourier_norms[d]
        h1, h2 = to_frequency(f1), to_frequency(f2)
        exact = oracles.fourier_bilinear_full_time(h1.grid.k, h1.grid.dk, h1.values, h2.values)
        assert value**2 == pytest.approx(exact, rel=1e-6)


def test_norms_decrease_with_separation(fourier_norms):
    ds = sorted(fourier_norms)
    values = [fourier_norms[d][0] for d in ds]
    assert all(b <= a for a, b in zip(values, values[1:]))
    # the ratio to the bound approaches one from below, at least sqrt(d / (d + 2))
    for d in ds:
        value, bound = fourier_norms[d][:2]
        assert math.sqrt(d / (d + 2)) - 1e-6 <= value / bound <= 1.0


def test_fourier_norm_stable_under_refinement():
    f1, f2, _, _ = fourier_family(2.0)
    g = f1.grid
    fine = Grid(2 * g.n, g.length)
    s1, s2 = separated_pair(2.0, FREQUENCY)
    h1, h2 = bump(fine, *s1.intervals[0], FREQUENCY), bump(fine, *s2.intervals[0], FREQUENCY)
    a = bilinear_norm(f1, f2, (-T, T), 0, panels=16).value
    b = bilinear_norm(h1, h2, (-T, T), 0, panels=16).value
    assert abs(a - b) <= 1e-8


def test_position_bilinear_dist_four():
    d = 4.0
    s1, s2 = separated_pair(d, POSITION)
    # f1 on [2, 3], f2 on [-3, -2]
    assert s1.intervals == ((2.0, 3.0),) and s2.intervals == ((-3.0, -2.0),)
    g = family_grid(d, POSITION, T)
    f1, f2 = bump(g, 2.0, 3.0), bump(g, -3.0, -2.0)
    n = bilinear_norm(f1, f2, (1e-3, T), -1, two_sided=True, panels=4)
    bound = position_bilinear_bound(f1, f2, s1, s2)
    assert bound == pytest.approx(0.5, rel=1e-12)
    assert math.sqrt(n.value**2 + n.tail_bound) <= bound
    exact = oracles.position_bilinear_full_time(g.x, g.dx, f1.values, f2.values)
    # the measured window misses |t| < 1e-3 and |t| > T, the tail bound covers the latter
    assert n.value**2 <= exact <= n.value**2 + n.tail_bound


def test_bounds_need_separation():
    g = Grid(256, 40.0)
    f = bump(g, -1.0, 1.0)
    s = SupportSpec(((-1.0, 1.0),))
    with pytest.raises(GeometryError):
        fourier_bilinear_bound(f, f, s, s)
    with pytest.raises(GeometryError):
        position_bilinear_bound(f, f, s, s)


# -- duality ------------------------------------------------------------------------

def test_dual_window():
    assert dual_window((0.1, 1.0)) == (-2.5, -0.25)


@pytest.mark.parametrize("pair", [(1.0, 2.0), (0.5, 1.0), (1.0 - 1.0j, 2.0 + 0.5j)])
def test_duality(pair):
    f1, f2 = (ChirpedGaussian.normalized(s).sample(DUAL_GRID) for s in pair)
    r = duality_check(f1, f2, (0.1, 1.0))
    assert r.rel_err <= 1e-5
    assert not r.advisory


def test_duality_same_real_gaussian():
    f = ChirpedGaussian.normalized(1.0).sample(DUAL_GRID)
    r = duality_check(f, f, (0.1, 1.0))
    assert r.rel_err <= 1e-5


def test_duality_with_zero_field():
    f = ChirpedGaussian.normalized(1.0).sample(DUAL_GRID)
    r = duality_check(f, 0 * f, (0.1, 1.0))
    assert r.lhs == 0.0 and r.rhs == 0.0 and r.rel_err == 0.0


def test_duality_refinement_stability():
    pair = (1.0 - 1.0j, 2.0 + 0.5j)
    errs = []
    for g in (DUAL_GRID, Grid(4096, 80.0)):
        f1, f2 = (ChirpedGaussian.normalized(s).sample(g) for s in pair)
        errs.append(max(duality_check(f1, f2, (0.1, 1.0)).rel_err, 1e-15))
    assert max(errs) / min(errs) <= 10


def test_duality_advisory_on_small_box():
    g = Grid(256, 20.0)
    f1, f2 = (ChirpedGaussian.normalized(s).sample(g) for s in (1.0, 2.0))
    assert duality_check(f1, f2, (0.1, 1.0)).advisory
    with pytest.raises(ValueError):
        duality_check(f1, f2, (0.0, 1.0))


# -- quasi-locality -----------------------------------------------------------------

@pytest.mark.parametrize("space", [POSITION, FREQUENCY])
def test_quasilocality(space):
    g = quasilocal_grid(space)
    fields, supports = quasilocal_family(g, space)
    for f, sp in zip(fields, supports):
        assert numerical_support_ok(f, sp)
    r = quasilocality_check(fields, QUASILOCAL_S[space], 0, supports, space)
    assert r <= 1e-8


@pytest.mark.parametrize("space", [POSITION, FREQUENCY])
def test_quasilocality_negative_control(space):
    g = quasilocal_grid(space)
    fields, supports = quasilocal_family(g, space, violated=True)
    with pytest.raises(GeometryError):
        quasilocality_check(fields, QUASILOCAL_S[space], 0, supports, space)
    assert quasilocal_value(fields, quasilocal_rule(space)) >= 1e-3


def test_quasilocality_geometry_checks():
    g = quasilocal_grid(POSITION)
    fields, supports = quasilocal_family(g, POSITION)
    with pytest.raises(GeometryError):
        quasilocality_check(fields, 4.0, 1, supports, POSITION)
    with pytest.raises(GeometryError):
        quasilocality_check(fields, 4.0, 0, supports, FREQUENCY)
    with pytest.raises(ValueError):
        quasilocality_check(fields[:3], 4.0, 0, supports[:3], POSITION)


# -- multilinear --------------------------------------------------------------------

def test_multilinear_bound_shape():
    assert multilinear_bound(0.0) == CONSTANTS.P1_upper
    for space in (POSITION, FREQUENCY):
        vals = [multilinear_bound(d, space) for d in (0.5, 1.0, 2.0, 4.0, 16.0, 100.0)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))
        assert all(v <= CONSTANTS.P1_upper for v in vals)
    assert multilinear_bound(100.0, POSITION) == pytest.approx(CONSTANTS.multilinear_x / 10)


@pytest.mark.parametrize("space,d", [(POSITION, 4.0), (FREQUENCY, 2.0)])
def test_multilinear_separated(space, d):
    g = multilinear_grid(space)
    fields, supports = multilinear_quadruple(g, d, space)
    for f, sp in zip(fields, supports):
        assert numerical_support_ok(f, sp)
    r = multilinear_bound_check(fields, (0, 1), supports, space)
    assert r.dist == d
    assert r.ok and r.value <= r.bound


def test_multilinear_overlapping():
    g = multilinear_grid(POSITION)
    fields, supports = multilinear_quadruple(g, 0.0, POSITION)
    r = multilinear_bound_check(fields, (0, 1), supports, POSITION)
    assert r.dist == 0.0
    assert r.bound == pytest.approx(CONSTANTS.P1_upper, rel=1e-12)
    assert r.ok
    with pytest.raises(ValueError):
        multilinear_bound_check(fields, (1, 1), supports, POSITION)


# -- report -------------------------------------------------------------------------

def test_report(tmp_path):
    recs = [CheckRecord("a", {"d": 1}, 0.5, 1.0), CheckRecord("b", {}, 0.5, 1.0, sense="ge")]
    assert recs[0].passed and recs[0].margin == 0.5
    assert not recs[1].passed and recs[1].margin == -0.5
    path = write_report(recs, tmp_path / "r.json")
    data = json.loads(path.read_text())
    assert [set(r) for r in data] == [{"check", "params", "value", "bound", "margin", "pass"}] * 2
    assert data[1]["pass"] is False


def test_field_space_of_bump():
    g = Grid(256, 40.0)
    assert isinstance(bump(g, 0.0, 1.0, FREQUENCY), Field)
    assert np.isfinite(bump(g, 0.0, 1.0, FREQUENCY).values).all()
