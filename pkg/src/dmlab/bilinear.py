"""Bilinear space-time norms, their duality, quasi-locality and multilinear bounds.

The bilinear norm of a pair is

    N_p(f1, f2; a, b) = ( int_a^b int |T_t f1 T_t f2|^2 |t|^p dx dt )^(1/2),   p in {-1, 0}.

Over the whole time axis it is bounded by 1/sqrt(2 dist) ||f1|| ||f2|| when
the spectra are separated (p = 0) and by 1/sqrt(dist) ||f1|| ||f2|| when the
fields themselves are separated (p = -1).  The two are linked by the
inversion t = -1/(4 tau) together with f -> check f.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bounds import CONSTANTS
from .functionals import default_rule, eval_Q4, quartic_integral
from .grid import FREQUENCY, POSITION, Field, Grid, check_transform, to_frequency, to_position
from .quadrature import QuadratureRule, gauss_legendre, reciprocal_rule, time_nodes

# samples below this fraction of the peak count as outside the support
SUPPORT_FLOOR = 1e-14
# half-width / standard deviation of a Gaussian bump, so that its value at
# the interval edges is exp(-36.125) ~ 2e-16 of the peak
_BUMP_RATIO = 8.5


class GeometryError(ValueError):
    """Declared supports do not satisfy the required separation."""


@dataclass(frozen=True)
class SupportSpec:
    """A union of closed intervals in x (space='position') or k (space='frequency')."""

    intervals: tuple[tuple[float, float], ...]
    space: str = POSITION

    def __post_init__(self):
        iv = tuple(sorted((float(a), float(b)) for a, b in self.intervals))
        if not iv:
            raise ValueError("a support needs at least one interval")
        for a, b in iv:
            if not b > a:
                raise ValueError(f"empty interval ({a}, {b})")
        for (_, b0), (a1, _) in zip(iv, iv[1:]):
            if a1 <= b0:
                raise ValueError("support intervals overlap")
        if self.space not in (POSITION, FREQUENCY):
            raise ValueError(f"unknown space {self.space!r}")
        object.__setattr__(self, "intervals", iv)

    def dist(self, other: "SupportSpec") -> float:
        """Smallest gap between the two interval unions (0 if they touch or overlap)."""
        if other.space != self.space:
            raise ValueError("supports declared in different spaces")
        gap = math.inf
        for a0, b0 in self.intervals:
            for a1, b1 in other.intervals:
                gap = min(gap, max(0.0, a1 - b0, a0 - b1))
        return gap

    def max_abs(self) -> float:
        return max(max(abs(a), abs(b)) for a, b in self.intervals)

    def min_abs(self) -> float:
        """Distance from the origin to the support."""
        out = math.inf
        for a, b in self.intervals:
            out = min(out, 0.0 if a <= 0 <= b else min(abs(a), abs(b)))
        return out


def bump(grid: Grid, lo: float, hi: float, space: str = POSITION, mass: float = 1.0) -> Field:
    """Smooth bump numerically supported in [lo, hi] of x or k, returned in position space.

    A Gaussian centred on the interval with standard deviation
    (hi - lo) / (2 * 8.5); its value at and beyond the edges is below
    1e-14 of the peak.
    """
    if not hi > lo:
        raise ValueError(f"empty interval ({lo}, {hi})")
    c = 0.5 * (lo + hi)
    w = 0.5 * (hi - lo) / _BUMP_RATIO
    coords = grid.x if space == POSITION else grid.k
    vals = np.exp(-0.5 * ((coords - c) / w) ** 2).astype(complex)
    return to_position(Field(grid, vals, space)).normalized(mass)


def numerical_support_ok(f: Field, support: SupportSpec, floor: float = SUPPORT_FLOOR) -> bool:
    """True when every sample outside ``support`` is below floor * max."""
    g = to_position(f) if support.space == POSITION else to_frequency(f)
    coords = g.coords
    mag = np.abs(g.values)
    inside = np.zeros(coords.shape, dtype=bool)
    for a, b in support.intervals:
        inside |= (coords >= a) & (coords <= b)
    return bool(np.all(mag[~inside] <= floor * mag.max()))


# -- bilinear norms ------------------------------------------------------------------

@dataclass(frozen=True)
class BilinearNorm:
    value: float
    window: tuple[float, float]
    p: int
    two_sided: bool
    tail_bound: float  # bound on the part of the norm^2 beyond the window (nan if none)


def _windows(window, p, two_sided):
    a, b = float(window[0]), float(window[1])
    if not b > a:
        raise ValueError(f"invalid time window ({a}, {b})")
    if p not in (-1, 0):
        raise ValueError(f"t-power must be -1 or 0, got {p}")
    if p == -1 and a <= 0:
        raise ValueError("the |t|^-1 measure needs a window with 0 < a")
    if two_sided and a < 0:
        raise ValueError("a two-sided window is given by its positive half")
    parts = [(a, b)]
    if two_sided:
        parts.append((-b, -a))
    return parts


def _nodes(a: float, b: float, p: int, rule: QuadratureRule, panels: int):
    if p == -1:
        return time_nodes(a, b, -1, rule, panels)
    if a < 0 < b:
        t1, w1 = time_nodes(a, 0.0, 0, rule, panels)
        t2, w2 = time_nodes(0.0, b, 0, rule, panels)
        return np.concatenate([t1, t2]), np.concatenate([w1, w2])
    return time_nodes(a, b, 0, rule, panels)


def _neg_log_nodes(a: float, b: float, rule: QuadratureRule, panels: int):
    """Nodes for int_{-b}^{-a} g(t) |t|^-1 dt with 0 < a < b."""
    t, w = time_nodes(a, b, -1, rule, panels)
    return -t, w


def bilinear_norm(
    f1: Field,
    f2: Field,
    window: tuple[float, float],
    p: int = 0,
    two_sided: bool = False,
    rule: QuadratureRule | None = None,
    panels: int = 8,
) -> BilinearNorm:
    """(int int |T_t f1 T_t f2|^2 |t|^p dx dt)^(1/2) over ``window``.

    With ``two_sided`` the mirrored window [-b, -a] is evaluated explicitly
    and added; the integrand is not even in t for complex fields.  The
    reported tail bound (p = -1 only) covers |t| > b on each evaluated side,
    from the dispersive bound |T_t f| <= ||f||_1 / sqrt(4 pi |t|).
    """
    rule = rule or gauss_legendre(16)
    parts = _windows(window, p, two_sided)
    total = 0.0
    for a, b in parts:
        if p == -1 and b < 0:
            t, w = _neg_log_nodes(-b, -a, rule, panels)
        else:
            t, w = _nodes(a, b, p, rule, panels)
        total += quartic_integral((f1, f1, f2, f2), t, w).real
    tail = math.nan
    if p == -1:
        fp1, fp2 = to_position(f1), to_position(f2)
        l1 = [g.grid.dx * float(np.sum(np.abs(g.values))) for g in (fp1, fp2)]
        per_side = min(l1[0] ** 2 * fp2.norm() ** 2, l1[1] ** 2 * fp1.norm() ** 2) / (4.0 * math.pi)
        tail = len(parts) * per_side / max(abs(window[1]), abs(window[0]))
    return BilinearNorm(math.sqrt(max(total, 0.0)), (float(window[0]), float(window[1])), p, two_sided, tail)


def fourier_bilinear_bound(f1: Field, f2: Field, s1: SupportSpec, s2: SupportSpec) -> float:
    """1/sqrt(2 dist) ||f1|| ||f2|| for spectrally separated fields."""
    d = s1.dist(s2)
    if d <= 0:
        raise GeometryError("spectral supports are not separated")
    return f1.norm() * f2.norm() / math.sqrt(2.0 * d)


def position_bilinear_bound(f1: Field, f2: Field, s1: SupportSpec, s2: SupportSpec) -> float:
    """1/sqrt(dist) ||f1|| ||f2|| for fields with separated supports."""
    d = s1.dist(s2)
    if d <= 0:
        raise GeometryError("supports are not separated")
    return f1.norm() * f2.norm() / math.sqrt(d)


# -- duality ------------------------------------------------------------------------

@dataclass(frozen=True)
class DualityResult:
    lhs: float
    rhs: float
    rel_err: float
    window: tuple[float, float]
    dual_window: tuple[float, float]
    advisory: bool

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "rel_err": self.rel_err,
            "window": list(self.window),
            "dual_window": list(self.dual_window),
            "advisory": self.advisory,
        }


def dual_window(window: tuple[float, float]) -> tuple[float, float]:
    """Image of t in [a, b] under tau = -1/(4t)."""
    a, b = window
    return (-1.0 / (4.0 * a), -1.0 / (4.0 * b))


def _wrap_free(f: Field, times, fraction: float = 0.45, tol: float = 1e-12) -> bool:
    """True when |T_t f| stays below tol * max outside the central ``fraction`` of the box."""
    fh = to_frequency(f).values
    grid = f.grid
    edge = np.abs(grid.x) > fraction * grid.length
    for t in times:
        u = to_position(Field(grid, fh * np.exp(-1j * t * grid.k**2), FREQUENCY)).values
        mag = np.abs(u)
        if np.any(mag[edge] > tol * mag.max()):
            return False
    return True


def duality_check(
    f1: Field,
    f2: Field,
    window: tuple[float, float],
    rule: QuadratureRule | None = None,
    panels: int = 4,
) -> DualityResult:
    """Compare N_{-1}(f1, f2; a, b) with sqrt(2) N_0(check f1, check f2; -1/(4a), -1/(4b)).

    The inverse transforms live on the dual grid.  The result is advisory
    when either field comes close to the box edge within its window.
    """
    a, b = float(window[0]), float(window[1])
    if not 0 < a < b:
        raise ValueError(f"duality needs 0 < a < b, got ({a}, {b})")
    rule = rule or default_rule()
    c1, c2 = check_transform(to_position(f1)), check_transform(to_position(f2))
    dw = dual_window((a, b))
    lhs = bilinear_norm(f1, f2, (a, b), -1, rule=rule, panels=panels).value
    rhs = math.sqrt(2.0) * bilinear_norm(c1, c2, dw, 0, rule=rule, panels=panels).value
    if rhs == 0.0:
        rel = 0.0 if lhs == 0.0 else math.inf
    else:
        rel = abs(lhs - rhs) / rhs
    resolved = all(_wrap_free(f, (a, b)) for f in (f1, f2)) and all(_wrap_free(c, dw) for c in (c1, c2))
    return DualityResult(lhs, rhs, rel, (a, b), dw, not resolved)


# -- quasi-locality -----------------------------------------------------------------

def quasilocality_check(
    fields,
    s: float,
    which: int,
    supports,
    space: str = POSITION,
    rule: QuadratureRule | None = None,
    margin: float | None = None,
) -> float:
    """|Q(f1, f2, f3, f4)| / prod ||f_j|| for a declared quasi-local geometry.

    ``supports[which]`` must lie in {|.| > 3s} and every other support in
    {|.| <= s}, each with a margin of at least two grid spacings of the
    relevant lattice (dx or dk).  Raises ``GeometryError`` otherwise.
    """
    fields = list(fields)
    supports = list(supports)
    if len(fields) != 4 or len(supports) != 4:
        raise ValueError("need four fields and four supports")
    if not 0 <= which < 4:
        raise ValueError("which must index one of the four fields")
    grid = fields[0].grid
    h = grid.dx if space == POSITION else grid.dk
    margin = 2.0 * h if margin is None else margin
    for j, sp in enumerate(supports):
        if sp.space != space:
            raise GeometryError(f"support {j} is declared in {sp.space}, expected {space}")
        if j == which:
            if sp.min_abs() < 3.0 * s + margin:
                raise GeometryError(f"support {j} does not stay outside |.| > 3s with margin {margin}")
        elif sp.max_abs() > s - margin:
            raise GeometryError(f"support {j} is not inside |.| <= s with margin {margin}")
    q = eval_Q4(*fields, rule)
    return abs(q) / math.prod(f.norm() for f in fields)


def quasilocal_value(fields, rule: QuadratureRule | None = None) -> float:
    """Normalised |Q| with no geometry check (used for negative controls)."""
    fields = list(fields)
    return abs(eval_Q4(*fields, rule)) / math.prod(f.norm() for f in fields)


# -- multilinear corollary ------------------------------------------------------------

@dataclass(frozen=True)
class MultilinearResult:
    value: float
    bound: float
    dist: float

    @property
    def ok(self) -> bool:
        return self.value <= self.bound + 1e-8


def multilinear_bound(dist: float, space: str = POSITION) -> float:
    """Best available constant for |Q| / prod ||f_j|| at support separation ``dist``.

    The minimum of the unconditional P1 upper bound, the corollary bound
    c / sqrt(dist) and the refined P1 min(1, c' / sqrt(dist)), with P1
    replaced by its upper bound 12^(-1/4).
    """
    p1 = CONSTANTS.P1_upper
    if dist <= 0:
        return p1
    if space == POSITION:
        plain, refined = CONSTANTS.multilinear_x, CONSTANTS.refined_x
    else:
        plain, refined = CONSTANTS.multilinear_k, CONSTANTS.refined_k
    root = math.sqrt(dist)
    return min(p1, plain / root, p1 * min(1.0, refined / root))


def multilinear_bound_check(
    fields,
    pair: tuple[int, int],
    supports,
    space: str = POSITION,
    rule: QuadratureRule | None = None,
) -> MultilinearResult:
    """|Q(f1..f4)| against the separation bound for the declared pair."""
    fields = list(fields)
    i, j = pair
    if i == j:
        raise ValueError("the separated pair needs two different indices")
    d = supports[i].dist(supports[j])
    value = abs(eval_Q4(*fields, rule))
    bound = multilinear_bound(d, space) * math.prod(f.norm() for f in fields)
    return MultilinearResult(value, bound, d)


def multilinear_quadruple(grid: Grid, dist: float, space: str = POSITION):
    """(f1, f2, f2, f1) with f1, f2 the ``separated_pair`` bumps; Q is then int |T f1|^2 |T f2|^2.

    ``dist`` = 0 gives four copies of one bump on [-1, 1].
    """
    if dist > 0:
        s1, s2 = separated_pair(dist, space)
    else:
        s1 = s2 = SupportSpec(((-1.0, 1.0),), space)
    f1 = bump(grid, *s1.intervals[0], space)
    f2 = bump(grid, *s2.intervals[0], space)
    return [f1, f2, f2, f1], [s1, s2, s2, s1]


def multilinear_grid(space: str = POSITION) -> Grid:
    """Unit-width x bumps reach |k| ~ 150 and spread over ~+-250 by r = 1; k bumps need a box of ~300."""
    return Grid(16384, 512.0) if space == POSITION else Grid(1024, 256.0)


# -- standard families and the report ---------------------------------------------

def separated_pair(dist: float, space: str):
    """Unit-width intervals [d/2, d/2 + 1] and [-d/2 - 1, -d/2]."""
    s1 = SupportSpec(((dist / 2.0, dist / 2.0 + 1.0),), space)
    s2 = SupportSpec(((-dist / 2.0 - 1.0, -dist / 2.0),), space)
    return s1, s2


def family_grid(dist: float, space: str, t_extent: float) -> Grid:
    """A grid that holds the bump pair of ``separated_pair`` up to |t| = t_extent.

    Frequency bumps need a box wide enough for their x-profile and its
    drift 2 t k.  Position bumps get k_max = 100 (spectral amplitude ~1e-15
    of the peak) and a box that keeps |k| <= 50, all but ~1e-5 of the mass,
    from wrapping up to ``t_extent``.
    """
    if space == FREQUENCY:
        kmax = dist / 2.0 + 1.0
        half = 160.0 + 2.0 * t_extent * kmax + 40.0
        length = 2.0 ** math.ceil(math.log2(2.0 * half))
        dk = 2.0 * math.pi / length
        n = 2 ** math.ceil(math.log2(2.0 * (kmax + 4.0) / dk))
        return Grid(max(n, 512), length)
    dx = math.pi / 100.0
    half = dist / 2.0 + 1.0 + 2.0 * t_extent * 50.0
    n = 2 ** math.ceil(math.log2(2.0 * half / dx))
    return Grid(n, n * dx)


@dataclass(frozen=True)
class CheckRecord:
    """One line of a verification report; ``sense`` is 'le' (value <= bound) or 'ge'."""

    check: str
    params: dict
    value: float
    bound: float
    sense: str = "le"

    @property
    def margin(self) -> float:
        return self.bound - self.value if self.sense == "le" else self.value - self.bound

    @property
    def passed(self) -> bool:
        return bool(self.margin >= 0)

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "params": self.params,
            "value": self.value,
            "bound": self.bound,
            "margin": self.margin,
            "pass": self.passed,
        }


def write_report(records, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps([r.to_dict() for r in records], indent=2, sort_keys=True) + "\n")
    return path


QUASILOCAL_S = {POSITION: 4.0, FREQUENCY: 1.0}


def quasilocal_family(grid: Grid, space: str = POSITION, s: float | None = None, violated: bool = False):
    """Four bumps in the quasi-local geometry (or a violated variant) and their supports.

    f2, f4 sit in [0.6 s, 0.9 s] and f3 in [-0.45 s, -0.15 s], so that
    f2 - f3 + f4 concentrates around 1.8 s.  f1 lies in [3.5 s, 4.5 s] for
    the lemma's geometry, and in [1.65 s, 1.95 s], on top of that sum, for
    the negative control.  The violated quadruple has a phase
    (y1^2 - y2^2 + y3^2 - y4^2) / (4 r) of about 0.55 s^2 / r, small enough
    that the r-average does not cancel it.
    """
    s = QUASILOCAL_S[space] if s is None else s
    inner = [(0.6 * s, 0.9 * s), (-0.45 * s, -0.15 * s), (0.6 * s, 0.9 * s)]
    first = (1.65 * s, 1.95 * s) if violated else (3.5 * s, 4.5 * s)
    supports = [SupportSpec((iv,), space) for iv in [first] + inner]
    phases = (1.0, 1.0, 1j, 1.0 - 1j)
    fields = [bump(grid, *sp.intervals[0], space) * c for sp, c in zip(supports, phases)]
    return fields, supports


def quasilocal_grid(space: str = POSITION) -> Grid:
    """Grid resolving ``quasilocal_family`` at its default s.

    In x (s = 4) the bumps need |k| up to ~100 and spread over ~+-50 by
    r = 1.  In k (s = 1) the box has to hold x-profiles of width ~500.
    """
    return Grid(4096, 128.0) if space == POSITION else Grid(2048, 1024.0)


def quasilocal_rule(space: str = POSITION) -> QuadratureRule:
    """Averaging rule for the negative control.

    In x the violated quadruple oscillates like exp(i c / r), with nothing
    before r ~ 1/40, so the reciprocal rule resolves it.  In k plain
    Gauss-Legendre converges.
    """
    return reciprocal_rule(1.0 / 40.0, 16, 80) if space == POSITION else gauss_legendre(64)
