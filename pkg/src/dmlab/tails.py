"""Tail distributions of a field and of its transform.

    alpha(s) = ( int_{|x| >= s} |f(x)|^2 dx )^(1/2)
    beta(s)  = ( int_{|k| >= s} |fhat(k)|^2 dk )^(1/2)

plus the checks built on them: the explicit-constant self-consistency
bounds for the ground state, the log-normal decay envelope that follows
from the self-consistency bound by bootstrapping, and the pointwise bound
|f(s)|^2 + |f(-s)|^2 <= 2 ||f'|| alpha(s).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .functionals import pad
from .grid import Field, Grid, fft_coeffs, ifft_coeffs, spectral_derivative, to_frequency, to_position

# below this fraction of alpha(0) tails are rounding noise
FLOOR = 1e-12
SELF_CONSISTENCY_TOL = 1e-4
FOURIER_CONSTANT = 0.78
BOOTSTRAP_TARGET = 3.0 ** (-0.25)


def _tail_table(coeffs: np.ndarray, grid: Grid):
    """Radial tail table for the field with centred spectral ``coeffs`` on ``grid``.

    The field is resampled on the twice-refined grid (exact for n-mode
    fields).  With D = |u|^2 and g(r) = D(r) + D(-r), the tails
    int_{r_j}^{R} g dr at the fine radii are the endpoint-corrected
    trapezoid sums (Euler-Maclaurin through h^4, with the derivatives of g
    taken spectrally).  g'(0) = g'(R) = 0, so the r = 0 value is exactly
    the discrete mass.  Returns (r, g, g', tails).
    """
    fine = Grid(2 * grid.n, grid.length)
    padded = pad(coeffs, 2)
    k = fine.k
    u0, u1, u2, u3 = (ifft_coeffs(padded * (1j * k) ** p, fine) for p in range(4))
    D = np.abs(u0) ** 2
    D1 = 2.0 * np.real(np.conj(u0) * u1)
    D3 = 2.0 * np.real(np.conj(u0) * u3 + 3.0 * np.conj(u1) * u2)
    c = fine.n // 2
    h = fine.dx

    def radial(v, odd):
        out = np.empty(c + 1)
        sgn = -1.0 if odd else 1.0
        out[0] = v[c] + sgn * v[c]
        out[1:c] = v[c + 1 :] + sgn * v[c - 1 : 0 : -1]
        out[c] = v[0] + sgn * v[0]
        return out

    g, g1, g3 = radial(D, False), radial(D1, True), radial(D3, True)
    r = h * np.arange(c + 1)
    trap = np.append(np.cumsum((0.5 * h * (g[:-1] + g[1:]))[::-1])[::-1], 0.0)
    tails = trap + (h**2 / 12.0) * g1 - (h**4 / 720.0) * g3
    # corrections are exact to rounding; keep the table non-increasing
    tails = np.maximum.accumulate(np.maximum(tails, 0.0)[::-1])[::-1]
    return r, g, g1, tails


@dataclass(frozen=True)
class _DiscreteTable:
    """Sorted |coordinates| and the suffix sums weight * sum_{|c_j| >= r_i} |v_j|^2."""

    r: np.ndarray
    suffix: np.ndarray

    @classmethod
    def build(cls, values: np.ndarray, coords: np.ndarray, weight: float) -> "_DiscreteTable":
        order = np.argsort(np.abs(coords), kind="stable")
        dens = np.abs(values[order]) ** 2
        suffix = weight * np.append(np.cumsum(dens[::-1])[::-1], 0.0)
        return cls(np.abs(coords)[order], suffix)

    def __getitem__(self, i):
        # tail(0) at index 3, like the spectral table
        if i != 3:
            raise IndexError(i)
        return self.suffix


def _lookup(table, s) -> np.ndarray:
    """Tail at arbitrary s; inside a cell the density is the cubic Hermite interpolant."""
    if isinstance(table, _DiscreteTable):
        idx = np.searchsorted(table.r, np.asarray(s, dtype=float), side="left")
        return np.sqrt(table.suffix[idx])
    r, g, g1, tail = table
    s = np.asarray(s, dtype=float)
    h = r[1] - r[0]
    j = np.clip(np.floor(s / h).astype(int), 0, r.size - 2)
    u = np.clip((s - r[j]) / h, 0.0, 1.0)
    # int_u^1 of the Hermite basis polynomials
    i00 = 0.5 - (u**4 / 2 - u**3 + u)
    i10 = 1.0 / 12.0 - (u**4 / 4 - 2 * u**3 / 3 + u**2 / 2)
    i01 = 0.5 - (-(u**4) / 2 + u**3)
    i11 = -1.0 / 12.0 - (u**4 / 4 - u**3 / 3)
    part = h * (g[j] * i00 + h * g1[j] * i10 + g[j + 1] * i01 + h * g1[j + 1] * i11)
    whole = h * (0.5 * (g[j] + g[j + 1]) + h * (g1[j] - g1[j + 1]) / 12.0)
    cell = tail[j] - tail[j + 1]
    # rescale so the lookup reproduces the table at the lattice radii
    with np.errstate(divide="ignore", invalid="ignore"):
        part = np.where(whole > 0, part * (cell / whole), cell * (1.0 - u))
    part = np.clip(part, 0.0, cell)
    out = np.where(s >= r[-1], 0.0, tail[j + 1] + part)
    return np.sqrt(out)


@dataclass
class TailProfile:
    s: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    alpha0: float
    beta0: float
    s_max: float
    _x_table: tuple = field(repr=False, default=None)
    _k_table: tuple = field(repr=False, default=None)
    envelope: np.ndarray | None = None

    @property
    def alpha_bar(self) -> np.ndarray:
        return self.alpha / self.alpha0

    @property
    def beta_bar(self) -> np.ndarray:
        return self.beta / self.beta0

    def alpha_at(self, s) -> np.ndarray:
        return _lookup(self._x_table, s)

    def beta_at(self, s) -> np.ndarray:
        return _lookup(self._k_table, s)

    def tail_at(self, s, side: str = "x") -> np.ndarray:
        return self.alpha_at(s) if side == "x" else self.beta_at(s)

    def write_csv(self, path) -> Path:
        path = Path(path)
        env = self.envelope if self.envelope is not None else np.full(self.s.shape, np.nan)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "alpha", "beta", "alpha_bar", "beta_bar", "envelope"])
            for row in zip(self.s, self.alpha, self.beta, self.alpha_bar, self.beta_bar, env):
                w.writerow([repr(float(v)) for v in row])
        return path


def default_s_grid(f: Field, points: int = 200) -> np.ndarray:
    g = f.grid
    return np.geomspace(g.dx, g.length / 2.0, points)


def tail_profile(f: Field, s_grid=None, method: str = "spectral") -> TailProfile:
    """alpha and beta sampled on ``s_grid`` (default: logarithmic from dx to L/2).

    ``method='spectral'`` integrates the band-limited interpolant of |f|^2
    (accurate to rounding for resolved fields, and continuous in s).
    ``method='discrete'`` is the plain lattice sum dx * sum_{|x_j| >= s} |f_j|^2,
    which is exactly zero beyond a compactly supported sample set.
    """
    if method not in ("spectral", "discrete"):
        raise ValueError(f"unknown tail method {method!r}")
    fp = to_position(f)
    fh = to_frequency(f)
    grid = fp.grid
    s = default_s_grid(fp) if s_grid is None else np.asarray(s_grid, dtype=float)
    if s.ndim != 1 or np.any(np.diff(s) <= 0) or np.any(s < 0):
        raise ValueError("s grid must be non-negative and strictly increasing")
    if s[-1] > grid.length / 2.0 * (1 + 1e-12):
        raise ValueError(f"tail at s={s[-1]} is not representable on a domain of half-width {grid.length / 2}")
    if method == "discrete":
        xt = _DiscreteTable.build(fp.values, grid.x, grid.dx)
        kt = _DiscreteTable.build(fh.values, grid.k, grid.dk)
    else:
        xt = _tail_table(fh.values, grid)
        # the spectrum is a field on the dual grid whose transform is f(-x)
        kt = _tail_table(fft_coeffs(fh.values, grid.dual()), grid.dual())
    prof = TailProfile(
        s=s,
        alpha=_lookup(xt, s),
        beta=_lookup(kt, s),
        alpha0=math.sqrt(xt[3][0]),
        beta0=math.sqrt(kt[3][0]),
        s_max=grid.length / 2.0,
        _x_table=xt,
        _k_table=kt,
    )
    if np.any(np.diff(prof.alpha) > 1e-15 * prof.alpha0) or np.any(np.diff(prof.beta) > 1e-15 * prof.beta0):
        raise AssertionError("tail distribution is not monotone")
    return prof


# -- self-consistency ---------------------------------------------------------------

@dataclass
class SelfConsistencyReport:
    side: str
    s: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    tol: float
    advisory: bool

    @property
    def margin(self) -> np.ndarray:
        return self.rhs - self.lhs

    @property
    def min_margin(self) -> float:
        return float(self.margin.min()) if self.margin.size else math.inf

    @property
    def passed(self) -> bool:
        return bool(np.all(self.margin >= -self.tol))

    def to_dict(self) -> dict:
        return {
            "side": self.side,
            "points": int(self.s.size),
            "min_margin": self.min_margin,
            "pass": self.passed,
            "advisory": self.advisory,
            "tol": self.tol,
        }


def explicit_rhs(bar: np.ndarray, s: np.ndarray, side: str) -> np.ndarray:
    """bar^3 + 3 min(1, c / sqrt(s)) (1 - bar) bar with c = 1 (x) or 0.78 (Fourier)."""
    c = 1.0 if side == "x" else FOURIER_CONSTANT
    with np.errstate(divide="ignore"):
        factor = np.minimum(1.0, c / np.sqrt(s))
    return bar**3 + 3.0 * factor * (1.0 - bar) * bar


def selfconsistency_check(
    p: TailProfile,
    side: str = "x",
    residual: float | None = None,
    residual_threshold: float = 1e-6,
    tol: float = SELF_CONSISTENCY_TOL,
) -> SelfConsistencyReport:
    """Evaluate bar(3s) <= bar(s)^3 + 3 min(1, c/sqrt(s)) (1 - bar(s)) bar(s) on the profile grid.

    The constants hold for the ground-state soliton only; when ``residual``
    is missing or above ``residual_threshold`` the report is advisory.
    """
    if side not in ("x", "fourier"):
        raise ValueError(f"side must be 'x' or 'fourier', got {side!r}")
    s = p.s[3.0 * p.s <= p.s[-1] * (1 + 1e-12)]
    s = s[s > 0]
    norm0 = p.alpha0 if side == "x" else p.beta0
    bar_s = p.tail_at(s, side) / norm0
    bar_3s = p.tail_at(3.0 * s, side) / norm0
    advisory = residual is None or residual > residual_threshold
    return SelfConsistencyReport(side, s, bar_3s, explicit_rhs(bar_s, s, side), tol, advisory)


# -- decay envelope ------------------------------------------------------------------

def fitted_constant(p: TailProfile, side: str = "x", floor: float = FLOOR) -> float:
    """Smallest C with tail(3s) <= C (tail(s)^3 + tail(0)^2 tail(s)/sqrt(s)) on the profile grid."""
    s = p.s[(p.s > 0) & (3.0 * p.s <= p.s[-1] * (1 + 1e-12))]
    t0 = p.alpha0 if side == "x" else p.beta0
    ts = p.tail_at(s, side)
    t3 = p.tail_at(3.0 * s, side)
    keep = ts > floor * t0
    if not np.any(keep):
        raise ValueError("no tail values above the floor")
    s, ts, t3 = s[keep], ts[keep], t3[keep]
    return float(np.max(t3 / (ts**3 + t0**2 * ts / np.sqrt(s))))


def bootstrap_start(p: TailProfile, C: float, side: str = "x") -> float:
    """Smallest grid s with C (tail(s)^2 + tail(0)^2 / sqrt(s)) <= 3^(-1/4)."""
    s = p.s[p.s > 0]
    t0 = p.alpha0 if side == "x" else p.beta0
    lhs = C * (p.tail_at(s, side) ** 2 + t0**2 / np.sqrt(s))
    ok = np.nonzero(lhs <= BOOTSTRAP_TARGET)[0]
    if ok.size == 0:
        raise ValueError("bootstrap start criterion is not met anywhere on the profile grid")
    return float(s[ok[0]])


def envelope(s, s0: float, tail_s0: float) -> np.ndarray:
    """tail(s0) 3^(1/4) 3^(-(log_3(s / (3 s0)))^2 / 4)."""
    lg = np.log(np.asarray(s, dtype=float) / (3.0 * s0)) / math.log(3.0)
    return tail_s0 * 3.0**0.25 * 3.0 ** (-(lg**2) / 4.0)


@dataclass
class EnvelopeReport:
    side: str
    s0: float
    C: float
    s: np.ndarray
    tail: np.ndarray
    envelope: np.ndarray
    effective: np.ndarray  # mask: s >= 9 s0 and tail above the floor
    tol: float

    @property
    def holds(self) -> np.ndarray:
        return self.tail <= self.envelope * (1.0 + self.tol)

    @property
    def passed(self) -> bool:
        return bool(np.all(self.holds[self.effective])) and bool(np.any(self.effective))

    @property
    def min_ratio_margin(self) -> float:
        """min over the effective range of 1 - tail/envelope."""
        if not np.any(self.effective):
            return math.nan
        return float(np.min(1.0 - self.tail[self.effective] / self.envelope[self.effective]))

    def to_dict(self) -> dict:
        return {
            "side": self.side,
            "s0": self.s0,
            "C": self.C,
            "checked_points": int(np.count_nonzero(self.effective)),
            "min_ratio_margin": self.min_ratio_margin,
            "holds_from_s0": bool(np.all(self.holds[self.s >= self.s0])),
            "pass": self.passed,
        }


def decay_envelope(
    p: TailProfile,
    s0: float | None = None,
    side: str = "x",
    C: float | None = None,
    tol: float = 1e-9,
    floor: float = FLOOR,
) -> EnvelopeReport:
    """Compare the tail with the envelope started at ``s0``.

    Without ``s0`` the start is picked by the bootstrap criterion using the
    fitted self-consistency constant.  The verdict covers s in [9 s0, L/2]
    where the tail is above ``floor * tail(0)``; the bound is too weak to
    mean anything below 9 s0.
    """
    C = fitted_constant(p, side, floor) if C is None else C
    if s0 is None:
        s0 = bootstrap_start(p, C, side)
    if not (p.s[0] <= s0 <= p.s[-1]):
        raise ValueError(f"s0={s0} outside the profile range [{p.s[0]}, {p.s[-1]}]")
    t0 = p.alpha0 if side == "x" else p.beta0
    tail = p.tail_at(p.s, side)
    env = envelope(p.s, s0, float(p.tail_at(s0, side)))
    effective = (p.s >= 9.0 * s0) & (tail > floor * t0)
    if side == "x":
        p.envelope = env
    return EnvelopeReport(side, s0, C, p.s, tail, env, effective, tol)


# -- pointwise decay ---------------------------------------------------------------

@dataclass(frozen=True)
class PointwiseDecay:
    s: float
    value: float
    bound: float
    interpolated: bool

    @property
    def ok(self) -> bool:
        return self.value <= self.bound * (1.0 + 1e-6)


def pointwise_decay(f: Field, s: float) -> PointwiseDecay:
    """|f(s)|^2 + |f(-s)|^2 against 2 ||f'|| alpha(s)."""
    fp = to_position(f)
    grid = fp.grid
    if not 0 <= s < grid.length / 2:
        raise ValueError(f"s={s} outside [0, L/2)")
    x = grid.x
    on_grid = bool(np.any(np.isclose(x, s, rtol=0, atol=1e-9 * grid.dx))) and bool(
        np.any(np.isclose(x, -s, rtol=0, atol=1e-9 * grid.dx))
    )
    dens = np.abs(fp.values) ** 2
    value = float(np.interp(s, x, dens) + np.interp(-s, x, dens))
    fprime = spectral_derivative(fp).norm()
    alpha = float(tail_profile(fp, np.array([s])).alpha[0])
    return PointwiseDecay(s, value, 2.0 * fprime * alpha, not on_grid)


def fit_exponential_tail(p: TailProfile, floor: float = FLOOR, window=(0.2, 0.9)) -> dict:
    """Diagnostic least-squares fit log alpha(s) ~ c - b s over part of the tail; never asserted."""
    keep = p.alpha > floor * p.alpha0 * 1e3
    s, a = p.s[keep], p.alpha[keep]
    if s.size < 4:
        return {"b": math.nan, "c": math.nan, "points": int(s.size)}
    lo, hi = np.quantile(s, window)
    sel = (s >= lo) & (s <= hi)
    slope, intercept = np.polyfit(s[sel], np.log(a[sel]), 1)
    return {"b": float(-slope), "c": float(intercept), "points": int(np.count_nonzero(sel))}
