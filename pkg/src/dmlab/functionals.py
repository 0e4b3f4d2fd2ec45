"""The averaged nonlocal functionals.

    Q4(f1, f2, f3, f4) = int_0^1 int conj(T_r f1) T_r f2 conj(T_r f3) T_r f4 dx dr
    Q3(f1, f2, f3)     = int_0^1 T_r^{-1}[T_r f1 conj(T_r f2) T_r f3] dr
    R(f1, f2, f3, f4)  = Q4 with the extra weight r
    H(f)               = d_av/2 ||f'||^2 - Q4(f, f, f, f)/4

Pointwise products are formed on a grid with twice as many points (zero
padded spectra).  For n-mode inputs this makes the x-integral of the quartic
product exact, and the cubic product exact on the n retained modes, so the
identity <g, Q3(f, f, f)> = Q4(g, f, f, f) holds to rounding.
"""

from __future__ import annotations

import numpy as np

from .grid import (
    FREQUENCY,
    Field,
    Grid,
    fft_coeffs,
    ifft_coeffs,
    same_grid,
    to_frequency,
    to_position,
)
from .quadrature import QuadratureRule, gauss_legendre, time_nodes

DEFAULT_NODES = 32

# ceiling on (time nodes per chunk) * (padded points)
_CHUNK_ELEMENTS = 1 << 21


def default_rule() -> QuadratureRule:
    return gauss_legendre(DEFAULT_NODES)


def pad(coeffs: np.ndarray, factor: int = 2) -> np.ndarray:
    """Embed centred spectra (last axis, n modes) into ``factor * n`` modes."""
    n = coeffs.shape[-1]
    out = np.zeros(coeffs.shape[:-1] + (factor * n,), dtype=complex)
    lo = (factor * n) // 2 - n // 2
    out[..., lo : lo + n] = coeffs
    return out


def truncate(coeffs: np.ndarray, n: int) -> np.ndarray:
    """Adjoint of ``pad``: keep the central n modes."""
    m = coeffs.shape[-1]
    lo = m // 2 - n // 2
    return coeffs[..., lo : lo + n]


def _chunks(count: int, padded_n: int):
    step = max(1, _CHUNK_ELEMENTS // padded_n)
    for start in range(0, count, step):
        yield slice(start, min(count, start + step))


def _evolved_padded(fh: np.ndarray, grid: Grid, times: np.ndarray, factor: int) -> np.ndarray:
    """Rows T_{t_i} f sampled on the ``factor``-times refined grid."""
    fine = Grid(factor * grid.n, grid.length)
    phases = np.exp(-1j * np.multiply.outer(times, grid.k**2))
    return ifft_coeffs(pad(phases * fh, factor), fine)


def quartic_integral(fields, times, weights) -> complex:
    """sum_i w_i int conj(T f1) T f2 conj(T f3) T f4 dx at t = times[i]."""
    grid = same_grid(*fields)
    times = np.asarray(times, dtype=float)
    weights = np.asarray(weights, dtype=float)
    specs = [to_frequency(f).values for f in fields]
    # identical inputs share one transform
    uniq = {}
    for s in specs:
        uniq.setdefault(id(s), s)
    dx = grid.dx / 2.0
    per_node = np.empty(times.size, dtype=complex)
    for sl in _chunks(times.size, 2 * grid.n):
        ev = {key: _evolved_padded(s, grid, times[sl], 2) for key, s in uniq.items()}
        u1, u2, u3, u4 = (ev[id(s)] for s in specs)
        per_node[sl] = dx * np.sum(np.conj(u1) * u2 * np.conj(u3) * u4, axis=-1)
    # pairwise reduction over nodes, independent of chunking
    return complex(np.sum(weights * per_node))


def eval_Q4(f1: Field, f2: Field, f3: Field, f4: Field, rule: QuadratureRule | None = None) -> complex:
    """The quartic functional with r averaged over [0, 1]."""
    rule = rule or default_rule()
    return quartic_integral((f1, f2, f3, f4), rule.nodes, rule.weights)


def eval_R(f1: Field, f2: Field, f3: Field, f4: Field, rule: QuadratureRule | None = None) -> complex:
    """Quartic functional with the measure r dr dx on [0, 1]."""
    rule = rule or default_rule()
    return quartic_integral((f1, f2, f3, f4), rule.nodes, rule.weights * rule.nodes)


def eval_Q3(f1: Field, f2: Field, f3: Field, rule: QuadratureRule | None = None) -> Field:
    """The cubic map, returned in position space."""
    rule = rule or default_rule()
    return to_position(cubic_spectrum(f1, f2, f3, rule))


def cubic_spectrum(f1: Field, f2: Field, f3: Field, rule: QuadratureRule) -> Field:
    """eval_Q3 in frequency space (saves one transform inside the solver loop)."""
    grid = same_grid(f1, f2, f3)
    fine = Grid(2 * grid.n, grid.length)
    specs = [to_frequency(f).values for f in (f1, f2, f3)]
    uniq = {}
    for s in specs:
        uniq.setdefault(id(s), s)
    k2 = grid.k**2
    acc = np.zeros((rule.size, grid.n), dtype=complex)
    for sl in _chunks(rule.size, fine.n):
        t = rule.nodes[sl]
        ev = {key: _evolved_padded(s, grid, t, 2) for key, s in uniq.items()}
        u1, u2, u3 = (ev[id(s)] for s in specs)
        prod = truncate(fft_coeffs(u1 * np.conj(u2) * u3, fine), grid.n)
        acc[sl] = rule.weights[sl, None] * np.exp(1j * np.multiply.outer(t, k2)) * prod
    return Field(grid, np.sum(acc, axis=0), FREQUENCY)


def kinetic(f: Field) -> float:
    """||f'||^2 computed spectrally."""
    fh = to_frequency(f)
    return float(fh.grid.dk * np.sum(fh.grid.k**2 * np.abs(fh.values) ** 2))


def eval_H(f: Field, d_av: float, rule: QuadratureRule | None = None) -> float:
    """Averaged Hamiltonian d_av/2 ||f'||^2 - Q4(f, f, f, f)/4."""
    q = eval_Q4(f, f, f, f, rule).real
    return 0.5 * d_av * kinetic(f) - 0.25 * q


def eval_Q_windowed(
    f1: Field,
    f2: Field,
    f3: Field,
    f4: Field,
    window: tuple[float, float],
    power: int = 0,
    rule: QuadratureRule | None = None,
    panels: int = 1,
) -> complex:
    """int_a^b int conj(T f1) T f2 conj(T f3) T f4 t^power dx dt.

    ``power`` is -1, 0 or 1.  For power = -1 the window must satisfy
    0 < a < b and the t-integral is done in log t.
    """
    rule = rule or default_rule()
    a, b = window
    if power == -1 and a <= 0:
        raise ValueError("a window with 0 < a is required for the 1/t weight")
    t, w = time_nodes(a, b, power, rule, panels)
    return quartic_integral((f1, f2, f3, f4), t, w)


def sextic_integral(f: Field, times, weights) -> float:
    """sum_i w_i int |T_{t_i} f|^6 dx, exact in x for n-mode fields (3x padding)."""
    grid = f.grid
    fh = to_frequency(f).values
    times = np.asarray(times, dtype=float)
    per_node = np.empty(times.size)
    dx = grid.dx / 3.0
    for sl in _chunks(times.size, 3 * grid.n):
        u = _evolved_padded(fh, grid, times[sl], 3)
        per_node[sl] = dx * np.sum(np.abs(u) ** 6, axis=-1)
    return float(np.sum(np.asarray(weights) * per_node))

