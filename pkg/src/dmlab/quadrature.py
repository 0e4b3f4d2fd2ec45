"""Quadrature rules for the averaging integral over r in [0, 1] and for time windows."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes in (0, 1) with positive weights summing to one."""

    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    kind: str = "gauss-legendre"

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1 or nodes.size == 0:
            raise ValueError("nodes and weights must be matching non-empty 1-d arrays")
        if np.any(nodes <= 0) or np.any(nodes >= 1):
            raise ValueError("quadrature nodes must lie strictly inside (0, 1)")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return self.nodes.size

    def __repr__(self):
        return f"QuadratureRule(kind={self.kind!r}, size={self.size})"

    def integrate(self, func) -> float:
        return float(np.dot(self.weights, func(self.nodes)))


@lru_cache(maxsize=32)
def _leggauss(m: int):
    return np.polynomial.legendre.leggauss(m)


def gauss_legendre(m: int = 32) -> QuadratureRule:
    """m-point Gauss-Legendre rule on [0, 1]."""
    if m < 1:
        raise ValueError("need at least one node")
    z, w = _leggauss(int(m))
    return QuadratureRule(0.5 * (z + 1.0), 0.5 * w, "gauss-legendre")


def composite(rule: QuadratureRule, breaks) -> tuple[np.ndarray, np.ndarray]:
    """Copy ``rule`` onto each panel [breaks[i], breaks[i+1]]; returns (nodes, weights)."""
    breaks = np.asarray(breaks, dtype=float)
    if breaks.ndim != 1 or breaks.size < 2 or np.any(np.diff(breaks) <= 0):
        raise ValueError("panel breaks must be strictly increasing")
    h = np.diff(breaks)
    nodes = (breaks[:-1, None] + h[:, None] * rule.nodes[None, :]).ravel()
    weights = (h[:, None] * rule.weights[None, :]).ravel()
    return nodes, weights


def time_nodes(a: float, b: float, power: int, rule: QuadratureRule, panels: int = 1):
    """Nodes t_i and weights w_i with sum w_i g(t_i) ~ int_a^b g(t) t^power dt.

    ``power`` = -1 integrates in log t (requires 0 < a), which resolves the
    1/t weight near the lower end; otherwise the panels are uniform in t.
    """
    if not b > a:
        raise ValueError(f"empty time window ({a}, {b})")
    if power not in (-1, 0, 1):
        raise ValueError(f"unsupported time weight power {power}")
    if power == -1:
        if a <= 0:
            raise ValueError("the 1/t weight needs a window with 0 < a")
        u, w = composite(rule, np.linspace(math.log(a), math.log(b), panels + 1))
        # dt / t = du
        return np.exp(u), w
    t, w = composite(rule, np.linspace(a, b, panels + 1))
    if power == 1:
        w = w * t
    return t, w


def geometric_breaks(t_max: float, first: float, ratio: float = 2.0) -> np.ndarray:
    """0, first, first*ratio, ... capped at t_max; panel edges for decaying integrands."""
    edges = [0.0]
    h = first
    while edges[-1] + 1e-15 < t_max:
        edges.append(min(t_max, h))
        h *= ratio
    return np.asarray(edges)


def reciprocal_rule(t_min: float, m: int = 16, panels: int = 64, head: int = 16) -> QuadratureRule:
    """Rule on [0, 1] for integrands oscillating like exp(i c / t) near t = 0.

    On [t_min, 1] the substitution u = 1/t makes such oscillations uniform;
    the u-interval [1, 1/t_min] is split into equal panels.  [0, t_min] gets
    a plain ``head``-point rule.
    """
    if not 0 < t_min < 1:
        raise ValueError("t_min must lie in (0, 1)")
    u, wu = composite(gauss_legendre(m), np.linspace(1.0, 1.0 / t_min, panels + 1))
    z, wz = _leggauss(int(head))
    t0 = 0.5 * t_min * (z + 1.0)
    w0 = 0.5 * t_min * wz
    nodes = np.concatenate([t0, 1.0 / u[::-1]])
    weights = np.concatenate([w0, (wu / u**2)[::-1]])
    return QuadratureRule(nodes, weights, "reciprocal")
