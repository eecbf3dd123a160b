"""Gauss-Legendre rules, panel refinement, Richardson extrapolation and stable sums."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..errors import ConfigError, QuadratureFailure


@dataclass(frozen=True)
class QuadratureSpec:
    gauss_order: int = 32
    subdivisions: int = 12  # dyadic levels toward singular endpoints
    corner_offsets: tuple[float, ...] = (1e-3, 1e-4, 1e-5)
    richardson_levels: int = 3
    # radii (in units of sqrt(kappa)) for the arc flux; a series in 1/r is fitted through them
    asymptotic_cutoffs: tuple[float, ...] = (250.0, 500.0, 1e3, 2e3, 4e3, 8e3)

    def __post_init__(self):
        if self.gauss_order < 8:
            raise ConfigError("gauss_order must be at least 8")
        if self.subdivisions < 1:
            raise ConfigError("subdivisions must be positive")
        if not self.corner_offsets or min(self.corner_offsets) <= 0:
            raise ConfigError("corner offsets must be positive")
        if self.richardson_levels < 1 or self.richardson_levels > len(self.corner_offsets):
            raise ConfigError("richardson_levels must not exceed the number of offsets")
        if len(self.asymptotic_cutoffs) < 2 or min(self.asymptotic_cutoffs) <= 0:
            raise ConfigError("at least two positive asymptotic cutoffs are needed")


@lru_cache(maxsize=None)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def gauss_nodes(a: float, b: float, n: int):
    """Nodes and weights of the n-point Gauss-Legendre rule on [a, b]."""
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def pairwise_sum(values) -> float:
    """Deterministic pairwise summation (order independent of the platform)."""
    v = np.asarray(values, dtype=float).ravel()
    while v.size > 1:
        if v.size % 2:
            v = np.append(v, 0.0)
        v = v[0::2] + v[1::2]
    return float(v[0]) if v.size else 0.0


def dyadic_panels(a: float, b: float, levels: int, toward: str = "both") -> list[tuple[float, float]]:
    """Split [a, b] into panels refined geometrically toward one or both ends."""
    if toward == "both":
        m = 0.5 * (a + b)
        left = dyadic_panels(a, m, levels, "a")
        right = dyadic_panels(m, b, levels, "b")
        return left + right
    edges = [0.0] + [2.0 ** (k - levels) for k in range(levels + 1)]
    if toward == "a":
        return [(a + (b - a) * edges[i], a + (b - a) * edges[i + 1]) for i in range(len(edges) - 1)]
    return [(b - (b - a) * edges[i + 1], b - (b - a) * edges[i]) for i in reversed(range(len(edges) - 1))]


def panel_rule(panels, n: int):
    xs, ws = [], []
    for a, b in panels:
        x, w = gauss_nodes(a, b, n)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def integrate_1d(f, panels, n: int):
    """Integral of a vectorised f over panels, with the n vs n/2 difference as error estimate."""
    x, w = panel_rule(panels, n)
    hi = pairwise_sum(w * f(x))
    x2, w2 = panel_rule(panels, max(n // 2, 4))
    lo = pairwise_sum(w2 * f(x2))
    return hi, abs(hi - lo)


def richardson(hs, values, powers=None) -> tuple[float, float]:
    """Extrapolate values(h) to h = 0 assuming a polynomial in h with the given powers.

    Returns (limit, error estimate); the estimate compares with the extrapolation
    that drops the finest level.
    """
    hs = np.asarray(hs, dtype=float)
    values = np.asarray(values, dtype=float)
    k = len(hs)
    if powers is None:
        powers = list(range(1, k))
    A = np.column_stack([np.ones(k)] + [hs**p for p in powers[: k - 1]])
    limit = float(np.linalg.solve(A, values)[0])
    if k < 2:
        return limit, math.inf
    order = np.argsort(hs)[::-1]  # coarse to fine
    keep = order[:-1]
    A2 = np.column_stack([np.ones(k - 1)] + [hs[keep] ** p for p in powers[: k - 2]])
    prev = float(np.linalg.lstsq(A2, values[keep], rcond=None)[0][0])
    err = abs(limit - prev)
    if not np.isfinite(limit):
        raise QuadratureFailure("Richardson extrapolation produced a non-finite value")
    return limit, err


@dataclass
class Estimate:
    value: float
    error: float
    method: str
    provenance: str = "quadrature"
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"value": self.value, "method": self.method, "error_estimate": self.error,
                "provenance": self.provenance}
