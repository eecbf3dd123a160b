"""Reference metrics used to validate the tensor engine: the flat model and Euclidean Kerr."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ParamError
from .core import MetricChart
from .jet import cos, sin


class FlatModel(MetricChart):
    """g0 = dtau^2 + dr^2 + r^2 (dtheta^2 + sin^2 theta dphi^2) on (tau, r, theta, phi)."""

    n = 4
    chart_id = "(tau,r,theta,phi)-flat"

    def components(self, coords):
        _, r, th, _ = coords
        s = sin(th)
        return [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, r * r, 0.0],
                [0.0, 0.0, 0.0, r * r * s * s]]

    def in_domain(self, points):
        return (points[:, 1] > 0) & (points[:, 2] > 0) & (points[:, 2] < math.pi)


class EuclideanKerr(MetricChart):
    """Euclidean Kerr with f = r^2 - 2 m r - a^2 and rho^2 = r^2 - a^2 cos^2 theta."""

    n = 4
    chart_id = "(tau,r,theta,phi)-kerr"

    def __init__(self, m: float, a: float = 0.0):
        if not m > 0:
            raise ParamError(f"m={m} violates m > 0")
        if not a >= 0:
            raise ParamError(f"a={a} violates a >= 0")
        self.m, self.a = float(m), float(a)
        self.r_plus = self.m + math.sqrt(self.m**2 + self.a**2)

    def components(self, coords):
        _, r, th, _ = coords
        m, a = self.m, self.a
        f = r * r - 2.0 * m * r - a * a
        s, c = sin(th), cos(th)
        rho2 = r * r - a * a * c * c
        s2 = s * s
        # (dtau + a s^2 dphi)^2 f/rho^2 + s^2/rho^2 ((r^2 - a^2) dphi - a dtau)^2
        A, B = f / rho2, s2 / rho2
        gtt = A + B * a * a
        gtp = A * a * s2 - B * a * (r * r - a * a)
        gpp = A * a * a * s2 * s2 + B * (r * r - a * a) ** 2
        return [[gtt, 0.0, 0.0, gtp], [0.0, rho2 / f, 0.0, 0.0], [0.0, 0.0, rho2, 0.0],
                [gtp, 0.0, 0.0, gpp]]

    def in_domain(self, points):
        return (points[:, 1] > self.r_plus) & (points[:, 2] > 0) & (points[:, 2] < math.pi)


def reference_metric(name: str, **params) -> MetricChart:
    key = name.replace("_", "").replace("-", "").lower()
    if key in ("flat", "flatmodel"):
        return FlatModel()
    if key in ("kerr", "euclideankerr"):
        return EuclideanKerr(params.get("m", 1.0), params.get("a", 0.0))
    raise ParamError(f"unknown reference metric {name!r}")


def random_points(chart: MetricChart, count: int, seed: int = 0) -> np.ndarray:
    """Sample points well inside the fixture's domain."""
    rng = np.random.default_rng(seed)
    r0 = getattr(chart, "r_plus", 0.0)
    pts = np.column_stack([
        rng.uniform(-1, 1, count),
        r0 + rng.uniform(0.5, 5.0, count),
        rng.uniform(0.2, math.pi - 0.2, count),
        rng.uniform(0, 2 * math.pi, count),
    ])
    return pts
