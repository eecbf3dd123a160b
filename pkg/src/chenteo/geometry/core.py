"""Chart-based tensor calculus on 3- and 4-dimensional Riemannian charts.

Index conventions (fixed once, tested through the Bianchi identities):

* ``dg[b, r, m, n] = d_r g_{mn}`` and ``ddg[b, s, r, m, n] = d_s d_r g_{mn}``;
  the leading axis ``b`` is a batch of points.
* ``Gamma^m_{nr} = 1/2 g^{ma} (d_n g_{ar} + d_r g_{an} - d_a g_{nr})``.
* ``R^m_{nrs} = d_r Gamma^m_{ns} - d_s Gamma^m_{nr}
  + Gamma^m_{rl} Gamma^l_{sn} - Gamma^m_{sl} Gamma^l_{rn}``, ``Ric_{ns} = R^m_{nms}``.
* Hodge star: ``a ^ *b = <a, b> dVol`` with ``dVol = sqrt(det g) dx^0 ^ ... ^ dx^{n-1}``
  times the chart's orientation sign, so the coordinate order is positively oriented.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..errors import DomainError, SingularMetric
from .jet import Jet, variables

COND_LIMIT = 1e14


@dataclass(frozen=True)
class ChartPoint:
    coords: tuple[float, ...]
    chart_id: str

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)[None, :]


@dataclass(frozen=True)
class Jet2Metric:
    g: np.ndarray
    dg: np.ndarray
    ddg: np.ndarray
    orientation_sign: int = 1

    @property
    def n(self) -> int:
        return self.g.shape[-1]

    @property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.g)

    @property
    def sqrt_det(self) -> np.ndarray:
        return np.sqrt(np.linalg.det(self.g))

    def check(self) -> None:
        det = np.linalg.det(self.g)
        if np.any(~np.isfinite(det)) or np.any(det <= 0.0):
            raise SingularMetric("metric determinant is not positive")
        diag = np.einsum("...ii->...i", self.g)
        if np.any(diag <= 0.0):
            raise SingularMetric("metric is not positive definite")
        # test definiteness on the equilibrated matrix; raw eigenvalues lose the small ones
        d = 1.0 / np.sqrt(diag)
        if np.any(np.linalg.eigvalsh(self.g * d[..., :, None] * d[..., None, :])[..., 0] <= 0.0):
            raise SingularMetric("metric is not positive definite")
        if np.any(equilibrated_cond(self.g) > COND_LIMIT):
            raise SingularMetric("metric condition number exceeds %.0e" % COND_LIMIT)


def equilibrated_cond(g: np.ndarray) -> np.ndarray:
    """Condition number of D^-1/2 g D^-1/2 with D = diag g.

    Diagonal rescaling is exact in floating point up to rounding, so this is the
    number that governs the accuracy of inverting g, not the raw condition number.
    """
    d = 1.0 / np.sqrt(np.einsum("...ii->...i", g))
    return np.linalg.cond(g * d[..., :, None] * d[..., None, :])


@dataclass(frozen=True)
class TwoFormValue:
    components: np.ndarray  # (B, n, n), antisymmetric

    def __post_init__(self):
        c = np.asarray(self.components, dtype=float)
        if c.ndim == 2:
            c = c[None]
        object.__setattr__(self, "components", c)

    def __add__(self, other: "TwoFormValue") -> "TwoFormValue":
        return TwoFormValue(self.components + other.components)

    def __sub__(self, other: "TwoFormValue") -> "TwoFormValue":
        return TwoFormValue(self.components - other.components)

    def __mul__(self, s) -> "TwoFormValue":
        s = np.asarray(s, dtype=float)
        if s.ndim == 1:
            s = s[:, None, None]
        return TwoFormValue(self.components * s)

    __rmul__ = __mul__

    def __neg__(self) -> "TwoFormValue":
        return TwoFormValue(-self.components)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.components)))

    def contract(self, vector) -> np.ndarray:
        """Interior product ``i_V w``, returning a covector ``(B, n)``."""
        v = np.asarray(vector, dtype=float)
        if v.ndim == 1:
            v = np.broadcast_to(v, self.components.shape[:2])
        return np.einsum("bm,bmn->bn", v, self.components)

    def evaluate(self, u, v) -> np.ndarray:
        u = np.broadcast_to(np.asarray(u, dtype=float), self.components.shape[:2])
        v = np.broadcast_to(np.asarray(v, dtype=float), self.components.shape[:2])
        return np.einsum("bm,bmn,bn->b", u, self.components, v)


@dataclass(frozen=True)
class CurvatureBundle:
    christoffel: np.ndarray  # (B, m, n, r)
    riemann: np.ndarray  # (B, m, n, r, s)
    ricci: np.ndarray
    scalar: np.ndarray
    kretschmann: np.ndarray
    metric: np.ndarray | None = None

    def max_ricci(self) -> np.ndarray:
        return np.max(np.abs(self.ricci), axis=(-2, -1))

    def ricci_frame(self) -> np.ndarray:
        """Ricci components in the orthonormal frame obtained from a Cholesky factor of g."""
        chol = np.linalg.cholesky(self.metric)
        inv = np.linalg.inv(chol)
        return np.einsum("bam,bmn,bcn->bac", inv, self.ricci, inv)

    def max_ricci_frame(self) -> np.ndarray:
        return np.max(np.abs(self.ricci_frame()), axis=(-2, -1))


class MetricChart:
    """A metric given by component functions written in generic arithmetic.

    Subclasses implement :meth:`components`, which receives one scalar per
    coordinate (floats, numpy arrays or :class:`Jet` objects) and returns an
    ``n x n`` nested list of components.  Entries may be ``0`` literals.
    """

    n: int = 4
    chart_id: str = "generic"
    orientation: int = 1

    def components(self, coords: Sequence) -> list[list]:
        raise NotImplementedError

    def in_domain(self, points: np.ndarray) -> np.ndarray:
        return np.ones(points.shape[0], dtype=bool)

    def _points(self, points) -> np.ndarray:
        if isinstance(points, ChartPoint):
            if points.chart_id != self.chart_id:
                raise DomainError(f"point is in chart {points.chart_id!r}, expected {self.chart_id!r}")
            points = points.as_array()
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[-1] != self.n:
            raise DomainError(f"expected {self.n} coordinates, got {pts.shape[-1]}")
        ok = self.in_domain(pts)
        if not np.all(ok):
            bad = pts[~ok][0]
            raise DomainError(f"point {tuple(bad)} outside the domain of chart {self.chart_id!r}")
        return pts

    def metric(self, points) -> np.ndarray:
        pts = self._points(points)
        comps = self.components([pts[:, i] for i in range(self.n)])
        out = np.zeros((pts.shape[0], self.n, self.n))
        for i in range(self.n):
            for j in range(self.n):
                out[:, i, j] = comps[i][j]
        return out

    def jet(self, points) -> Jet2Metric:
        pts = self._points(points)
        b, n = pts.shape
        comps = self.components(variables(pts))
        g = np.zeros((b, n, n))
        dg = np.zeros((b, n, n, n))
        ddg = np.zeros((b, n, n, n, n))
        for i in range(n):
            for j in range(n):
                c = comps[i][j]
                if isinstance(c, Jet):
                    g[:, i, j] = c.val
                    dg[:, :, i, j] = c.grad
                    ddg[:, :, :, i, j] = c.hess
                else:
                    g[:, i, j] = c
        return Jet2Metric(g, dg, ddg, self.orientation)


class FunctionChart(MetricChart):
    def __init__(self, n: int, components: Callable, in_domain: Callable | None = None,
                 chart_id: str = "function", orientation: int = 1):
        self.n = n
        self._components = components
        self._in_domain = in_domain
        self.chart_id = chart_id
        self.orientation = orientation

    def components(self, coords):
        return self._components(coords)

    def in_domain(self, points):
        if self._in_domain is None:
            return np.ones(points.shape[0], dtype=bool)
        return self._in_domain(points)


# ---------------------------------------------------------------------------
# Levi-Civita symbols


def _levi_civita(n: int) -> np.ndarray:
    eps = np.zeros((n,) * n)
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        eps[perm] = -1.0 if inv % 2 else 1.0
    return eps


EPS = {3: _levi_civita(3), 4: _levi_civita(4), 2: _levi_civita(2)}


def _metric_arrays(jet_or_g):
    if isinstance(jet_or_g, Jet2Metric):
        return jet_or_g.g, jet_or_g.orientation_sign
    g = np.asarray(jet_or_g, dtype=float)
    if g.ndim == 2:
        g = g[None]
    return g, 1


def hodge(jet_or_g, form: np.ndarray, degree: int) -> np.ndarray:
    """Hodge dual of a ``degree``-form given by its full antisymmetric components."""
    g, orient = _metric_arrays(jet_or_g)
    n = g.shape[-1]
    ginv = np.linalg.inv(g)
    vol = orient * np.sqrt(np.linalg.det(g))
    eps = EPS[n]
    letters = "abcdefgh"
    up = form
    # raise every index
    for k in range(degree):
        idx = letters[:degree]
        src = idx[:k] + "z" + idx[k + 1:]
        up = np.einsum(f"B{idx[k]}z,B{src}->B{idx}", ginv, up)
    lo = letters[:degree]
    rest = "pqrstuvw"[: n - degree]
    out = np.einsum(f"B{lo},{lo}{rest}->B{rest}", up, eps)
    return out * (vol / math.factorial(degree)).reshape((-1,) + (1,) * (n - degree))


def hodge_star(jet: Jet2Metric | np.ndarray, form: TwoFormValue) -> TwoFormValue:
    """Hodge dual of a 2-form on a 4-dimensional chart."""
    g, _ = _metric_arrays(jet)
    if g.shape[-1] != 4:
        raise ValueError("hodge_star on 2-forms needs a 4-dimensional metric")
    if np.any(np.linalg.det(g) <= 0):
        raise SingularMetric("metric determinant is not positive")
    return TwoFormValue(hodge(jet, form.components, 2))


def wedge_1_2(a: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Components of ``a ^ w`` for a 1-form ``a`` and 2-form ``w``."""
    return (np.einsum("ba,bcd->bacd", a, w)
            + np.einsum("bc,bda->bacd", a, w)
            + np.einsum("bd,bac->bacd", a, w))


def wedge_1_1(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("bm,bn->bmn", a, b) - np.einsum("bn,bm->bmn", a, b)


def inner(g_or_jet, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Metric inner product of two covectors."""
    g, _ = _metric_arrays(g_or_jet)
    return np.einsum("bm,bmn,bn->b", a, np.linalg.inv(g), b)


def two_form_norm2(g_or_jet, w: np.ndarray) -> np.ndarray:
    """``|w|^2 = 1/2 w_{mn} w^{mn}`` so that ``w ^ *w = |w|^2 dVol``."""
    g, _ = _metric_arrays(g_or_jet)
    gi = np.linalg.inv(g)
    return 0.5 * np.einsum("bmn,bma,bnc,bac->b", w, gi, gi, w)


def wedge_2_2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Coefficient of ``dx^0 ^ dx^1 ^ dx^2 ^ dx^3`` in ``a ^ b``."""
    return 0.25 * np.einsum("bmn,brs,mnrs->b", a, b, EPS[4])


# ---------------------------------------------------------------------------
# Curvature


def christoffel_from_jet(jet: Jet2Metric) -> tuple[np.ndarray, np.ndarray]:
    ginv = np.linalg.inv(jet.g)
    dg = jet.dg
    low = 0.5 * (np.einsum("bnar->banr", dg) + np.einsum("bran->banr", dg) - dg)
    return np.einsum("bma,banr->bmnr", ginv, low), low


def riemann_from_jet(jet: Jet2Metric) -> tuple[np.ndarray, np.ndarray]:
    ginv = np.linalg.inv(jet.g)
    dg, ddg = jet.dg, jet.ddg
    gam, low = christoffel_from_jet(jet)
    dginv = -np.einsum("Bma,Bsac,Bcn->Bsmn", ginv, dg, ginv)
    dlow = 0.5 * (np.einsum("bsnar->bsanr", ddg) + np.einsum("bsran->bsanr", ddg) - ddg)
    # dgam[b, s, m, n, r] = d_s Gamma^m_{nr}
    dgam = np.einsum("bsma,banr->bsmnr", dginv, low) + np.einsum("bma,bsanr->bsmnr", ginv, dlow)
    riem = (np.einsum("brmns->bmnrs", dgam) - np.einsum("bsmnr->bmnrs", dgam)
            + np.einsum("bmrl,blsn->bmnrs", gam, gam) - np.einsum("bmsl,blrn->bmnrs", gam, gam))
    return gam, riem


def curvature(chart: MetricChart, points) -> CurvatureBundle:
    jet = chart.jet(points)
    jet.check()
    return curvature_from_jet(jet)


def curvature_from_jet(jet: Jet2Metric) -> CurvatureBundle:
    gam, riem = riemann_from_jet(jet)
    ginv = np.linalg.inv(jet.g)
    ricci = np.einsum("bmnms->bns", riem)
    scalar = np.einsum("bns,bns->b", ginv, ricci)
    r_low = np.einsum("bam,bmnrs->banrs", jet.g, riem)
    r_up = np.einsum("Bmnrs,Bna,Brc,Bsd->Bmacd", riem, ginv, ginv, ginv)
    kretsch = np.einsum("bmnrs,bmnrs->b", r_low, r_up)
    return CurvatureBundle(gam, riem, ricci, scalar, kretsch, jet.g)


def first_bianchi(riem: np.ndarray) -> np.ndarray:
    """``R^m_{nrs} + R^m_{rsn} + R^m_{snr}``; vanishes for a Levi-Civita connection."""
    return riem + np.einsum("bmrsn->bmnrs", riem) + np.einsum("bmsnr->bmnrs", riem)


def lie_derivative_coordinate(jet: Jet2Metric, k: int) -> np.ndarray:
    """Lie derivative of g along the coordinate field d_k (equals d_k g)."""
    return jet.dg[:, k]


# ---------------------------------------------------------------------------
# Scalar fields and the Laplacian


def scalar_jet(f: Callable, points: np.ndarray) -> Jet:
    """Evaluate a generic scalar field on seeded coordinate jets."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = f(variables(pts))
    if not isinstance(out, Jet):
        out = Jet.constant(out, pts.shape[0], pts.shape[1])
    return out


def laplacian_from_jets(jet: Jet2Metric, f: Jet) -> np.ndarray:
    """``(1/sqrt h) d_i (sqrt h h^{ij} d_j f)`` from a metric jet and a scalar jet."""
    hinv = np.linalg.inv(jet.g)
    dh = jet.dg
    d_hinv = -np.einsum("Bia,Bkac,Bcj->Bkij", hinv, dh, hinv)
    div_hinv = np.einsum("biij->bj", d_hinv)
    dlog = 0.5 * np.einsum("Bac,Bkac->Bk", hinv, dh)
    return (np.einsum("bij,bij->b", hinv, f.hess)
            + np.einsum("bj,bj->b", div_hinv, f.grad)
            + np.einsum("bi,bij,bj->b", dlog, hinv, f.grad))


def laplace_beltrami(chart3: MetricChart, f: Callable, points) -> np.ndarray:
    """Laplace-Beltrami operator of a generic scalar field on a 3-dimensional chart."""
    if chart3.n != 3:
        raise ValueError("laplace_beltrami expects a 3-dimensional chart")
    pts = chart3._points(points)
    jet = chart3.jet(pts)
    jet.check()
    return laplacian_from_jets(jet, scalar_jet(f, pts))


# ---------------------------------------------------------------------------
# Killing forms


@dataclass(frozen=True)
class KillingForms:
    K: np.ndarray  # metric-dual 1-form (B, n)
    dK: TwoFormValue
    star_dK: TwoFormValue
    omega_plus: TwoFormValue
    omega_minus: TwoFormValue
    twist: np.ndarray  # (B, n)


def killing_forms_from_jet(jet: Jet2Metric, k: int) -> KillingForms:
    K = jet.g[:, :, k]
    dKc = jet.dg[:, :, :, k] - np.einsum("bnm->bmn", jet.dg[:, :, :, k])
    dK = TwoFormValue(dKc)
    sdK = hodge_star(jet, dK)
    twist = hodge(jet, wedge_1_2(K, dKc), 3)
    return KillingForms(K, dK, sdK, dK + sdK, dK - sdK, twist)


def killing_forms(chart: MetricChart, k: int, points) -> KillingForms:
    """``dK``, ``*dK``, ``dK +- *dK`` and the twist ``*(K ^ dK)`` for ``K = d_k``."""
    jet = chart.jet(points)
    jet.check()
    return killing_forms_from_jet(jet, k)
