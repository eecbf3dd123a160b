"""The two-parameter asymptotically flat Chen-Teo family.

Conventions used throughout the package:

* ``d tau ^ dx ^ dy ^ d phi`` is negatively oriented (see ``ORIENTATION``); the
  interior of the orbit space is the rectangle ``x2 < x < x3``, ``x1 < y < x2``.
* The asymptotic end is the corner ``x = y = x2``; the three nuts are
  ``z3 <-> (x2, x1)``, ``z2 <-> (x3, x1)``, ``z1 <-> (x3, x2)``.
* The quartic is monic cubic with the three closed-form roots (``a4 = 0``),
  and ``X = P(x)``, ``Y = P(y)`` are evaluated in factored form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DomainError, ParamError
from .geometry.core import MetricChart
from .geometry.jet import Jet, cos, sin, sqrt, value, variables

GUARD = 1e-9
# dtau ^ dx ^ dy ^ dphi is negatively oriented.  This is the orientation in which the
# printed densities sqrt(det g) = kappa H/(x-y)^5 and sqrt(det h) = kappa F/(x-y)^6 are
# positive and in which alpha_+ generates a self-dual closed form.
ORIENTATION = -1
XI_MIN = 0.5
XI_MAX = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class ChenTeoParams:
    xi: float
    kappa: float = 1.0

    def __post_init__(self):
        xi, kappa = float(self.xi), float(self.kappa)
        if not (XI_MIN < xi < XI_MAX):
            raise ParamError(f"xi={xi} violates 1/2 < xi < 1/sqrt(2)")
        if not (kappa > 0.0):
            raise ParamError(f"kappa={kappa} violates kappa > 0")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "kappa", kappa)


@dataclass(frozen=True)
class DerivedConstants:
    params: ChenTeoParams
    nu: float
    a: tuple[float, float, float, float, float]
    roots: tuple[float, float, float]
    z: tuple[float, float, float]
    k: tuple[float, float, float, float]
    b: tuple[float, float, float, float]
    rod_vectors: tuple[tuple[int, int], ...]
    freqs: dict  # nut index (1..3) -> (c_R, c_L) for K = d_tau
    n_coef: tuple[float, float, float]
    f_coef: tuple[float, float, float]
    angle_map: np.ndarray = field(repr=False)  # (tau, phi) = angle_map @ (phi1, phi2)
    b_diff: dict = field(default_factory=dict, repr=False)  # (I, J) -> b_I - b_J, factored

    def db(self, i: int, j: int) -> float:
        """b_i - b_j without the cancellation of subtracting nearly equal b's."""
        if i == j:
            return 0.0
        key = ((i - 1) % 3 + 1, (j - 1) % 3 + 1)  # b_4 = b_1
        if key[0] == key[1]:
            return 0.0
        if key in self.b_diff:
            return self.b_diff[key]
        return -self.b_diff[(key[1], key[0])]

    @property
    def xi(self) -> float:
        return self.params.xi

    @property
    def kappa(self) -> float:
        return self.params.kappa

    @property
    def x1(self) -> float:
        return self.roots[0]

    @property
    def x2(self) -> float:
        return self.roots[1]

    @property
    def x3(self) -> float:
        return self.roots[2]

    @property
    def lambda_inf(self) -> float:
        return 1.0 / (1.0 - self.nu**2)

    @property
    def torus_jacobian(self) -> float:
        """|d(tau, phi)/d(phi1, phi2)|: the torus has (tau, phi)-area (2 pi)^2 times this."""
        return abs(float(np.linalg.det(self.angle_map)))

    def ell(self, rod: int) -> np.ndarray:
        """Normalised Killing field degenerating on rod ``rod`` in the (d_tau, d_phi) basis."""
        k, b = self.k[rod - 1], self.b[rod - 1]
        return np.array([b / k, 1.0 / k])

    def tau_in_ell_basis(self) -> np.ndarray:
        """Coefficients (c1, c2) with d_tau = c1 l1 + c2 l2."""
        basis = np.column_stack([self.ell(1), self.ell(2)])
        return np.linalg.solve(basis, np.array([1.0, 0.0]))

    def corner(self, i: int) -> tuple[float, float]:
        """(x, y) of the nut z_i."""
        x1, x2, x3 = self.roots
        return {1: (x3, x2), 2: (x3, x1), 3: (x2, x1)}[i]


def _closed_form_roots(xi: float) -> tuple[float, float, float]:
    return (-4.0 * xi**3 * (1.0 - xi), -xi * (1.0 - 2.0 * xi + 2.0 * xi**2), 1.0 - 2.0 * xi)


def closed_form_frequencies(xi: float, kappa: float) -> dict:
    sk = math.sqrt(kappa)
    c3r = -((1.0 - xi) ** 2) / (2.0 * sk * xi**2)
    c3l = (1.0 - 2.0 * xi + 2.0 * xi**2) ** 2 / (8.0 * sk * xi**4)
    c2r = (1.0 - 2.0 * xi) ** 2 / (8.0 * sk * xi**4)
    return {3: (c3r, c3l), 2: (c2r, -c3r), 1: (-c3l, c2r)}


def derive_constants(p: ChenTeoParams) -> DerivedConstants:
    xi, kappa = p.xi, p.kappa
    sk = math.sqrt(kappa)
    s = 1.0 - 2.0 * xi + 2.0 * xi**2
    nu = -2.0 * xi**2
    a4, a3 = 0.0, 1.0
    a2 = -1.0 + 3.0 * xi - 2.0 * xi**2 + 6.0 * xi**3 - 4.0 * xi**4
    a1 = -(xi - 4.0 * xi**2 + 10.0 * xi**3 - 20.0 * xi**4 + 20.0 * xi**5 - 16.0 * xi**6 + 8.0 * xi**7)
    a0 = -4.0 * (1.0 - xi) * xi**4 * (1.0 - 2.0 * xi) * s
    roots = _closed_form_roots(xi)
    if not (roots[0] < roots[1] < roots[2]) or roots[1] >= 0.0:
        raise ParamError(f"root ordering x1 < x2 < x3, x2 < 0 fails at xi={xi}")

    k1 = (1.0 - xi) * (1.0 - 2.0 * xi) * (1.0 - 2.0 * xi**2) ** 2 / (2.0 * sk * s)
    k2 = (1.0 - 2.0 * xi) * (1.0 - 2.0 * xi**2) ** 2 * s / (8.0 * sk * (1.0 - xi) * xi**2)
    k3 = (1.0 - xi) * (1.0 - 2.0 * xi**2) ** 2 * s / (2.0 * sk * (1.0 - 2.0 * xi))
    b1 = 4.0 * xi**3 * (-1.0 + 4.0 * xi * (1.0 - xi) ** 2 * (1.0 + 2.0 * xi**2)) / (1.0 - 2.0 * xi * (1.0 - xi))
    b2 = xi**2 * (1.0 - 2.0 * xi * (2.0 - 3.0 * xi + 10.0 * xi**2 - 16.0 * xi**3 + 8.0 * xi**4)) / (1.0 - xi)
    b3 = 4.0 * xi**3 * (1.0 - 3.0 * xi + 7.0 * xi**2 - 12.0 * xi**3 + 6.0 * xi**4) / (2.0 * xi - 1.0)

    w = (1.0 - 2.0 * xi**2) ** 2
    n_coef = (
        -(2.0 * xi - 1.0) / ((1.0 - xi) * w * s),
        -s / ((1.0 - xi) * (2.0 * xi - 1.0) * w),
        -4.0 * (1.0 - xi) * xi**2 / ((2.0 * xi - 1.0) * w * s),
    )
    f_coef = (
        1.0 / ((1.0 - xi) * w * s),
        # the printed f_2 lacks the factor 1/xi; fitted against the forward map
        1.0 / (xi * (1.0 - xi) * (2.0 * xi - 1.0) * w),
        1.0 / (xi * (2.0 * xi - 1.0) * w * s),
    )
    angle_map = np.array([[b1 / k1, b2 / k2], [1.0 / k1, 1.0 / k2]])
    b_diff = {
        (1, 2): xi**2 * (2.0 * xi - 1.0) * w / ((1.0 - xi) * s),
        (1, 3): -4.0 * xi**4 * (1.0 - xi) * w / ((2.0 * xi - 1.0) * s),
        (2, 3): -xi**2 * w * s / ((1.0 - xi) * (2.0 * xi - 1.0)),
    }

    c = DerivedConstants(
        params=p, nu=nu, a=(a0, a1, a2, a3, a4), roots=roots, z=tuple(r / 2.0 for r in roots),
        k=(k1, k2, k3, k1), b=(b1, b2, b3, b1), rod_vectors=(), freqs={},
        n_coef=n_coef, f_coef=f_coef, angle_map=angle_map, b_diff=b_diff,
    )
    rods = _rod_vectors(c)
    object.__setattr__(c, "rod_vectors", rods)
    object.__setattr__(c, "freqs", _frequencies(c))
    if min(f_coef) <= 0.0:
        raise ParamError("Weyl inversion denominators f_i must be positive")
    return c


def _rod_vectors(c: DerivedConstants) -> tuple[tuple[int, int], ...]:
    basis = np.column_stack([c.ell(1), c.ell(2)])
    out = []
    for rod in range(1, 5):
        v = np.linalg.solve(basis, c.ell(rod))
        iv = np.rint(v)
        if np.max(np.abs(v - iv)) > 1e-9:
            raise ParamError(f"rod vector of rod {rod} is not integral: {v}")
        out.append((int(iv[0]), int(iv[1])))
    return tuple(out)


# (d_phiR, d_phiL) at each nut in the (l1, l2) basis, with d phiR ^ d phiL
# positively oriented relative to d phi1 ^ d phi2.
NUT_FRAMES = {
    3: ((1, 0), (0, 1)),
    2: ((0, 1), (-1, 1)),
    1: ((1, -1), (1, 0)),
}


def _frequencies(c: DerivedConstants) -> dict:
    tau = c.tau_in_ell_basis()
    out = {}
    for i, (r, l) in NUT_FRAMES.items():
        m = np.array([[r[0], l[0]], [r[1], l[1]]], dtype=float)
        cr, cl = np.linalg.solve(m, tau)
        out[i] = (float(cr), float(cl))
    return out


# ---------------------------------------------------------------------------
# Polynomials and metric functions (generic arithmetic)


def quartic(c: DerivedConstants, u):
    x1, x2, x3 = c.roots
    return (u - x1) * (u - x2) * (u - x3)


def quartic_expanded(c: DerivedConstants, u):
    a0, a1, a2, a3, a4 = c.a
    return a0 + a1 * u + a2 * u**2 + a3 * u**3 + a4 * u**4


def F_poly(c, x, y, X=None, Y=None):
    X = quartic(c, x) if X is None else X
    Y = quartic(c, y) if Y is None else Y
    return y * y * X - x * x * Y


def H_poly(c, x, y):
    a0, a1, a2, a3, a4 = c.a
    nu = c.nu
    return (nu * x + y) * ((nu * x - y) * (a1 - a3 * x * y) - 2.0 * (1.0 - nu) * (a0 - a4 * x * x * y * y))


def G_poly(c, x, y, X=None, Y=None):
    a0, a1, a2, a3, a4 = c.a
    nu = c.nu
    X = quartic(c, x) if X is None else X
    Y = quartic(c, y) if Y is None else Y
    return ((nu**2 * a0 + 2.0 * nu * a3 * y**3 + 2.0 * nu * a4 * y**4 - a4 * y**4) * X
            + (a0 - 2.0 * nu * a0 - 2.0 * nu * a1 * x - nu**2 * a4 * x**4) * Y)


def lam(c, x, y):
    """|d_tau|^2 = F / ((x - y) H)."""
    return F_poly(c, x, y) / ((x - y) * H_poly(c, x, y))


def _lam_zeta_parts(c, x, y):
    a1, a3 = c.a[1], c.a[3]
    nu = c.nu
    first = (x - y) * (nu * x + y) * (a1 - a3 * x * y) / (2.0 * (nu - 1.0) * H_poly(c, x, y))
    second = (x + y) / (2.0 * (nu - 1.0) * (nu * x + y))
    return first, second


def lam_split(c, x, y):
    """|d_tau|^2 from the split closed form (equal to :func:`lam`)."""
    first, second = _lam_zeta_parts(c, x, y)
    return first - second


def zeta(c, x, y):
    first, second = _lam_zeta_parts(c, x, y)
    return -first - second


def omega_phi(c, x, y):
    """Coefficient G/F of d phi in the connection 1-form."""
    return G_poly(c, x, y) / F_poly(c, x, y)


def rho_weyl(c, x, y):
    return sqrt(-quartic(c, x) * quartic(c, y)) / (x - y) ** 2


def z_weyl(c, x, y):
    a0, a1, a2, a3, a4 = c.a
    xy = x * y
    return (2.0 * (a0 + a2 * xy + a4 * xy * xy) + (x + y) * (a1 + a3 * xy)) / (2.0 * (x - y) ** 2)


def metric_components(c: DerivedConstants, x, y, shear=0.0) -> list[list]:
    """Components of g in (tau, x, y, phi) as generic-arithmetic expressions of (x, y).

    With ``shear = w0`` the components refer to the sheared angle
    ``tau' = tau + w0 phi`` (``phi`` unchanged), so that ``d_tau`` is the same
    vector field and the ``d tau' d phi`` cross term is ``lambda (G/F - w0)``.
    """
    kappa = c.kappa
    X, Y = quartic(c, x), quartic(c, y)
    F = F_poly(c, x, y, X, Y)
    H = H_poly(c, x, y)
    G = G_poly(c, x, y, X, Y)
    d = x - y
    lam_ = F / (d * H)
    w = G / F if np.all(np.asarray(shear) == 0.0) else (G - shear * F) / F
    conf = kappa * H / d**3
    gtt = lam_
    gtp = lam_ * w
    gpp = lam_ * w * w - H * X * Y / (d**3 * F)
    gxx = conf / X
    gyy = -conf / Y
    return [[gtt, 0.0, 0.0, gtp], [0.0, gxx, 0.0, 0.0], [0.0, 0.0, gyy, 0.0], [gtp, 0.0, 0.0, gpp]]


def orbit_metric_components(c: DerivedConstants, x, y) -> list[list]:
    """Components of the orbit-space metric h in (x, y, phi)."""
    kappa = c.kappa
    X, Y = quartic(c, x), quartic(c, y)
    F = F_poly(c, x, y, X, Y)
    d4 = (x - y) ** 4
    return [[kappa * F / (d4 * X), 0.0, 0.0], [0.0, -kappa * F / (d4 * Y), 0.0], [0.0, 0.0, -X * Y / d4]]


# ---------------------------------------------------------------------------
# Domain handling


def in_rectangle(c: DerivedConstants, x, y, guard: float = GUARD) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x1, x2, x3 = c.roots
    return ((x > x2 + guard) & (x < x3 - guard) & (y > x1 + guard) & (y < x2 - guard)
            & (np.abs(x - y) >= guard))


def require_rectangle(c: DerivedConstants, x, y, guard: float = GUARD) -> None:
    ok = in_rectangle(c, value(x), value(y), guard)
    if not np.all(ok):
        xs = np.atleast_1d(value(x))[~np.atleast_1d(ok)]
        ys = np.atleast_1d(value(y))[~np.atleast_1d(ok)]
        raise DomainError(f"(x, y) = ({xs[0]}, {ys[0]}) outside the open rectangle "
                          f"({c.x2}, {c.x3}) x ({c.x1}, {c.x2}) with guard band {guard}")


class ChenTeoChart(MetricChart):
    """The metric on the (tau, x, y, phi) chart."""

    n = 4
    chart_id = "(tau,x,y,phi)"
    orientation = ORIENTATION

    def __init__(self, params: ChenTeoParams | DerivedConstants):
        self.c = params if isinstance(params, DerivedConstants) else derive_constants(params)

    def components(self, coords):
        _, x, y, _ = coords
        return metric_components(self.c, x, y)

    def in_domain(self, points):
        return in_rectangle(self.c, points[:, 1], points[:, 2])


class OrbitChart(MetricChart):
    """The orbit metric h on (x, y, phi), obtained by reducing along d_tau."""

    n = 3
    chart_id = "(x,y,phi)"
    orientation = 1

    def __init__(self, params: ChenTeoParams | DerivedConstants):
        self.c = params if isinstance(params, DerivedConstants) else derive_constants(params)

    def components(self, coords):
        x, y, _ = coords
        return orbit_metric_components(self.c, x, y)

    def in_domain(self, points):
        return in_rectangle(self.c, points[:, 0], points[:, 1])


def metric_at(p: ChenTeoParams | DerivedConstants, points):
    """Jet of g at points ``(tau, x, y, phi)`` (shape ``(B, 4)``)."""
    return ChenTeoChart(p).jet(points)


# ---------------------------------------------------------------------------
# Point-adapted charts
#
# Near most of the rectangle the (tau, phi) block of g is close to singular
# (g_tt g_pp - g_tp^2 = rho^2 is small against g_tp^2), and curvature assembled
# from those components loses up to ten digits.  Each point is therefore also
# evaluated in the chart tau' = tau + w0 phi with w0 = G/F at that point, where
# the block is diagonal; tensors are mapped back with the constant Jacobian.


class AdaptedChart(MetricChart):
    """(tau', x, y, phi) with tau' = tau + w0 phi, one shear per point of a batch."""

    n = 4
    chart_id = "(tau',x,y,phi)-adapted"
    orientation = ORIENTATION

    def __init__(self, c: DerivedConstants, shear):
        self.c = c
        self.shear = np.asarray(shear, dtype=float)

    def components(self, coords):
        _, x, y, _ = coords
        return metric_components(self.c, x, y, self.shear)

    def in_domain(self, points):
        return in_rectangle(self.c, points[:, 1], points[:, 2])


def shear_matrix(w0) -> np.ndarray:
    """Batch of L with x' = L x, i.e. L[tau, phi] = w0."""
    w0 = np.atleast_1d(np.asarray(w0, dtype=float))
    L = np.broadcast_to(np.eye(4), (w0.shape[0], 4, 4)).copy()
    L[:, 0, 3] = w0
    return L


def adapted_jet(c: DerivedConstants, points):
    """Metric jet in the point-adapted chart and the Jacobian L = d x'/d x."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    require_rectangle(c, pts[:, 1], pts[:, 2])
    w0 = omega_phi(c, pts[:, 1], pts[:, 2])
    jet = AdaptedChart(c, w0).jet(pts)
    jet.check()
    return jet, shear_matrix(w0)


def to_original_covariant(L: np.ndarray, t: np.ndarray, nlow: int) -> np.ndarray:
    """Pull back the first ``nlow`` (covariant) indices of a batch tensor with L."""
    letters = "acdefg"
    out = t
    for k in range(nlow):
        idx = letters[: t.ndim - 1]
        src = idx[:k] + "z" + idx[k + 1:]
        out = np.einsum(f"Bz{idx[k]},B{src}->B{idx}", L, out)
    return out


def curvature_at(p, points):
    """Curvature bundle at points of (tau, x, y, phi), components in that chart."""
    from .geometry.core import CurvatureBundle, curvature_from_jet

    c = p if isinstance(p, DerivedConstants) else derive_constants(p)
    jet, L = adapted_jet(c, points)
    cb = curvature_from_jet(jet)
    Linv = np.linalg.inv(L)
    # Gamma^m_{nr}, R^m_{nrs}: first index contravariant
    gam = np.einsum("Bma,Banr->Bmnr", Linv, to_original_covariant_tail(L, cb.christoffel, 2))
    riem = np.einsum("Bma,Banrs->Bmnrs", Linv, to_original_covariant_tail(L, cb.riemann, 3))
    ricci = to_original_covariant(L, cb.ricci, 2)
    g = to_original_covariant(L, jet.g, 2)
    return CurvatureBundle(gam, riem, ricci, cb.scalar, cb.kretschmann, g)


def to_original_covariant_tail(L: np.ndarray, t: np.ndarray, nlow: int) -> np.ndarray:
    """Pull back the last ``nlow`` indices of a batch tensor with L."""
    lead = t.ndim - 1 - nlow
    letters = "acdefg"[: t.ndim - 1]
    out = t
    for k in range(lead, lead + nlow):
        src = letters[:k] + "z" + letters[k + 1:]
        out = np.einsum(f"Bz{letters[k]},B{src}->B{letters}", L, out)
    return out


def killing_forms_at(p, points, k: int = 0):
    """Killing forms of d_tau (k=0) or d_phi (k=3), components in (tau, x, y, phi)."""
    from .geometry.core import KillingForms, TwoFormValue, killing_forms_from_jet

    c = p if isinstance(p, DerivedConstants) else derive_constants(p)
    jet, L = adapted_jet(c, points)
    if k == 3:
        # d_phi = d_phi' + w0 d_tau' is not a coordinate field of the adapted chart
        return killing_forms_from_jet(ChenTeoChart(c).jet(points), 3)
    kf = killing_forms_from_jet(jet, k)
    back = lambda w: TwoFormValue(to_original_covariant(L, w.components, 2))
    return KillingForms(to_original_covariant(L, kf.K, 1), back(kf.dK), back(kf.star_dK),
                        back(kf.omega_plus), back(kf.omega_minus), to_original_covariant(L, kf.twist, 1))


def sqrt_det_closed_form(c: DerivedConstants, x, y):
    return c.kappa * H_poly(c, x, y) / (x - y) ** 5


# ---------------------------------------------------------------------------
# Reduced fields


@dataclass(frozen=True)
class ReducedFields:
    lam: np.ndarray
    zeta: np.ndarray
    omega_phi: np.ndarray
    rho: np.ndarray
    z: np.ndarray


def reduced_fields(p: ChenTeoParams | DerivedConstants, x, y) -> ReducedFields:
    c = p if isinstance(p, DerivedConstants) else derive_constants(p)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    require_rectangle(c, x, y)
    return ReducedFields(lam(c, x, y), zeta(c, x, y), omega_phi(c, x, y), rho_weyl(c, x, y), z_weyl(c, x, y))


def field_jet(c: DerivedConstants, fn, x, y, ndim: int = 2) -> Jet:
    """Jet of a scalar field ``fn(c, x, y)`` in the first ``ndim`` coordinates (x, y, [phi])."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    require_rectangle(c, x, y)
    cols = [x, y] + [np.zeros_like(x)] * (ndim - 2)
    v = variables(np.column_stack(cols))
    return fn(c, v[0], v[1])


# ---------------------------------------------------------------------------
# Weyl coordinates


def weyl_forward(c: DerivedConstants, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x1, x2, x3 = c.roots
    tol = 1e-12
    if np.any((x < x2 - tol) | (x > x3 + tol) | (y < x1 - tol) | (y > x2 + tol)) or np.any(x - y <= 0):
        raise DomainError("(x, y) outside the closed rectangle (minus the asymptotic corner)")
    # with the closed-form roots X <= 0 <= Y on the rectangle; only the product matters
    XY = np.clip(quartic(c, x) * quartic(c, y), None, 0.0)
    return np.sqrt(-XY) / (x - y) ** 2, z_weyl(c, x, y)


def weyl_inverse(c: DerivedConstants, rho, z):
    rho = np.asarray(rho, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(rho < 0):
        raise DomainError("rho must be non-negative")
    z1, z2, z3 = c.z
    r1 = np.sqrt(rho**2 + (z - z1) ** 2)
    r2 = np.sqrt(rho**2 + (z - z2) ** 2)
    r3 = np.sqrt(rho**2 + (z - z3) ** 2)
    n1, n2, n3 = c.n_coef
    f1, f2, f3 = c.f_coef
    num = 2.0 * (n1 * r3 + n2 * r2 + n3 * r1)
    den = 2.0 * (f1 * r3 + f2 * r2 + f3 * r1)
    x, y = (num + 1.0) / den, (num - 1.0) / den
    x1, x2, x3 = c.roots
    tol = 1e-9
    if np.any((x < x2 - tol) | (x > x3 + tol) | (y < x1 - tol) | (y > x2 + tol)):
        raise DomainError("inverse image lies outside the closed rectangle")
    return x, y


def weyl_constraint(c: DerivedConstants, rho, z):
    z1, z2, z3 = c.z
    R1s = rho**2 + (z - z1) ** 2
    R2s = rho**2 + (z - z2) ** 2
    R3s = rho**2 + (z - z3) ** 2
    return (z1 - z2) * R3s + (z3 - z1) * R2s + (z2 - z3) * R1s + (z1 - z2) * (z3 - z1) * (z2 - z3)


def weyl_transform(p, direction: str, point):
    """``direction`` is ``"XYtoRhoZ"`` or ``"RhoZtoXY"``; ``point`` is a pair of arrays."""
    c = p if isinstance(p, DerivedConstants) else derive_constants(p)
    a, b = point
    if direction == "XYtoRhoZ":
        return weyl_forward(c, a, b)
    if direction == "RhoZtoXY":
        return weyl_inverse(c, a, b)
    raise ValueError(f"unknown direction {direction!r}")


# ---------------------------------------------------------------------------
# Asymptotic chart


def asymptotic_scale(c: DerivedConstants) -> float:
    """The (negative) length x2 sqrt(kappa (1 - nu^2)) in the asymptotic substitution."""
    return c.x2 * math.sqrt(c.kappa * (1.0 - c.nu**2))


def asymptotic_xy(c: DerivedConstants, r, theta):
    """(x, y) as generic-arithmetic functions of (r, theta)."""
    s = asymptotic_scale(c)
    ch = cos(theta * 0.5)
    sh = sin(theta * 0.5)
    return c.x2 - s / r * ch * ch, c.x2 + s / r * sh * sh


def asymptotic_point(p, r, theta):
    c = p if isinstance(p, DerivedConstants) else derive_constants(p)
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any((theta <= 0) | (theta >= math.pi)):
        raise DomainError("theta must lie in (0, pi)")
    x, y = asymptotic_xy(c, r, theta)
    if not np.all(in_rectangle(c, x, y, guard=0.0)):
        raise DomainError("r too small: (x, y) leaves the rectangle")
    return x, y


class AsymptoticChart(MetricChart):
    """The Chen-Teo metric pulled back to (tau, r, theta, phi)."""

    n = 4
    chart_id = "(tau,r,theta,phi)-asymptotic"

    def __init__(self, params):
        self.c = params if isinstance(params, DerivedConstants) else derive_constants(params)
        # d(x, y)/d(r, theta) has positive determinant, so the orientation is inherited
        self.orientation = ORIENTATION

    def components(self, coords):
        _, r, th, _ = coords
        c = self.c
        x, y = asymptotic_xy(c, r, th)
        s = asymptotic_scale(c)
        ch, sh = cos(th * 0.5), sin(th * 0.5)
        # Jacobian of (x, y) with respect to (r, theta)
        xr = s / (r * r) * ch * ch
        xt = s / r * ch * sh
        yr = -s / (r * r) * sh * sh
        yt = s / r * sh * ch
        g = metric_components(c, x, y)
        gxx, gyy = g[1][1], g[2][2]
        grr = gxx * xr * xr + gyy * yr * yr
        grt = gxx * xr * xt + gyy * yr * yt
        gtt_ = gxx * xt * xt + gyy * yt * yt
        return [[g[0][0], 0.0, 0.0, g[0][3]], [0.0, grr, grt, 0.0], [0.0, grt, gtt_, 0.0],
                [g[3][0], 0.0, 0.0, g[3][3]]]

    def in_domain(self, points):
        r, th = points[:, 1], points[:, 2]
        ok = (th > 0) & (th < math.pi) & (r > 0)
        x, y = asymptotic_xy(self.c, r[ok], th[ok])
        res = np.zeros(points.shape[0], dtype=bool)
        res[ok] = in_rectangle(self.c, x, y, guard=0.0)
        return res


def grr_coefficient_closed_form(c: DerivedConstants) -> float:
    xi, kappa = c.xi, c.kappa
    return kappa * (1.0 + 2.0 * xi**2) ** 2 / math.sqrt(kappa * (1.0 - 4.0 * xi**4))


def fit_grr_coefficient(c: DerivedConstants, radii=(1e3, 1e4, 1e5), theta: float = 1.0) -> float:
    """Least-squares fit of g_rr - 1 = a/r + b/r^2 over the given radii (in units of sqrt(kappa))."""
    radii = np.asarray(radii, dtype=float) * math.sqrt(c.kappa)
    chart = AsymptoticChart(c)
    pts = np.column_stack([np.zeros_like(radii), radii, np.full_like(radii, theta), np.zeros_like(radii)])
    grr = chart.metric(pts)[:, 1, 1]
    A = np.column_stack([1.0 / radii, 1.0 / radii**2])
    coef, *_ = np.linalg.lstsq(A, grr - 1.0, rcond=None)
    return float(coef[0])


# ---------------------------------------------------------------------------
# Rod structure


@dataclass(frozen=True)
class Rod:
    index: int
    z_interval: tuple[float, float]
    fixed: str  # description of the bolt in (x, y)
    vector: tuple[int, int]
    ell: tuple[float, float]  # (b/k, 1/k) in (d_tau, d_phi)


@dataclass(frozen=True)
class RodStructure:
    rods: tuple[Rod, ...]
    normalization: tuple[float, ...]
    adjacent_determinants: tuple[int, ...]
    conical_residual: float
    k1_over_k2: float
    k1_over_k2_rational: Fraction | None
    k1_over_k2_integer: bool


def ell_norm2(c: DerivedConstants, rod: int, x, y):
    bk, ik = c.ell(rod)
    g = metric_components(c, x, y)
    return bk * bk * g[0][0] + 2.0 * bk * ik * g[0][3] + ik * ik * g[3][3]


def _rod_probe(c: DerivedConstants, rod: int, delta: np.ndarray):
    """Points at distance ``delta`` (in units of the shorter rectangle side) from rod ``rod``."""
    x1, x2, x3 = c.roots
    xm, ym = 0.5 * (x2 + x3), 0.5 * (x1 + x2)
    h = delta * min(x3 - x2, x2 - x1)
    dx, dy = h, h
    one = np.ones_like(delta)
    return {
        1: (x2 + dx, ym * one),
        2: (xm * one, x1 + dy),
        3: (x3 - dx, ym * one),
        4: (xm * one, x2 - dy),
    }[rod]


def rod_normalization(c: DerivedConstants, rod: int, deltas=(1e-2, 5e-3, 2.5e-3, 1.25e-3)) -> float:
    """Extrapolated |d|l|^2|^2 / (4 |l|^2) on rod ``rod``.

    The quantity is a scalar, so the limit rho -> 0 is taken in (x, y) directly,
    approaching the rod along a coordinate line; rho^2 is linear in the offset there.
    """
    delta = np.asarray(deltas, dtype=float)
    x, y = _rod_probe(c, rod, delta)
    v = variables(np.column_stack([x, y]))
    n2 = ell_norm2(c, rod, v[0], v[1])
    g = metric_components(c, x, y)
    grad2 = n2.grad[:, 0] ** 2 / g[1][1] + n2.grad[:, 1] ** 2 / g[2][2]
    vals = grad2 / (4.0 * n2.val)
    A = np.vander(delta, len(delta), increasing=True)
    return float(np.linalg.solve(A, vals)[0])


def rod_structure(p, deltas=(1e-2, 5e-3, 2.5e-3, 1.25e-3)) -> RodStructure:
    c = p if isinstance(p, DerivedConstants) else derive_constants(p)
    z1, z2, z3 = c.z
    x1, x2, x3 = c.roots
    intervals = ((z3, math.inf), (z2, z3), (z1, z2), (-math.inf, z1))
    fixed = ("x = x2, y in (x1, x2)", "y = x1, x in (x2, x3)",
             "x = x3, y in (x1, x2)", "y = x2, x in (x2, x3)")
    rods = tuple(Rod(i + 1, intervals[i], fixed[i], c.rod_vectors[i], tuple(c.ell(i + 1)))
                 for i in range(4))
    norms = tuple(rod_normalization(c, i, deltas) for i in range(1, 5))
    dets = []
    for i in range(3):
        v, w = c.rod_vectors[i], c.rod_vectors[i + 1]
        dets.append(v[0] * w[1] - v[1] * w[0])
    # relative: the l's grow like 1/k as xi -> 1/sqrt(2)
    conical = float(np.max(np.abs(c.ell(1) - c.ell(2) - c.ell(3))) / np.max(np.abs(c.ell(1))))
    ratio = c.k[0] / c.k[1]
    frac = Fraction(ratio).limit_denominator(1000)
    rational = frac if abs(float(frac) - ratio) < 1e-12 else None
    return RodStructure(rods, norms, tuple(dets), conical, ratio, rational,
                        abs(ratio - round(ratio)) < 1e-12)


# ---------------------------------------------------------------------------
# Map to homogeneous coordinates on CP^2


def cp2_map(p, x, y, phi1, phi2):
    """(x, y, phi1, phi2) -> homogeneous triple [sqrt(1-u-v) : e^{i phi1} sqrt(u) : e^{i phi2} sqrt(v)]."""
    c = p if isinstance(p, DerivedConstants) else derive_constants(p)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x1, x2, x3 = c.roots
    tol = 1e-12
    if np.any((x < x2 - tol) | (x > x3 + tol) | (y < x1 - tol) | (y > x2 + tol)):
        raise DomainError("(x, y) outside the closed rectangle")
    xt = (x2 - y) / (x2 - x1)
    yt = (x - x2) / (x3 - x2)
    u, v = cp2_uv(xt, yt)
    w = np.clip(1.0 - u - v, 0.0, None)
    return (np.sqrt(w) + 0j, np.exp(1j * np.asarray(phi1)) * np.sqrt(u), np.exp(1j * np.asarray(phi2)) * np.sqrt(v))


def cp2_uv(xt, yt):
    u = (1.0 - xt**2) * (1.0 + yt**2) / 2.0
    v = (1.0 + xt**2) * (1.0 - yt**2) / 2.0
    return u, v
