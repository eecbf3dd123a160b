"""Scalar potentials, harmonic 2-forms, energy densities and gauge potentials.

Two sign conventions meet here:

* ``omega_eval`` builds the form generated by a potential directly,
  ``w = theta ^ da +- *(theta ^ da)`` with ``theta = d tau + Omega``, so that
  ``i_K w = da``.
* The named forms used for periods and bases follow the Killing-form
  normalisation ``w_+- = dK +- *dK``.  Since ``dK +- *dK = -(theta ^ d alpha_+- +- *(...))``,
  a named form is ``-omega_eval``; the same sign is used for ``omega_2``.
  ``NAMED_SIGN`` records this.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .chen_teo import (
    DerivedConstants,
    OrbitChart,
    adapted_jet,
    asymptotic_xy,
    derive_constants,
    lam,
    omega_phi,
    quartic,
    require_rectangle,
    to_original_covariant,
    zeta,
)
from .errors import GaugeChartError
from .geometry.core import TwoFormValue, hodge, laplacian_from_jets, two_form_norm2, wedge_1_1
from .geometry.jet import Jet, variables

NAMED_SIGN = -1.0


class PotentialKind(enum.Enum):
    ALPHA_PLUS = "alpha_plus"
    ALPHA_MINUS = "alpha_minus"
    ALPHA_TWO = "alpha_two"

    @property
    def duality(self) -> int:
        """+1 for self-dual, -1 for anti-self-dual."""
        return 1 if self is PotentialKind.ALPHA_PLUS else -1

    @classmethod
    def parse(cls, name) -> "PotentialKind":
        if isinstance(name, cls):
            return name
        aliases = {"+": cls.ALPHA_PLUS, "plus": cls.ALPHA_PLUS, "-": cls.ALPHA_MINUS,
                   "minus": cls.ALPHA_MINUS, "2": cls.ALPHA_TWO, "two": cls.ALPHA_TWO}
        key = str(name).lower()
        if key in aliases:
            return aliases[key]
        return cls(key)


def _consts(p) -> DerivedConstants:
    return p if isinstance(p, DerivedConstants) else derive_constants(p)


# ---------------------------------------------------------------------------
# Potentials (generic arithmetic)


def alpha_plus(c: DerivedConstants, x, y):
    nu = c.nu
    return -(x + y) / ((nu - 1.0) * (nu * x + y))


def alpha_minus(c: DerivedConstants, x, y):
    from .chen_teo import H_poly

    a1, a3 = c.a[1], c.a[3]
    nu = c.nu
    return (x - y) * (nu * x + y) * (a1 - a3 * x * y) / ((nu - 1.0) * H_poly(c, x, y))


def alpha_two(c: DerivedConstants, x, y):
    from .chen_teo import H_poly

    nu = c.nu
    return (x - y) * (nu * x + y) / ((nu - 1.0) * H_poly(c, x, y))


ALPHA = {
    PotentialKind.ALPHA_PLUS: alpha_plus,
    PotentialKind.ALPHA_MINUS: alpha_minus,
    PotentialKind.ALPHA_TWO: alpha_two,
}


def alpha_fn(kind):
    return ALPHA[PotentialKind.parse(kind)]


def alpha_eval(kind, p, x, y, jet: bool = False):
    """Potential of ``kind`` at (x, y); with ``jet=True`` returns a Jet in (x, y)."""
    c = _consts(p)
    f = alpha_fn(kind)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    require_rectangle(c, x, y)
    if jet:
        xv, yv = variables(np.column_stack([x, y]))
        return f(c, xv, yv)
    return f(c, x, y)


# ---------------------------------------------------------------------------
# Corner values


@dataclass(frozen=True)
class CornerValues:
    """alpha(z_1), alpha(z_2), alpha(z_3) and alpha(infinity) for each potential."""

    values: dict  # kind -> (a(z1), a(z2), a(z3))
    at_infinity: dict  # kind -> a(inf)

    def __getitem__(self, kind):
        return self.values[PotentialKind.parse(kind)]


def corner_values(p) -> CornerValues:
    c = _consts(p)
    xi = c.xi
    d = 1.0 - 4.0 * xi**4
    s = 1.0 - 2.0 * xi + 2.0 * xi**2
    ap = (
        -(1.0 - 3.0 * xi + 2.0 * xi**2 - 2.0 * xi**3) / (xi * d),
        -(1.0 - 2.0 * xi - 4.0 * xi**3 + 4.0 * xi**4) / (2.0 * xi**2 * d),
        (1.0 - 2.0 * xi + 6.0 * xi**2 - 4.0 * xi**3) / (2.0 * xi**2 * d),
    )
    a2 = (
        -1.0 / (4.0 * xi**4 * (1.0 - xi) * d),
        -1.0 / (2.0 * xi**3 * d * s),
        1.0 / (2.0 * xi**3 * (1.0 - 2.0 * xi) * d),
    )
    values = {
        PotentialKind.ALPHA_PLUS: ap,
        PotentialKind.ALPHA_MINUS: tuple(-v for v in ap),
        PotentialKind.ALPHA_TWO: a2,
    }
    lam_inf = c.lambda_inf
    at_inf = {
        PotentialKind.ALPHA_PLUS: 2.0 * lam_inf,
        PotentialKind.ALPHA_MINUS: 0.0,
        PotentialKind.ALPHA_TWO: 0.0,
    }
    return CornerValues(values, at_inf)


def corner_limit(p, fn, corner: int, eps: float = 1e-7) -> float:
    """Numerical limit of ``fn(c, x, y)`` at nut ``corner`` along the rectangle diagonal."""
    c = _consts(p)
    x1, x2, x3 = c.roots
    xc, yc = c.corner(corner)
    xs = xc - eps * (x3 - x2) * np.sign(xc - 0.5 * (x2 + x3))
    ys = yc - eps * (x2 - x1) * np.sign(yc - 0.5 * (x1 + x2))
    return float(fn(c, np.array([xs]), np.array([ys]))[0])


# ---------------------------------------------------------------------------
# PDE residuals


def _orbit_jets(c: DerivedConstants, x, y):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    require_rectangle(c, x, y)
    pts = np.column_stack([x, y, np.zeros_like(x)])
    hjet = OrbitChart(c).jet(pts)
    xv, yv, _ = variables(pts)
    return hjet, xv, yv


def _dot_h(hjet, a: Jet, b: Jet) -> np.ndarray:
    hinv = np.linalg.inv(hjet.g)
    return np.einsum("bi,bij,bj->b", a.grad, hinv, b.grad)


def pde_residual(kind, p, x, y, relative: bool = True, alpha=None):
    """Residual of Delta_h a - (1/lambda) d(lambda +- zeta) . da for the kind's sign.

    ``relative=True`` divides by the sum of the magnitudes of the two terms.
    ``alpha`` may override the potential with any generic function ``f(c, x, y)``.
    """
    kind = PotentialKind.parse(kind)
    c = _consts(p)
    hjet, xv, yv = _orbit_jets(c, x, y)
    f = alpha if alpha is not None else alpha_fn(kind)
    a = f(c, xv, yv)
    if not isinstance(a, Jet):
        a = Jet.constant(a, xv.val.shape[0], 3)
    lj = lam(c, xv, yv)
    zj = zeta(c, xv, yv)
    src = lj + zj if kind.duality > 0 else lj - zj
    lap = laplacian_from_jets(hjet, a)
    drift = _dot_h(hjet, src, a) / lj.val
    res = lap - drift
    if not relative:
        return res
    scale = np.abs(lap) + np.abs(drift)
    return res / np.where(scale > 0, scale, 1.0)


def reduced_system_residuals(p, x, y) -> dict:
    """Relative residuals of the reduced vacuum equations for (lambda, zeta)."""
    c = _consts(p)
    hjet, xv, yv = _orbit_jets(c, x, y)
    lj = lam(c, xv, yv)
    zj = zeta(c, xv, yv)
    lap_l = laplacian_from_jets(hjet, lj)
    dl2 = _dot_h(hjet, lj, lj) / lj.val
    dz2 = _dot_h(hjet, zj, zj) / lj.val
    r_lambda = (lap_l - dl2 - dz2) / (np.abs(lap_l) + dl2 + dz2)
    lap_z = laplacian_from_jets(hjet, zj)
    drift = 2.0 * _dot_h(hjet, zj, lj) / lj.val
    r_zeta = (lap_z - drift) / (np.abs(lap_z) + np.abs(drift))
    # d *_h (lambda^-2 d zeta) = 0  <=>  Delta zeta - 2 dzeta.dlambda / lambda = 0 (same equation)
    return {"lambda": r_lambda, "zeta": r_zeta}


# ---------------------------------------------------------------------------
# Two-forms


def _alpha_form_adapted(c: DerivedConstants, f, points):
    """theta ^ d alpha in the point-adapted chart together with the jet and Jacobian."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    jet, L = adapted_jet(c, pts)
    xv, yv = variables(pts[:, 1:3])
    a = f(c, xv, yv)
    b = pts.shape[0]
    da = np.zeros((b, 4))
    da[:, 1:3] = a.grad
    theta = np.zeros((b, 4))
    theta[:, 0] = 1.0  # theta = d tau' + (w - w0) d phi and w = w0 at the point
    return jet, L, wedge_1_1(theta, da), a


def omega_eval(kind, p, points, alpha=None) -> TwoFormValue:
    """theta ^ d alpha + s *(theta ^ d alpha) with s the duality sign of ``kind``."""
    kind = PotentialKind.parse(kind)
    c = _consts(p)
    f = alpha if alpha is not None else alpha_fn(kind)
    jet, L, base, _ = _alpha_form_adapted(c, f, points)
    w = base + kind.duality * hodge(jet, base, 2)
    return TwoFormValue(to_original_covariant(L, w, 2))


def named_form(kind, p, points) -> TwoFormValue:
    """The Killing-normalised form: omega_+- = dK +- *dK for alpha_+-, and -omega_eval for alpha_2."""
    return omega_eval(kind, p, points) * NAMED_SIGN


def energy_density(kind, p, points, alpha=None) -> np.ndarray:
    """Coefficient of dVol(g) in w ^ *w, computed as 2 |d alpha|^2_h = (2/lambda) |d alpha|^2_g."""
    c = _consts(p)
    f = alpha if alpha is not None else alpha_fn(PotentialKind.parse(kind))
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    jet, L = adapted_jet(c, pts)
    xv, yv = variables(pts[:, 1:3])
    a = f(c, xv, yv)
    ginv = np.linalg.inv(jet.g)
    da2 = np.einsum("bi,bij,bj->b", a.grad, ginv[:, 1:3, 1:3], a.grad)
    return 2.0 * da2 / lam(c, pts[:, 1], pts[:, 2])


def energy_density_from_form(kind, p, points) -> np.ndarray:
    """Independent route: (w ^ *w) / dVol = |w|^2_g from the assembled two-form."""
    c = _consts(p)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    jet, L = adapted_jet(c, pts)
    kind = PotentialKind.parse(kind)
    _, _, base, _ = _alpha_form_adapted(c, alpha_fn(kind), pts)
    w = base + kind.duality * hodge(jet, base, 2)
    return two_form_norm2(jet, w)


def exterior_derivative_2form(c: DerivedConstants, form_fn, points) -> np.ndarray:
    """d of a T^2-invariant 2-form with components ``form_fn(c, x, y)`` (4x4 nested list of generics).

    Returns the 4x4x4 antisymmetric components (dw)_{abc}.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    xv, yv = variables(pts[:, 1:3])
    comps = form_fn(c, xv, yv)
    b = pts.shape[0]
    grad = np.zeros((b, 4, 4, 4))  # grad[:, k, m, n] = d_k w_mn
    for m in range(4):
        for n in range(4):
            w = comps[m][n]
            if isinstance(w, Jet):
                grad[:, 1:3, m, n] = w.grad
    return (grad + np.einsum("bkmn->bmnk", grad) + np.einsum("bkmn->bnkm", grad))


# ---------------------------------------------------------------------------
# Gauge potentials


def q_function(c: DerivedConstants, x, y):
    a0, a1, a2, a3, a4 = c.a
    nu = c.nu
    Y = quartic(c, y)
    den = y * (1.0 - nu) * (x - y) * (a0 * (x + y) - x * y * (x * y * (a3 + a4 * (x + y)) - a1))
    return x * (y + x * nu) * (a1 - a3 * x * y) * Y / den


def gauge_components(kind, c: DerivedConstants, x, y):
    """(A_tau, A_phi) of the printed gauge potential, as generics of (x, y)."""
    kind = PotentialKind.parse(kind)
    a1, a3 = c.a[1], c.a[3]
    nu = c.nu
    w = omega_phi(c, x, y)
    alpha = alpha_fn(kind)(c, x, y)
    Q = q_function(c, x, y)
    if kind is PotentialKind.ALPHA_TWO:
        extra = -(Q / (a1 - a3 * x * y) - nu / (y * (1.0 - nu)))
    else:
        extra = kind.duality * (Q + (a3 * y * y - a1 * nu) / (y * (1.0 - nu)))
    return -alpha, -alpha * w + extra


@dataclass(frozen=True)
class GaugePotentialValue:
    components: np.ndarray  # (B, 4) in (tau, x, y, phi)
    d_components: TwoFormValue  # exterior derivative


def gauge_potential(kind, p, points) -> GaugePotentialValue:
    c = _consts(p)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    require_rectangle(c, pts[:, 1], pts[:, 2])
    if np.any(np.abs(pts[:, 2]) < 1e-9):
        raise GaugeChartError("the printed gauge potential is singular at y = 0")
    xv, yv = variables(pts[:, 1:3])
    at, ap = gauge_components(kind, c, xv, yv)
    b = pts.shape[0]
    comps = np.zeros((b, 4))
    comps[:, 0], comps[:, 3] = at.val, ap.val
    dA = np.zeros((b, 4, 4))
    dA[:, 1:3, 0] = at.grad
    dA[:, 1:3, 3] = ap.grad
    dA = dA - np.einsum("bmn->bnm", dA)
    return GaugePotentialValue(comps, TwoFormValue(dA))


def gauge_divergence(kind, p, points) -> np.ndarray:
    """d*A as the scalar (1/sqrt g) d_m (sqrt g g^{mn} A_n), from exact jets."""
    from .chen_teo import ChenTeoChart

    c = _consts(p)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    gjet = ChenTeoChart(c).jet(pts)
    xv, yv = variables(pts[:, 1:3])
    at, ap = gauge_components(kind, c, xv, yv)
    b = pts.shape[0]
    A = np.zeros((b, 4))
    dA = np.zeros((b, 4, 4))  # dA[:, k, n] = d_k A_n
    A[:, 0], A[:, 3] = at.val, ap.val
    dA[:, 1:3, 0], dA[:, 1:3, 3] = at.grad, ap.grad
    ginv = np.linalg.inv(gjet.g)
    d_ginv = -np.einsum("bma,bkac,bcn->bkmn", ginv, gjet.dg, ginv)
    dlog = 0.5 * np.einsum("bac,bkac->bk", ginv, gjet.dg)
    div = (np.einsum("bmmn,bn->b", d_ginv, A) + np.einsum("bmn,bmn->b", ginv, dA)
           + np.einsum("bm,bmn,bn->b", dlog, ginv, A))
    return div


# ---------------------------------------------------------------------------
# Basis coefficients


@dataclass(frozen=True)
class BasisCoefficients:
    tilde_minus_scale: float  # w~_- = tilde_minus_scale * w_-
    tilde_two_scale: float  # w~_2 = tilde_two_scale * w_2
    nu2: tuple[float, float]  # over (w~_-, w~_2)
    nu3: tuple[float, float]
    mu1_scale: float  # mu_1 = mu1_scale * dK
    mu2: tuple[float, float, float]  # over (nu_2, nu_3, mu_1)

    def over_named(self, which: str) -> np.ndarray:
        """Coefficients of nu_2 or nu_3 over the named forms (w_-, w_2)."""
        v = np.asarray(self.nu2 if which == "nu2" else self.nu3)
        return v * np.array([self.tilde_minus_scale, self.tilde_two_scale])


def mu2_coefficient_printed(xi: float) -> float:
    return 2.0 * xi**2 / (2.0 * xi**2 + 1.0)


def basis_coefficients(p, mu2_mu1: float | None = None) -> tuple[BasisCoefficients, CornerValues]:
    """Dual bases.  ``mu2_mu1`` overrides the coefficient of mu_1 in mu_2 (default: the
    value fixed by the vanishing of the B_1 period, see ``integrals.periods``)."""
    c = _consts(p)
    xi, sk = c.xi, math.sqrt(c.kappa)
    s = 1.0 - 2.0 * xi + 2.0 * xi**2
    tm = -1.0 / (2.0 * sk)
    t2 = xi * (2.0 * xi - 1.0) * (1.0 - xi) * s * (2.0 * xi**2 + 1.0) / (2.0 * sk)
    nu2 = (-1.0 + 2.0 * xi, 2.0 * xi)
    nu3 = (1.0 - 1.0 / xi, -1.0 / xi)
    mu1 = (1.0 - 2.0 * xi**2) * (2.0 * xi**2 + 1.0) * (2.0 * xi**2 - 2.0 * xi + 1.0) ** 2 / (-8.0 * xi**4 * sk)
    if mu2_mu1 is None:
        mu2_mu1 = -mu2_coefficient_printed(xi)
    return BasisCoefficients(tm, t2, nu2, nu3, mu1, (-1.0, 1.0, mu2_mu1)), corner_values(c)


# ---------------------------------------------------------------------------
# Asymptotics


def asymptotic_decay_constant(kind, p, printed: bool = False) -> float:
    """Limit of r^4 times the energy density (the coefficient of dVol(g) in w ^ *w).

    The printed constants are half of the limits found numerically, and the alpha_2
    constant carries (1 - 4 xi^2)^2 where the limit needs (1 - 4 xi^4)^2.  ``printed=True``
    returns the values as printed.
    """
    c = _consts(p)
    xi, kappa, nu = c.xi, c.kappa, c.nu
    kind = PotentialKind.parse(kind)
    if kind is PotentialKind.ALPHA_TWO:
        last = (1 - 4 * xi**2) if printed else (1 - 4 * xi**4)
        value = kappa / ((1 - xi) ** 2 * xi**2 * (1 - 2 * xi) ** 2 * last**2)
    else:
        value = kappa * (1 - nu**2) ** 2 / (1 - 2 * xi**2) ** 4
    return value if printed else 2.0 * value


def fit_decay_constant(kind, p, theta: float = 1.0, radii=(1e3, 3e3, 1e4)) -> tuple[float, float]:
    """Extrapolate r^4 * density to r = infinity assuming a series in 1/r; returns (limit, error)."""
    c = _consts(p)
    r = np.asarray(radii, dtype=float) * math.sqrt(c.kappa)
    d = density_along_ray(kind, c, r, theta) * r**4
    A = np.column_stack([np.ones_like(r), 1.0 / r, 1.0 / r**2])
    coef = np.linalg.solve(A, d)
    # compare with the two-term fit on the outer radii as an error proxy
    A2 = A[1:, :2]
    coef2 = np.linalg.solve(A2, d[1:])
    return float(coef[0]), float(abs(coef[0] - coef2[0]))


def density_along_ray(kind, p, radii, theta: float) -> np.ndarray:
    c = _consts(p)
    r = np.asarray(radii, dtype=float)
    x, y = asymptotic_xy(c, r, np.full_like(r, theta))
    pts = np.column_stack([np.zeros_like(r), x, y, np.zeros_like(r)])
    return energy_density(kind, c, pts)
