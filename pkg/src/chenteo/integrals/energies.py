"""L^2 energies (1/2)||w||^2 = (1/8 pi^2) int w ^ *w, by two independent methods.

Boundary method: on the orbit space the energy density is a divergence,

    |J| e = d_i j^i,  j^i = |J| M^{ij} w_j,  w = (a/lam) da -+ (a^2 / (2 lam^2)) dzeta,

with ``M = sqrt(g) g^{ij} = diag(-X, Y)/(x-y)^2`` on the (x, y) block and ``|J|`` the
(tau, phi)-area of the torus over (2 pi)^2.  The flux through the rods vanishes,
each nut contributes (sign) * alpha(z)^2 / (2 c_R c_L) and the arc at infinity
contributes a flux evaluated at several radii and extrapolated.

Direct method: integrate the density over the rectangle after a Duffy
substitution centred on the corner (x2, x2), which is the asymptotic end.
"""

from __future__ import annotations

import math

import numpy as np

from ..chen_teo import DerivedConstants, asymptotic_xy, derive_constants, lam, quartic, zeta
from ..errors import QuadratureFailure
from ..geometry.jet import variables
from ..harmonics import PotentialKind, alpha_fn, corner_values
from .quadrature import Estimate, QuadratureSpec, dyadic_panels, pairwise_sum, panel_rule, richardson


def _consts(p) -> DerivedConstants:
    return p if isinstance(p, DerivedConstants) else derive_constants(p)


def _combo(kinds_coeffs):
    """Generic potential sum_k c_k alpha_k together with its duality sign."""
    kinds = [PotentialKind.parse(k) for k, _ in kinds_coeffs]
    signs = {k.duality for k in kinds}
    if len(signs) != 1:
        raise ValueError("cannot combine self-dual and anti-self-dual potentials")
    fns = [(alpha_fn(k), cf) for k, (_, cf) in zip(kinds, kinds_coeffs)]

    def f(c, x, y):
        out = 0.0
        for fn, cf in fns:
            out = out + cf * fn(c, x, y)
        return out

    return f, signs.pop()


def _potential(kind):
    if isinstance(kind, (list, tuple)):
        return _combo(kind)
    kind = PotentialKind.parse(kind)
    return alpha_fn(kind), kind.duality


# ---------------------------------------------------------------------------
# Boundary formula


def corner_sum(kind, p) -> float:
    """sum_i alpha(z_i)^2 / (c_R^i c_L^i) using the closed-form corner values."""
    c = _consts(p)
    cv = corner_values(c)
    if isinstance(kind, (list, tuple)):
        vals = sum(cf * np.asarray(cv[k]) for k, cf in kind)
    else:
        vals = np.asarray(cv[kind])
    return float(sum(vals[i] ** 2 / (c.freqs[i + 1][0] * c.freqs[i + 1][1]) for i in range(3)))


def _flux_density(c, f, sign, r, theta):
    """Integrand of the flux through the arc of radius r, per unit theta."""
    x, y = asymptotic_xy(c, r, theta)
    xv, yv = variables(np.column_stack([x, y]))
    a = f(c, xv, yv)
    lj = lam(c, xv, yv)
    zj = zeta(c, xv, yv)
    w = (a.val / lj.val)[:, None] * a.grad - sign * (a.val**2 / (2.0 * lj.val**2))[:, None] * zj.grad
    d2 = (x - y) ** 2
    jx = -quartic(c, x) / d2 * w[:, 0]
    jy = quartic(c, y) / d2 * w[:, 1]
    # d(x, y)/d theta along the arc
    s = c.x2 * math.sqrt(c.kappa * (1.0 - c.nu**2))
    dx = s / r * np.cos(theta / 2) * np.sin(theta / 2)
    dy = s / r * np.sin(theta / 2) * np.cos(theta / 2)
    return c.torus_jacobian * (jx * dy - jy * dx)


def asymptotic_flux(kind, p, spec: QuadratureSpec | None = None) -> Estimate:
    c = _consts(p)
    spec = spec or QuadratureSpec()
    f, sign = _potential(kind)
    radii = np.asarray(spec.asymptotic_cutoffs, dtype=float) * math.sqrt(c.kappa)
    th, wt = panel_rule(dyadic_panels(0.0, math.pi, 3), spec.gauss_order)
    vals = [pairwise_sum(wt * _flux_density(c, f, sign, r, th)) for r in radii]
    value, err = richardson(1.0 / radii, vals)
    return Estimate(value, err, "arc-flux-richardson", extra={"radii": radii.tolist(), "values": vals})


def energy_boundary(kind, p, spec: QuadratureSpec | None = None) -> Estimate:
    """(1/2)||w||^2 from the nut contributions and the flux at infinity."""
    c = _consts(p)
    _, sign = _potential(kind)
    corners = 0.5 * sign * corner_sum(kind, c)
    flux = asymptotic_flux(kind, c, spec)
    return Estimate(corners + flux.value, flux.error, "boundary", "closed_form+quadrature",
                    extra={"corners": corners, "asymptotic": flux.value})


def energy_closed_form(kind, p) -> float:
    """Printed closed forms: 16 xi^4 kappa/(...) for alpha_+-, and the printed alpha_2 display."""
    c = _consts(p)
    xi, kappa = c.xi, c.kappa
    s = 1.0 - 2.0 * xi + 2.0 * xi**2
    kind = PotentialKind.parse(kind)
    if kind is PotentialKind.ALPHA_TWO:
        return kappa / ((1 - xi) ** 2 * (1 - 2 * xi) ** 2 * (1 - 4 * xi**4) ** 2 * s**2)
    return 16.0 * xi**4 * kappa / ((1 - 2 * xi**2) ** 2 * s**2)


def q12_closed_form(p) -> float:
    c = _consts(p)
    xi, kappa = c.xi, c.kappa
    s = 1.0 - 2.0 * xi + 2.0 * xi**2
    return -16.0 * kappa * xi**3 / ((1 - xi) * (1 - 2 * xi) * (1 - 4 * xi**4) ** 2 * s**2)


def dK_energy_closed_form(p) -> float:
    c = _consts(p)
    xi, kappa = c.xi, c.kappa
    s = 1.0 - 2.0 * xi + 2.0 * xi**2
    return 8.0 * kappa * xi**4 / (s**2 * (1 - 2 * xi**2) ** 2)


# ---------------------------------------------------------------------------
# Direct quadrature


def density_xy(c: DerivedConstants, f, x, y) -> np.ndarray:
    """|J| M^{ij} a_i a_j / lam: the energy per unit dx dy."""
    xv, yv = variables(np.column_stack([x, y]))
    a = f(c, xv, yv)
    d2 = (x - y) ** 2
    m = -quartic(c, x) / d2 * a.grad[:, 0] ** 2 + quartic(c, y) / d2 * a.grad[:, 1] ** 2
    return c.torus_jacobian * m / lam(c, x, y)


def energy_direct(kind, p, spec: QuadratureSpec | None = None, s_min: float = 1e-7) -> Estimate:
    """Rectangle quadrature of the energy density in Duffy coordinates around (x2, x2).

    With P = x - x2 = s t and Q = x2 - y = s (1 - t), dx dy = s ds dt and
    s times the density stays bounded as s -> 0, which is the asymptotic end.
    The strip s < s_min is dropped and bounded by s_min times the largest value
    of s * density seen on the first panel.
    """
    c = _consts(p)
    spec = spec or QuadratureSpec()
    f, _ = _potential(kind)
    x1, x2, x3 = c.roots
    P, Qm = x3 - x2, x2 - x1
    tstar = P / (P + Qm)
    n = spec.gauss_order

    def integrate(order):
        total, edge = [], 0.0
        for ta, tb in dyadic_panels(0.0, tstar, spec.subdivisions // 2) + dyadic_panels(tstar, 1.0, spec.subdivisions // 2):
            t, wt = panel_rule([(ta, tb)], order)
            for tj, wj in zip(t, wt):
                smax = min(P / tj, Qm / (1.0 - tj))
                panels = [pn for pn in dyadic_panels(s_min, smax, spec.subdivisions, "a")]
                panels += dyadic_panels(smax * (1 - 1e-3), smax, 1, "b")[:0]
                s, ws = panel_rule(_refine_far(panels, smax), order)
                x = x2 + s * tj
                y = x2 - s * (1.0 - tj)
                g = s * density_xy(c, f, x, y)
                total.append(wj * pairwise_sum(ws * g))
                edge = max(edge, float(np.max(np.abs(g[: order]))))
        return pairwise_sum(total), edge

    hi, edge = integrate(n)
    lo, _ = integrate(max(n // 2, 8))
    tail = edge * s_min
    value = hi
    err = abs(hi - lo) + tail
    if not np.isfinite(value):
        raise QuadratureFailure("energy quadrature produced a non-finite value")
    return Estimate(value, err, "duffy-gauss-legendre", extra={"dropped_strip_bound": tail})


def _refine_far(panels, smax):
    """Also refine toward s = smax, where the ray meets a rod and then a nut."""
    a, b = panels[-1]
    return panels[:-1] + dyadic_panels(a, b, 6, "b")
