"""Bolt periods by fixed-point localization and by direct quadrature on the bolt.

Every form handled here is a constant combination of the three forms
``omega_eval(kind)`` generated by alpha_+, alpha_-, alpha_2.  Since
``i_K omega_eval(kind) = d alpha_kind``, the combination with coefficients
``v`` has the potential ``v . (alpha_+, alpha_-, alpha_2)``, which is all the
localization formula needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..chen_teo import ChenTeoParams, DerivedConstants, derive_constants
from ..errors import QuadratureFailure, UnsupportedForm
from ..geometry.core import TwoFormValue
from ..harmonics import (
    NAMED_SIGN,
    PotentialKind,
    basis_coefficients,
    corner_values,
    omega_eval,
)
from .quadrature import QuadratureSpec, dyadic_panels, pairwise_sum, panel_rule, richardson

KINDS = (PotentialKind.ALPHA_PLUS, PotentialKind.ALPHA_MINUS, PotentialKind.ALPHA_TWO)
FORM_NAMES = ("omega_plus", "omega_minus", "omega_two", "dK", "star_dK", "nu2", "nu3", "mu1", "mu2")

# Bolts: fixed coordinate, the nut at each end (None = infinity) and the kind of rod.
# B_1: x = x2, B_2: y = x1, B_3: x = x3, B_4: y = x2.
BOLTS = {
    1: {"north": None, "south": 3, "finite": False},
    2: {"north": 3, "south": 2, "finite": True},
    3: {"north": 2, "south": 1, "finite": True},
    4: {"north": None, "south": 1, "finite": False},
}

# Orientation registry.  Each bolt is oriented so that the named reference form has
# the stated sign; the localization formula is multiplied by the resulting sign.
ORIENTATION_RULES = {
    1: ("dK", -1),  # (1/2pi) int_{B1} dK = -8 xi^4 sqrt(kappa)/(...) < 0
    2: ("omega_minus", +1),  # "by dropping the sign ambiguity"
    3: ("omega_minus", +1),
    4: ("dK", +1),  # int_{B4} dK = -int_{B1} dK
}


def _consts(p) -> DerivedConstants:
    return p if isinstance(p, DerivedConstants) else derive_constants(p)


def form_vectors(p, mu2_mu1: float | None = None) -> dict[str, np.ndarray]:
    """Coefficients of each named form over (omega_eval(+), omega_eval(-), omega_eval(2))."""
    c = _consts(p)
    bc, _ = basis_coefficients(c, mu2_mu1=0.0)
    e = np.eye(3)
    forms = {
        "omega_plus": NAMED_SIGN * e[0],
        "omega_minus": NAMED_SIGN * e[1],
        "omega_two": NAMED_SIGN * e[2],
    }
    # dK = (w_+ + w_-)/2 and *dK = (w_+ - w_-)/2 for the Killing-normalised forms
    forms["dK"] = 0.5 * (forms["omega_plus"] + forms["omega_minus"])
    forms["star_dK"] = 0.5 * (forms["omega_plus"] - forms["omega_minus"])
    tm = bc.tilde_minus_scale * forms["omega_minus"]
    t2 = bc.tilde_two_scale * forms["omega_two"]
    forms["nu2"] = bc.nu2[0] * tm + bc.nu2[1] * t2
    forms["nu3"] = bc.nu3[0] * tm + bc.nu3[1] * t2
    forms["mu1"] = bc.mu1_scale * forms["dK"]
    if mu2_mu1 is None:
        mu2_mu1 = mu2_coefficient(c)
    forms["mu2"] = forms["nu3"] - forms["nu2"] + mu2_mu1 * forms["mu1"]
    return forms


def potential_values(p) -> tuple[np.ndarray, np.ndarray]:
    """Rows: nuts z1, z2, z3; columns: (alpha_+, alpha_-, alpha_2).  Second item: values at infinity."""
    cv = corner_values(_consts(p))
    nuts = np.array([[cv.values[k][i] for k in KINDS] for i in range(3)])
    inf = np.array([cv.at_infinity[k] for k in KINDS])
    return nuts, inf


def raw_period(c: DerivedConstants, vec: np.ndarray, bolt: int) -> float:
    """The localization formula with the + sign: T/(2 pi) (alpha(north) - alpha(south))."""
    nuts, inf = potential_values(c)
    info = BOLTS[bolt]
    if info["finite"]:
        factor = c.db(1, bolt) / c.k[0]
    else:
        factor = c.db(2, bolt) / c.k[1]
    north = inf if info["north"] is None else nuts[info["north"] - 1]
    south = nuts[info["south"] - 1]
    return float(factor * (vec @ north - vec @ south))


def orientation_sign(p, bolt: int) -> int:
    c = _consts(p)
    name, want = ORIENTATION_RULES[bolt]
    vec = form_vectors(c, mu2_mu1=0.0)[name]
    raw = raw_period(c, vec, bolt)
    return int(want * np.sign(raw))


def orientation_registry(p) -> dict[int, int]:
    return {i: orientation_sign(p, i) for i in BOLTS}


def _vector_for(c, form, mu2_mu1=None) -> np.ndarray:
    if isinstance(form, str):
        forms = form_vectors(c, mu2_mu1)
        if form not in forms:
            raise UnsupportedForm(f"no potential registered for form {form!r}")
        return forms[form]
    vec = np.asarray(form, dtype=float)
    if vec.shape != (3,):
        raise UnsupportedForm("a form must be a registered name or a 3-vector of potential coefficients")
    return vec


def period_localized(form, bolt: int, p, mu2_mu1: float | None = None) -> float:
    """(1/2 pi) int_{B_bolt} form, using the orientation registry."""
    c = _consts(p)
    if bolt not in BOLTS:
        raise UnsupportedForm(f"unknown bolt {bolt}")
    vec = _vector_for(c, form, mu2_mu1)
    return orientation_sign(c, bolt) * raw_period(c, vec, bolt)


def mu2_coefficient(p) -> float:
    """Coefficient c in mu_2 = nu_3 - nu_2 + c mu_1 fixed by int_{B1} mu_2 = 0."""
    c = _consts(p)
    forms = form_vectors(c, mu2_mu1=0.0)
    num = raw_period(c, forms["nu3"] - forms["nu2"], 1)
    den = raw_period(c, forms["mu1"], 1)
    return -num / den


def period_closed_form(form: str, bolt: int, p) -> float:
    """The printed closed forms for (1/2 pi) int_{B_bolt} form, where one is displayed."""
    c = _consts(p)
    xi, sk = c.xi, math.sqrt(c.kappa)
    s = 1.0 - 2.0 * xi + 2.0 * xi**2
    w = 1.0 - 4.0 * xi**4
    minus = {2: 2.0 * sk / (1.0 - 2.0 * xi**2), 3: 4.0 * xi**2 * sk / (1.0 - 2.0 * xi**2)}
    table = {
        "omega_minus": minus,
        "omega_plus": {k: -v for k, v in minus.items()},
        "omega_two": {2: 2.0 * sk / (xi * (2.0 * xi - 1.0) * s * w), 3: 2.0 * sk / ((1.0 - xi) * s * w)},
        "dK": {2: 0.0, 3: 0.0},
    }
    dk1 = -8.0 * xi**4 * sk / ((1.0 - 2.0 * xi**2) * (2.0 * xi**2 + 1.0) * s**2)
    table["dK"].update({1: dk1, 4: -dk1})
    try:
        return table[form][bolt]
    except KeyError:
        raise UnsupportedForm(f"no closed form displayed for {form!r} on B{bolt}") from None


@dataclass
class PeriodEntry:
    value: float
    method: str
    error_estimate: float = 0.0


@dataclass
class PeriodTable:
    params: ChenTeoParams
    entries: dict = field(default_factory=dict)  # (form, bolt) -> PeriodEntry

    def __getitem__(self, key):
        return self.entries[key].value

    def as_rows(self):
        for (form, bolt), e in sorted(self.entries.items(), key=lambda kv: (FORM_NAMES.index(kv[0][0]), kv[0][1])):
            yield {"form": form, "bolt": bolt, "value": e.value, "method": e.method,
                   "error_estimate": e.error_estimate}


def period_table(p, direct: bool = False, spec: QuadratureSpec | None = None) -> PeriodTable:
    c = _consts(p)
    table = PeriodTable(c.params)
    for name in FORM_NAMES:
        for bolt in BOLTS:
            table.entries[(name, bolt)] = PeriodEntry(period_localized(name, bolt, c), "localized")
    if direct:
        spec = spec or QuadratureSpec()
        for name in FORM_NAMES:
            for bolt in (2, 3):
                v, err = period_direct(name, bolt, c, spec)
                table.entries[(name + "@direct", bolt)] = PeriodEntry(v, "direct", err)
    return table


# ---------------------------------------------------------------------------
# Direct quadrature


def form_eval(form, p, points, mu2_mu1: float | None = None) -> TwoFormValue:
    """Pointwise components of a registered form in (tau, x, y, phi)."""
    c = _consts(p)
    vec = _vector_for(c, form, mu2_mu1)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.zeros((pts.shape[0], 4, 4))
    for k, kind in enumerate(KINDS):
        if vec[k] != 0.0:
            out += vec[k] * omega_eval(kind, c, pts).components
    return TwoFormValue(out)


def _bolt_integrand(c, vec, bolt, eps, s):
    """w(d_s, l_1) on the surface at distance eps from bolt ``bolt``, as a function of s."""
    x1, x2, x3 = c.roots
    if bolt == 2:
        x, y = s, np.full_like(s, x1 + eps * (x2 - x1))
        tangent = 1
    else:
        x, y = np.full_like(s, x3 - eps * (x3 - x2)), s
        tangent = 2
    pts = np.column_stack([np.zeros_like(s), x, y, np.zeros_like(s)])
    w = form_eval(vec, c, pts).components
    ell = c.ell(1)
    u = np.zeros(4)
    u[tangent] = 1.0
    v = np.array([ell[0], 0.0, 0.0, ell[1]])
    return np.einsum("m,bmn,n->b", u, w, v)


def period_direct(form, bolt: int, p, spec: QuadratureSpec | None = None,
                  mu2_mu1: float | None = None) -> tuple[float, float]:
    """(1/2 pi) int over a finite bolt by pulling back to nearby surfaces and extrapolating.

    The surface at offset eps is parametrised by the free coordinate and the
    2 pi-periodic orbit of l_1, which does not vanish on B_2 or B_3.  The
    integral over the angle gives 2 pi, cancelled by the normalisation.
    """
    c = _consts(p)
    spec = spec or QuadratureSpec()
    if bolt not in (2, 3):
        raise UnsupportedForm("direct periods are implemented for the finite bolts B2 and B3")
    vec = _vector_for(c, form, mu2_mu1)
    x1, x2, x3 = c.roots
    a, b = (x2, x3) if bolt == 2 else (x1, x2)
    offsets = spec.corner_offsets[: spec.richardson_levels]
    panels = dyadic_panels(a, b, 4)
    vals, qerr = [], 0.0
    for eps in offsets:
        margin = eps * (b - a)
        inner = [(max(lo, a + margin * 1e-3), min(hi, b - margin * 1e-3)) for lo, hi in panels]
        s, w = panel_rule(inner, spec.gauss_order)
        f = _bolt_integrand(c, vec, bolt, eps, s)
        hi = pairwise_sum(w * f)
        s2, w2 = panel_rule(inner, spec.gauss_order // 2)
        lo = pairwise_sum(w2 * _bolt_integrand(c, vec, bolt, eps, s2))
        qerr = max(qerr, abs(hi - lo))
        vals.append(hi)
    value, rerr = richardson(offsets, vals)
    # the clipped end segments have length 2e-3 eps (b - a) and a bounded integrand
    clip = 2e-3 * max(offsets[-1], 0.0) * (b - a) * float(np.max(np.abs(f)))
    err = rerr + qerr + clip
    if not np.isfinite(value):
        raise QuadratureFailure("direct period did not converge")
    sign = orientation_sign(c, bolt)
    return sign * value, err
