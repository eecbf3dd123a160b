"""Gram matrix, intersection matrix Q, the B pairing and the Stokes cross-check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..chen_teo import DerivedConstants, derive_constants
from ..errors import ConsistencyError
from ..harmonics import PotentialKind, basis_coefficients
from .energies import corner_sum, dK_energy_closed_form, energy_boundary, energy_direct
from .periods import form_eval, mu2_coefficient, period_localized
from .quadrature import QuadratureSpec

MINUS, TWO = PotentialKind.ALPHA_MINUS, PotentialKind.ALPHA_TWO


def _consts(p) -> DerivedConstants:
    return p if isinstance(p, DerivedConstants) else derive_constants(p)


@dataclass
class GramMatrix:
    q: np.ndarray  # over (omega_-, omega_2)
    method: str
    direct: np.ndarray | None = None
    direct_error: np.ndarray | None = None

    @property
    def q11(self) -> float:
        return float(self.q[0, 0])

    @property
    def q12(self) -> float:
        return float(self.q[0, 1])

    @property
    def q22(self) -> float:
        return float(self.q[1, 1])


def gram_closed(p) -> np.ndarray:
    """q from the nut sums (both potentials decay at infinity, so there is no arc term)."""
    c = _consts(p)
    e1 = -0.5 * corner_sum(MINUS, c)
    e2 = -0.5 * corner_sum(TWO, c)
    e12 = -0.5 * corner_sum([(MINUS, 1.0), (TWO, 1.0)], c)
    off = 0.5 * (e12 - e1 - e2)
    return np.array([[e1, off], [off, e2]])


def gram_matrix(p, spec: QuadratureSpec | None = None, direct: bool = False) -> GramMatrix:
    c = _consts(p)
    e1 = energy_boundary(MINUS, c, spec).value
    e2 = energy_boundary(TWO, c, spec).value
    e12 = energy_boundary([(MINUS, 1.0), (TWO, 1.0)], c, spec).value
    off = 0.5 * (e12 - e1 - e2)
    g = GramMatrix(np.array([[e1, off], [off, e2]]), "boundary+parallelogram")
    if direct:
        d1 = energy_direct(MINUS, c, spec)
        d2 = energy_direct(TWO, c, spec)
        d12 = energy_direct([(MINUS, 1.0), (TWO, 1.0)], c, spec)
        doff = 0.5 * (d12.value - d1.value - d2.value)
        g.direct = np.array([[d1.value, doff], [doff, d2.value]])
        eoff = 0.5 * (d12.error + d1.error + d2.error)
        g.direct_error = np.array([[d1.error, eoff], [eoff, d2.error]])
    return g


# ---------------------------------------------------------------------------
# Intersection data


def a_constant(p) -> float:
    c = _consts(p)
    xi = c.xi
    return -8.0 * xi**4 / ((2 * xi**2 + 1) * (2 * xi**2 - 2 * xi + 1) ** 2)


def constraint_system(p, idcom_rhs: float = -1.0) -> tuple[np.ndarray, np.ndarray]:
    xi = _consts(p).xi
    A = a_constant(p)
    M = np.array([[1.0, -2.0, 1.0], [1.0, 2 * xi**2, 0.0], [0.0, 1.0, 2 * xi**2]])
    return M, np.array([idcom_rhs, A, A])


def q_linear_system(p, idcom_rhs: float = -1.0) -> np.ndarray:
    M, rhs = constraint_system(p, idcom_rhs)
    q22, q23, q33 = np.linalg.solve(M, rhs)
    return np.array([[q22, q23], [q23, q33]])


def q_printed_solution(p) -> np.ndarray:
    """The solved forms as printed: B = ((3 + 2 xi) A - 1)/(4 xi^2 + 4 xi + 1)."""
    xi = _consts(p).xi
    A = a_constant(p)
    B = ((3 + 2 * xi) * A - 1) / (4 * xi**2 + 4 * xi + 1)
    q33 = B
    q23 = A - 2 * xi * B
    q22 = 1 + 2 * A - (1 + 4 * xi) * B
    return np.array([[q22, q23], [q23, q33]])


def nu_coefficients(p) -> np.ndarray:
    """Rows nu_2, nu_3 over the named forms (omega_-, omega_2)."""
    bc, _ = basis_coefficients(_consts(p))
    return np.vstack([bc.over_named("nu2"), bc.over_named("nu3")])


def q_gram_oracle(p, gram: np.ndarray | None = None) -> np.ndarray:
    """<nu_I, nu_J> = (1/4 pi^2) int nu ^ nu = -2 (1/8 pi^2) int nu ^ *nu."""
    q = gram_closed(p) if gram is None else gram
    C = nu_coefficients(p)
    return -2.0 * C @ q @ C.T


def b_matrix(p, gram: np.ndarray | None = None, mu2_mu1: float | None = None) -> np.ndarray:
    """B_IJ = <mu_I, nu_J>.

    <dK, nu> = (1/2) <omega_-, nu> because omega_+ ^ nu = 0 pointwise, and
    <omega_-, nu> = -2 q(omega_-, nu) for anti-self-dual forms.
    """
    c = _consts(p)
    q = gram_closed(c) if gram is None else gram
    C = nu_coefficients(c)
    bc, _ = basis_coefficients(c)
    Q = -2.0 * C @ q @ C.T
    dK_nu = -(q @ C.T)[0]  # <dK, nu_J> = -q(omega_-, nu_J)
    row1 = bc.mu1_scale * dK_nu
    if mu2_mu1 is None:
        mu2_mu1 = mu2_coefficient(c)
    row2 = Q[1] - Q[0] + mu2_mu1 * row1
    return np.vstack([row1, row2])


@dataclass
class IntersectionMatrix:
    Q_linear: np.ndarray
    Q_gram: np.ndarray
    B: np.ndarray
    Q_printed: np.ndarray
    discrepancy: dict = field(default_factory=dict)

    @property
    def Q(self) -> np.ndarray:
        return self.Q_gram

    def negative_definite(self) -> bool:
        return bool(np.all(np.linalg.eigvalsh(self.Q_gram) < 0))

    def b_is_unimodular(self, tol: float = 1e-8) -> bool:
        r = np.rint(self.B)
        return bool(np.max(np.abs(self.B - r)) < tol and abs(abs(np.linalg.det(r)) - 1) < 0.5)


def intersection_matrix(p, spec: QuadratureSpec | None = None, tol: float = 1e-8,
                        use_quadrature: bool = False) -> IntersectionMatrix:
    c = _consts(p)
    gram = gram_matrix(c, spec).q if use_quadrature else gram_closed(c)
    Ql = q_linear_system(c)
    Qg = q_gram_oracle(c, gram)
    B = b_matrix(c, gram)
    Qp = q_printed_solution(c)
    plus_rhs = q_linear_system(c, idcom_rhs=+1.0)
    disc = {
        "linear_vs_gram_max": float(np.max(np.abs(Ql - Qg))),
        "printed_solution_vs_gram_max": float(np.max(np.abs(Qp - Qg))),
        "printed_rhs_plus_one_vs_gram_max": float(np.max(np.abs(plus_rhs - Qg))),
        "printed_solution": Qp.tolist(),
        "printed_rhs_plus_one_solution": plus_rhs.tolist(),
        "mu2_coefficient_used": mu2_coefficient(c),
        "mu2_coefficient_printed": 2 * c.xi**2 / (2 * c.xi**2 + 1),
    }
    res = IntersectionMatrix(Ql, Qg, B, Qp, disc)
    if disc["linear_vs_gram_max"] > tol * max(1.0, float(np.max(np.abs(Qg)))):
        raise ConsistencyError(f"linear-system Q and Gram-oracle Q differ by {disc['linear_vs_gram_max']:.3e}")
    return res


# ---------------------------------------------------------------------------
# Stokes cross-check


def stokes_crosscheck(p) -> dict:
    """int_M dK ^ *dK by three routes; all values are divided by 4 pi^2."""
    c = _consts(p)
    xi, kappa = c.xi, c.kappa
    s = 2 * xi**2 - 2 * xi + 1
    b1 = period_localized("dK", 1, c)
    b23 = period_localized("star_dK", 2, c) + period_localized("star_dK", 3, c)
    stokes = b1 * b23  # (2 pi)^2 cancels the 4 pi^2
    closed = 64 * math.pi**2 * xi**4 * kappa / ((1 - 2 * xi**2) ** 2 * s**2) / (4 * math.pi**2)
    l2k = 8 * math.pi**2 * dK_energy_closed_form(c) / (4 * math.pi**2)
    # dK = (w_+ + w_-)/2 with w_+ orthogonal to w_-
    e_plus = 0.5 * corner_sum(PotentialKind.ALPHA_PLUS, c) + energy_boundary(PotentialKind.ALPHA_PLUS, c).extra["asymptotic"]
    e_minus = -0.5 * corner_sum(MINUS, c)
    energy_route = 8 * math.pi**2 * 0.25 * (e_plus + e_minus) / (4 * math.pi**2)
    return {"stokes": stokes, "remark_closed_form": closed, "l2k": l2k, "energy_combination": energy_route,
            "B1_dK": b1, "B4_dK": period_localized("dK", 4, c)}


# ---------------------------------------------------------------------------
# Quantization


def instanton_curvature(p, m2: int, m3: int, points):
    """F_A = m2 nu_2 + m3 nu_3 at the given points."""
    from .periods import form_vectors

    c = _consts(p)
    f = form_vectors(c)
    return form_eval(m2 * f["nu2"] + m3 * f["nu3"], c, points)


def quantization_check(p, form, tol: float = 1e-9) -> bool:
    """True iff the (1/2 pi)-periods of ``form`` over B2 and B3 are integers within tol."""
    c = _consts(p)
    vals = [period_localized(form, b, c) for b in (2, 3)]
    return all(abs(v - round(v)) < tol for v in vals)


def instanton_periods(p, m2: int, m3: int) -> tuple[float, float]:
    from .periods import form_vectors

    c = _consts(p)
    f = form_vectors(c)
    vec = m2 * f["nu2"] + m3 * f["nu3"]
    return period_localized(vec, 2, c), period_localized(vec, 3, c)
