import math

import numpy as np
import pytest

from chenteo.chen_teo import ChenTeoParams, derive_constants
from chenteo.errors import ConfigError, ConsistencyError, DivergentSum, UnsupportedForm
from chenteo.harmonics import PotentialKind
from chenteo.integrals.energies import (
    asymptotic_flux, corner_sum, dK_energy_closed_form, energy_boundary, energy_closed_form,
    energy_direct, q12_closed_form,
)
from chenteo.integrals.pairing import (
    b_matrix, gram_closed, gram_matrix, instanton_periods, intersection_matrix, q_gram_oracle,
    q_linear_system, q_printed_solution, quantization_check, stokes_crosscheck,
)
from chenteo.integrals.partition import partition_classical, truncated_sum
from chenteo.integrals.periods import (
    FORM_NAMES, form_vectors, mu2_coefficient, orientation_registry, period_closed_form,
    period_direct, period_localized, period_table,
)
from chenteo.integrals.quadrature import (
    QuadratureSpec, dyadic_panels, gauss_nodes, integrate_1d, pairwise_sum, richardson,
)

GRID = [(0.55, 1.0), (0.6, 1.0), (0.63, 1.7), (0.7, 0.5)]
DISPLAYED = [("omega_minus", 2), ("omega_minus", 3), ("omega_plus", 2), ("omega_plus", 3),
             ("omega_two", 2), ("omega_two", 3), ("dK", 1), ("dK", 2), ("dK", 3), ("dK", 4)]


# -- quadrature primitives -----------------------------------------------------


def test_gauss_rule_is_exact_for_polynomials():
    x, w = gauss_nodes(-1.0, 2.0, 8)
    assert pairwise_sum(w * x**15) == pytest.approx((2.0**16 - 1.0) / 16, rel=1e-13)


def test_dyadic_panels_resolve_endpoint_singularity():
    panels = dyadic_panels(0.0, 1.0, 30, "a")
    assert panels[0][0] == 0.0 and panels[-1][1] == 1.0
    value, err = integrate_1d(lambda s: 1 / np.sqrt(s), panels, 16)
    # only the innermost panel of width 2^-30 is unresolved
    assert value == pytest.approx(2.0, rel=1e-5)
    assert integrate_1d(np.log, panels, 16)[0] == pytest.approx(-1.0, rel=1e-8)


def test_richardson_removes_power_series():
    hs = np.array([0.1, 0.05, 0.025, 0.0125])
    limit, err = richardson(hs, 3.0 + 2 * hs - hs**2 + 0.5 * hs**3)
    assert limit == pytest.approx(3.0, abs=1e-12)
    # the estimate drops the finest level, which cannot remove the cubic term
    assert 0 < err < 1e-3
    limit, err = richardson(hs, 3.0 + 2 * hs - hs**2)
    assert limit == pytest.approx(3.0, abs=1e-12) and err < 1e-12


def test_pairwise_sum_is_accurate():
    v = np.full(2**16, 0.1)
    assert pairwise_sum(v) == pytest.approx(6553.6, rel=1e-15)


@pytest.mark.parametrize("kw", [{"gauss_order": 4}, {"subdivisions": 0}, {"corner_offsets": (1e-3, -1.0)},
                                {"richardson_levels": 5}, {"asymptotic_cutoffs": (100.0,)}])
def test_quadrature_spec_validation(kw):
    with pytest.raises(ConfigError):
        QuadratureSpec(**kw)


# -- periods -------------------------------------------------------------------


def test_spot_periods_at_xi_06(c06):
    t = period_table(c06)
    assert t[("omega_minus", 2)] == pytest.approx(50 / 7, rel=1e-13)
    assert t[("omega_minus", 3)] == pytest.approx(36 / 7, rel=1e-13)
    assert t[("omega_two", 2)] == pytest.approx(66.55166539, rel=1e-9)
    assert t[("omega_two", 3)] == pytest.approx(19.96549962, rel=1e-9)
    ratio_minus = t[("omega_minus", 2)] / t[("omega_minus", 3)]
    ratio_two = t[("omega_two", 2)] / t[("omega_two", 3)]
    assert ratio_minus == pytest.approx(1 / (2 * 0.36), rel=1e-13)
    assert ratio_two == pytest.approx(10 / 3, rel=1e-12)
    assert orientation_registry(c06) == {1: 1, 2: -1, 3: -1, 4: -1}


@pytest.mark.parametrize("xi,kappa", GRID)
def test_localized_periods_match_closed_forms(xi, kappa):
    c = derive_constants(ChenTeoParams(xi, kappa))
    for form, bolt in DISPLAYED:
        ref = period_closed_form(form, bolt, c)
        got = period_localized(form, bolt, c)
        assert abs(got - ref) <= 1e-12 * max(1.0, abs(ref))


@pytest.mark.parametrize("xi,kappa", [(0.6, 1.0), (0.66, 2.0)])
@pytest.mark.parametrize("form", ["omega_minus", "omega_two", "dK", "nu3"])
def test_direct_periods_match_localization(form, xi, kappa):
    c = derive_constants(ChenTeoParams(xi, kappa))
    for bolt in (2, 3):
        val, err = period_direct(form, bolt, c)
        ref = period_localized(form, bolt, c)
        assert abs(val - ref) <= max(1e-6 * max(abs(ref), 1.0), 10 * err)


def test_dual_basis(c06):
    for bolt, (n2, n3) in {2: (1, 0), 3: (0, 1)}.items():
        assert period_localized("nu2", bolt, c06) == pytest.approx(n2, abs=1e-12)
        assert period_localized("nu3", bolt, c06) == pytest.approx(n3, abs=1e-12)
    assert period_localized("mu1", 1, c06) == pytest.approx(1.0, abs=1e-12)
    assert period_localized("mu2", 1, c06) == pytest.approx(0.0, abs=1e-12)
    # the coefficient fixed by the B1 period is minus the printed one
    assert mu2_coefficient(c06) == pytest.approx(-2 * 0.36 / (2 * 0.36 + 1), rel=1e-12)


def test_period_errors(c06):
    with pytest.raises(UnsupportedForm):
        period_localized("omega_three", 2, c06)
    with pytest.raises(UnsupportedForm):
        period_localized("dK", 7, c06)
    with pytest.raises(UnsupportedForm):
        period_closed_form("nu2", 2, c06)
    with pytest.raises(UnsupportedForm):
        period_direct("dK", 1, c06)
    assert set(form_vectors(c06)) == set(FORM_NAMES)


# -- energies ------------------------------------------------------------------


@pytest.mark.parametrize("xi,kappa", GRID)
def test_boundary_energies(xi, kappa):
    c = derive_constants(ChenTeoParams(xi, kappa))
    ep = energy_boundary(PotentialKind.ALPHA_PLUS, c)
    em = energy_boundary(PotentialKind.ALPHA_MINUS, c)
    e2 = energy_boundary(PotentialKind.ALPHA_TWO, c)
    ref = energy_closed_form("plus", c)
    assert ep.value == pytest.approx(ref, rel=1e-10)
    assert em.value == pytest.approx(ref, rel=1e-10)
    # the alpha_2 energy is twice the displayed value
    assert e2.value == pytest.approx(2 * energy_closed_form("two", c), rel=1e-10)
    assert asymptotic_flux("minus", c).value == pytest.approx(0.0, abs=1e-10 * ref)


def test_plus_energy_splits_into_nuts_and_infinity(c06):
    e = energy_boundary("plus", c06)
    assert e.extra["asymptotic"] > 0
    assert e.extra["corners"] + e.extra["asymptotic"] == pytest.approx(e.value)
    assert 0.5 * corner_sum("plus", c06) == pytest.approx(e.extra["corners"])


def test_direct_energy_quadrature(c06):
    for kind in ("minus", "two"):
        d = energy_direct(kind, c06)
        b = energy_boundary(kind, c06)
        assert abs(d.value - b.value) < 1e-4 * b.value
        assert abs(d.value - b.value) < max(d.error, 1e-8 * b.value) * 10


def test_gram_matrix(c06):
    g = gram_matrix(c06).q
    assert np.allclose(g, gram_closed(c06), rtol=1e-10)
    assert g[0, 1] == pytest.approx(q12_closed_form(c06), rel=1e-10)
    assert np.all(np.linalg.eigvalsh(g) > 0)


@pytest.mark.parametrize("xi,kappa", GRID)
def test_stokes_routes(xi, kappa):
    s = stokes_crosscheck(derive_constants(ChenTeoParams(xi, kappa)))
    ref = s["remark_closed_form"]
    for key in ("stokes", "l2k", "energy_combination"):
        assert s[key] == pytest.approx(ref, rel=1e-10)
    assert s["B4_dK"] == pytest.approx(-s["B1_dK"])
    assert 8 * math.pi**2 * dK_energy_closed_form(ChenTeoParams(xi, kappa)) / (4 * math.pi**2) == pytest.approx(ref)


# -- intersection form ---------------------------------------------------------


def test_intersection_at_xi_06(c06):
    im = intersection_matrix(c06)
    assert np.allclose(im.Q, [[-1.47130866, -1.052704], [-1.052704, -1.63409935]], atol=1e-8)
    assert im.negative_definite()
    assert np.allclose(im.B, [[1, 1], [0, -1]], atol=1e-12)
    assert im.b_is_unimodular()
    assert np.allclose(q_printed_solution(c06), [[3.82119328, 0.34005188], [0.34005188, -2.14108952]])


@pytest.mark.parametrize("xi", np.linspace(0.505, 0.705, 9))
def test_q_is_kappa_independent_and_definite(xi):
    q1 = q_gram_oracle(ChenTeoParams(xi, 1.0))
    q2 = q_gram_oracle(ChenTeoParams(xi, 3.7))
    assert np.allclose(q1, q2, rtol=1e-10)
    assert np.allclose(q1, q_linear_system(ChenTeoParams(xi, 1.0)), rtol=1e-8, atol=1e-10)
    assert np.all(np.linalg.eigvalsh(q1) < 0)
    B = b_matrix(ChenTeoParams(xi, 1.0))
    assert abs(abs(np.linalg.det(B)) - 1) < 1e-8


def test_inconsistent_gram_is_reported(c06, monkeypatch):
    from chenteo.integrals import pairing

    bad = gram_closed(c06) * np.array([[1.0, 1.01], [1.01, 1.0]])
    monkeypatch.setattr(pairing, "gram_closed", lambda p: bad)
    with pytest.raises(ConsistencyError):
        intersection_matrix(c06)


def test_quantization(c06):
    assert instanton_periods(c06, 2, -1) == pytest.approx((2.0, -1.0), abs=1e-12)
    assert quantization_check(c06, "nu2") and quantization_check(c06, "nu3")
    assert not quantization_check(c06, "omega_minus")


# -- partition function --------------------------------------------------------


def test_partition_at_tau_i(c06):
    Q = intersection_matrix(c06).Q
    res = partition_classical(Q, 1j)
    assert res.tail_bound < 1e-12 and res.truncation <= 50
    assert res.value.real == pytest.approx(1.117960396, rel=1e-9)
    assert abs(res.value.imag) < 1e-15
    # independent brute-force sum over a much larger box
    assert res.value == pytest.approx(truncated_sum(Q, 1j, 40), abs=1e-12)


def test_partition_general_tau(c06):
    Q = intersection_matrix(c06).Q
    tau = 0.3 + 0.8j
    ref = sum(np.exp(-1j * math.pi * tau * (np.array([a, b]) @ Q @ np.array([a, b])))
              for a in range(-25, 26) for b in range(-25, 26))
    assert partition_classical(Q, tau).value == pytest.approx(ref, abs=1e-12)


def test_partition_rejects_divergent_sums(c06):
    with pytest.raises(DivergentSum):
        partition_classical(np.array([[1.0, 0.0], [0.0, -1.0]]), 1j)
    with pytest.raises(DivergentSum):
        partition_classical(intersection_matrix(c06).Q, -1j)
