import math

import numpy as np
import pytest

from chenteo.chen_teo import (
    ChenTeoChart, ChenTeoParams, XI_MAX, closed_form_frequencies, cp2_map, derive_constants,
    fit_grr_coefficient, grr_coefficient_closed_form, quartic, quartic_expanded, reduced_fields,
    require_rectangle, rod_structure, sqrt_det_closed_form, weyl_constraint, weyl_forward,
    weyl_inverse, weyl_transform,
)
from chenteo.errors import DomainError, ParamError

from conftest import rectangle_points

GRID = (0.55, 0.6, 0.65, 0.7)


@pytest.mark.parametrize("xi,kappa", [(0.5, 1.0), (XI_MAX, 1.0), (0.3, 1.0), (0.6, 0.0), (0.6, -2.0)])
def test_parameter_domain(xi, kappa):
    with pytest.raises(ParamError):
        ChenTeoParams(xi, kappa)


@pytest.mark.parametrize("xi", GRID)
def test_roots_are_ordered_zeros_of_the_quartic(xi):
    c = derive_constants(ChenTeoParams(xi, 1.0))
    x1, x2, x3 = c.roots
    assert x1 < x2 < 0 < x3 or x1 < x2 < x3
    assert x2 < 0
    for r in c.roots:
        assert abs(quartic(c, r)) < 1e-14
    u = np.linspace(-1, 1, 17)
    assert np.allclose(quartic(c, u), quartic_expanded(c, u), atol=1e-14)


def test_quartic_signs_on_the_rectangle(c06):
    x1, x2, x3 = c06.roots
    xs = np.linspace(x2, x3, 9)[1:-1]
    ys = np.linspace(x1, x2, 9)[1:-1]
    # the opposite of the sign convention usually quoted; only X*Y enters the metric
    assert np.all(quartic(c06, xs) < 0)
    assert np.all(quartic(c06, ys) > 0)


def test_spot_constants_at_xi_06(c06):
    assert np.allclose(c06.roots, (-0.3456, -0.312, -0.2), rtol=1e-14)
    assert c06.nu == pytest.approx(-0.72)
    assert c06.rod_vectors == ((1, 0), (0, 1), (1, -1), (1, 0))
    rs = rod_structure(c06)
    assert rs.k1_over_k2_rational is not None and str(rs.k1_over_k2_rational) == "144/169"
    assert not rs.k1_over_k2_integer


@pytest.mark.parametrize("xi,kappa", [(0.55, 1.0), (0.6, 2.5), (0.68, 0.3)])
def test_b_differences_match_subtraction(xi, kappa):
    c = derive_constants(ChenTeoParams(xi, kappa))
    for i in range(1, 5):
        for j in range(1, 5):
            assert c.db(i, j) == pytest.approx(c.b[i - 1] - c.b[j - 1], rel=1e-9, abs=1e-14)


@pytest.mark.parametrize("xi", GRID)
def test_rod_structure(xi):
    rs = rod_structure(ChenTeoParams(xi, 1.3))
    assert all(abs(d) == 1 for d in rs.adjacent_determinants)
    assert max(abs(v - 1) for v in rs.normalization) < 1e-4
    assert rs.conical_residual < 1e-12


@pytest.mark.parametrize("xi", GRID)
def test_frequencies_match_closed_forms(xi):
    c = derive_constants(ChenTeoParams(xi, 2.0))
    ref = closed_form_frequencies(xi, 2.0)
    for i in (1, 2, 3):
        assert np.allclose(c.freqs[i], ref[i], rtol=1e-10, atol=1e-13)


def test_sqrt_det_closed_form(c_generic):
    pts = rectangle_points(c_generic, 50, seed=1)
    g = ChenTeoChart(c_generic).metric(pts)
    closed = sqrt_det_closed_form(c_generic, pts[:, 1], pts[:, 2])
    # the closed form is negative on the rectangle: it is -sqrt(det g)
    assert np.all(closed < 0)
    assert np.allclose(np.sqrt(np.linalg.det(g)), -closed, rtol=1e-9)


@pytest.mark.parametrize("xi", GRID)
def test_weyl_roundtrip_and_constraint(xi):
    c = derive_constants(ChenTeoParams(xi, 1.0))
    pts = rectangle_points(c, 300, seed=2, margin=1e-3)
    x, y = pts[:, 1], pts[:, 2]
    rho, z = weyl_forward(c, x, y)
    assert np.all(rho > 0)
    xb, yb = weyl_inverse(c, rho, z)
    assert np.max(np.abs(xb - x)) < 1e-10 and np.max(np.abs(yb - y)) < 1e-10
    R = np.hypot(rho, z)
    assert np.max(np.abs(weyl_constraint(c, rho, z))) < 1e-12 * np.max(1 + R**2)
    assert np.allclose(weyl_transform(c, "RhoZtoXY", (rho, z))[0], x)
    with pytest.raises(ValueError):
        weyl_transform(c, "sideways", (rho, z))


def test_printed_second_inversion_coefficient_fails(c06):
    """Without the 1/xi factor the inverse does not reproduce the forward map."""
    pts = rectangle_points(c06, 50, seed=3)
    rho, z = weyl_forward(c06, pts[:, 1], pts[:, 2])
    f1, f2, f3 = c06.f_coef
    assert f2 == pytest.approx(1 / (0.6 * 0.4 * 0.2 * (1 - 2 * 0.36) ** 2))
    bad = type(c06).__new__(type(c06))
    bad.__dict__.update(c06.__dict__)
    object.__setattr__(bad, "f_coef", (f1, f2 * 0.6, f3))
    try:
        xb, _ = weyl_inverse(bad, rho, z)
        assert np.max(np.abs(xb - pts[:, 1])) > 1e-3
    except DomainError:
        pass


def test_domain_errors(c06):
    with pytest.raises(DomainError):
        require_rectangle(c06, np.array([c06.x3 + 0.1]), np.array([c06.x1 + 0.01]))
    with pytest.raises(DomainError):
        weyl_inverse(c06, np.array([-1.0]), np.array([0.0]))
    with pytest.raises(DomainError):
        ChenTeoChart(c06).metric(np.array([[0.0, c06.x2, c06.x1, 0.0]]))


@pytest.mark.parametrize("xi,kappa", [(0.55, 1.0), (0.6, 1.0), (0.7, 4.0)])
def test_grr_falloff(xi, kappa):
    c = derive_constants(ChenTeoParams(xi, kappa))
    assert fit_grr_coefficient(c) == pytest.approx(grr_coefficient_closed_form(c), rel=1e-2)


def test_reduced_fields_and_cp2(c06):
    pts = rectangle_points(c06, 20, seed=4)
    rf = reduced_fields(c06, pts[:, 1], pts[:, 2])
    assert np.all(rf.lam > 0) and np.all(rf.rho > 0)
    a, b, d = cp2_map(c06, pts[:, 1], pts[:, 2], 0.3, 1.1)
    assert np.allclose(np.abs(a) ** 2 + np.abs(b) ** 2 + np.abs(d) ** 2, 1.0)
    # kappa scales lengths only
    c2 = derive_constants(ChenTeoParams(0.6, 4.0))
    assert c2.k[0] == pytest.approx(c06.k[0] / math.sqrt(4.0))


@pytest.mark.parametrize("xi,kappa", [(0.55, 0.5), (0.6, 1.0), (0.7, 2.0)])
def test_twist_holds_with_opposite_sign(xi, kappa):
    """In the orientation used here, *(K ^ dK) = -d zeta; the literal sign misses by exactly 2."""
    from chenteo.verify import twist_mismatch

    direct, flipped = twist_mismatch(ChenTeoParams(xi, kappa), n=200)
    assert flipped < 1e-8
    assert direct == pytest.approx(2.0, rel=1e-8)
