import numpy as np
import pytest

from chenteo.chen_teo import ChenTeoChart, ChenTeoParams, derive_constants, killing_forms_at
from chenteo.errors import DomainError
from chenteo.geometry.core import hodge
from chenteo.harmonics import (
    NAMED_SIGN, PotentialKind, alpha_eval, alpha_fn, asymptotic_decay_constant, corner_limit,
    corner_values, energy_density, energy_density_from_form, fit_decay_constant, gauge_divergence,
    gauge_potential, named_form, omega_eval, pde_residual, reduced_system_residuals,
)
from chenteo.verify import interior_points

from fd_oracle import D1, OFFS

KINDS = list(PotentialKind)
PARAMS = [(0.55, 1.0), (0.6, 1.0), (0.63, 1.7), (0.7, 0.5)]


@pytest.mark.parametrize("xi,kappa", PARAMS)
@pytest.mark.parametrize("kind", KINDS)
def test_potentials_solve_their_pde(kind, xi, kappa):
    c = derive_constants(ChenTeoParams(xi, kappa))
    pts = interior_points(c, 200, seed=7)
    assert np.max(np.abs(pde_residual(kind, c, pts[:, 1], pts[:, 2]))) < 1e-8


def test_pde_oracle_discriminates(c06, pts06):
    """The wrong duality sign, or a perturbed potential, must not pass."""
    x, y = pts06[:, 1], pts06[:, 2]
    plus = alpha_fn("plus")
    wrong = pde_residual("minus", c06, x, y, alpha=plus)
    assert np.max(np.abs(wrong)) > 1e-2
    bumped = pde_residual("plus", c06, x, y, alpha=lambda c, u, v: plus(c, u, v) + 1e-3 * u * u)
    assert np.max(np.abs(bumped)) > 1e-6


@pytest.mark.parametrize("xi,kappa", PARAMS)
def test_reduced_vacuum_equations(xi, kappa):
    c = derive_constants(ChenTeoParams(xi, kappa))
    pts = interior_points(c, 200, seed=8)
    res = reduced_system_residuals(c, pts[:, 1], pts[:, 2])
    assert np.max(np.abs(res["lambda"])) < 1e-8
    assert np.max(np.abs(res["zeta"])) < 1e-8


@pytest.mark.parametrize("xi", [0.55, 0.6, 0.65])
@pytest.mark.parametrize("kind", KINDS)
def test_corner_values_are_limits(kind, xi):
    c = derive_constants(ChenTeoParams(xi, 1.0))
    cv = corner_values(c)
    f = alpha_fn(kind)
    for i in (1, 2, 3):
        # the approach is linear in eps, so one Richardson step removes the leading error
        lim = 2 * corner_limit(c, f, i, 1e-6) - corner_limit(c, f, i, 2e-6)
        assert lim == pytest.approx(cv[kind][i - 1], rel=1e-8)


def test_alpha_plus_at_infinity(c06):
    cv = corner_values(c06)
    x2 = c06.x2
    e = np.array([1e-6, 2e-6])
    vals = alpha_eval("plus", c06, x2 + e * (c06.x3 - x2), x2 - e * (x2 - c06.x1))
    assert 2 * vals[0] - vals[1] == pytest.approx(cv.at_infinity[PotentialKind.ALPHA_PLUS], rel=1e-8)
    assert cv.at_infinity[PotentialKind.ALPHA_MINUS] == 0.0


@pytest.mark.parametrize("kind", KINDS)
def test_forms_have_the_stated_duality(kind, c06, pts06):
    w = omega_eval(kind, c06, pts06)
    star = hodge(ChenTeoChart(c06).jet(pts06), w.components, 2)
    s = PotentialKind.parse(kind).duality
    assert np.max(np.abs(star - s * w.components)) < 1e-8 * w.max_abs()


def test_named_forms_are_killing_forms(c06, pts06):
    kf = killing_forms_at(c06, pts06, 0)
    for kind, ref in (("plus", kf.omega_plus), ("minus", kf.omega_minus)):
        nf = named_form(kind, c06, pts06)
        assert np.max(np.abs(nf.components - ref.components)) < 1e-12 * ref.max_abs()
    assert NAMED_SIGN == -1.0


@pytest.mark.parametrize("kind", KINDS)
def test_gauge_potential(kind, c06, pts06):
    w = omega_eval(kind, c06, pts06)
    dA = gauge_potential(kind, c06, pts06).d_components
    assert np.max(np.abs(dA.components - w.components)) < 1e-12 * w.max_abs()
    assert np.max(np.abs(gauge_divergence(kind, c06, pts06))) < 1e-12


def test_gauge_outside_rectangle(c06):
    # y = 0, where the potential is singular, already lies outside the rectangle
    pts = np.array([[0.0, 0.5 * (c06.x2 + c06.x3), 0.0, 0.0]])
    with pytest.raises(DomainError):
        gauge_potential("plus", c06, pts)


@pytest.mark.parametrize("kind", KINDS)
def test_forms_are_closed(kind, c06):
    """d w = 0 by eighth-order finite differences of the assembled components."""
    pts = interior_points(c06, 20, seed=9, margin=0.1)
    h = (1e-3 * (c06.x3 - c06.x2), 1e-3 * (c06.x2 - c06.x1))
    d = np.zeros((len(pts), 2, 4, 4))
    for axis in (0, 1):
        for wgt, off in zip(D1, OFFS):
            if wgt:
                q = pts.copy()
                q[:, 1 + axis] += off * h[axis]
                d[:, axis] += wgt * omega_eval(kind, c06, q).components / h[axis]
    w = omega_eval(kind, c06, pts).components
    scale = np.max(np.abs(d))
    for m in (0, 3):
        # (dw)_{x y m} = d_x w_{y m} - d_y w_{x m}; the other components vanish by symmetry
        closure = d[:, 0, 2, m] - d[:, 1, 1, m]
        assert np.max(np.abs(closure)) < 1e-7 * scale
    assert np.max(np.abs(w)) > 0


@pytest.mark.parametrize("kind", KINDS)
def test_density_routes_agree(kind, c_generic):
    pts = interior_points(c_generic, 100, seed=10)
    a = energy_density(kind, c_generic, pts)
    b = energy_density_from_form(kind, c_generic, pts)
    assert np.all(a > 0)
    assert np.max(np.abs(a - b) / a) < 1e-10


@pytest.mark.parametrize("xi", [0.55, 0.6, 0.65])
@pytest.mark.parametrize("kind", KINDS)
def test_decay_constants(kind, xi):
    c = derive_constants(ChenTeoParams(xi, 1.5))
    fit, err = fit_decay_constant(kind, c)
    assert fit == pytest.approx(asymptotic_decay_constant(kind, c), rel=1e-5)
    ratio = asymptotic_decay_constant(kind, c) / asymptotic_decay_constant(kind, c, printed=True)
    if kind is PotentialKind.ALPHA_TWO:
        assert ratio == pytest.approx(2 * ((1 - 4 * xi**2) / (1 - 4 * xi**4)) ** 2, rel=1e-12)
    else:
        assert ratio == pytest.approx(2.0, rel=1e-14)


def test_kind_parsing():
    assert PotentialKind.parse("+") is PotentialKind.ALPHA_PLUS
    assert PotentialKind.parse("alpha_two") is PotentialKind.ALPHA_TWO
    with pytest.raises(ValueError):
        PotentialKind.parse("alpha_three")
