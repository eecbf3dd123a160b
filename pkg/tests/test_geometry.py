import math

import numpy as np
import pytest

from chenteo.chen_teo import ChenTeoChart, ORIENTATION, curvature_at
from chenteo.errors import DomainError, ParamError, SingularMetric
from chenteo.geometry.core import (
    FunctionChart, Jet2Metric, TwoFormValue, curvature, curvature_from_jet, equilibrated_cond,
    first_bianchi, hodge, hodge_star, killing_forms, laplace_beltrami, lie_derivative_coordinate,
    two_form_norm2, wedge_2_2,
)
from chenteo.geometry.fixtures import EuclideanKerr, FlatModel, random_points, reference_metric

from conftest import rectangle_points
from fd_oracle import fd_jet


def _rel(a, b):
    scale = np.max(np.abs(b), axis=tuple(range(1, b.ndim)), keepdims=True)
    return float(np.max(np.abs(a - b) / scale))


def test_jets_match_finite_differences_on_chen_teo(c06):
    chart = ChenTeoChart(c06)
    pts = rectangle_points(c06, 100, seed=5, margin=0.1)
    h = np.array([0.0, 1e-3 * (c06.x3 - c06.x2), 1e-3 * (c06.x2 - c06.x1), 0.0])
    g, dg, ddg = fd_jet(chart.metric, pts, h)
    jet = chart.jet(pts)
    assert _rel(g, jet.g) < 1e-13
    assert _rel(dg, jet.dg) < 1e-6
    assert _rel(ddg, jet.ddg) < 1e-6


def test_jets_match_finite_differences_on_kerr():
    chart = EuclideanKerr(1.0, 0.4)
    pts = random_points(chart, 30, seed=1)
    g, dg, ddg = fd_jet(chart.metric, pts, np.array([0.0, 1e-3, 1e-3, 0.0]))
    jet = chart.jet(pts)
    assert _rel(dg, jet.dg) < 1e-8
    assert _rel(ddg, jet.ddg) < 1e-7


def test_flat_model_is_flat():
    chart = FlatModel()
    cb = curvature(chart, random_points(chart, 40, seed=2))
    assert np.max(np.abs(cb.riemann)) < 1e-12


@pytest.mark.parametrize("m,a", [(1.0, 0.0), (1.0, 0.3), (2.0, 0.5)])
def test_kerr_is_ricci_flat_and_obeys_bianchi(m, a):
    chart = reference_metric("euclidean_kerr", m=m, a=a)
    cb = curvature(chart, random_points(chart, 40, seed=3))
    scale = 1.0 + np.sqrt(np.abs(cb.kretschmann))
    assert np.max(cb.max_ricci_frame() / scale) < 1e-12
    assert np.max(np.abs(first_bianchi(cb.riemann))) < 1e-12
    # R_{mnrs} antisymmetric in the last pair
    assert np.max(np.abs(cb.riemann + np.swapaxes(cb.riemann, -1, -2))) < 1e-13
    assert np.all(cb.kretschmann > 0)


def test_fixture_parameters_are_validated():
    with pytest.raises(ParamError):
        EuclideanKerr(0.0)
    with pytest.raises(ParamError):
        EuclideanKerr(1.0, -0.1)
    with pytest.raises(ParamError):
        reference_metric("taub-nut")
    with pytest.raises(DomainError):
        EuclideanKerr(1.0).jet(np.array([[0.0, 1.5, 1.0, 0.0]]))


def test_hodge_star_squares_to_one(c06, pts06):
    jet = ChenTeoChart(c06).jet(pts06)
    rng = np.random.default_rng(0)
    a = rng.normal(size=(len(pts06), 4, 4))
    w = TwoFormValue(a - np.swapaxes(a, 1, 2))
    back = hodge_star(jet, hodge_star(jet, w))
    assert np.max(np.abs(back.components - w.components) / np.max(np.abs(w.components))) < 1e-8


def test_hodge_norm_identity_and_orientation():
    g = np.diag([1.0, 2.0, 3.0, 4.0])[None]
    w = np.zeros((1, 4, 4))
    w[0, 0, 1], w[0, 1, 0] = 1.0, -1.0
    jet = Jet2Metric(g, np.zeros((1, 4, 4, 4)), np.zeros((1, 4, 4, 4, 4)))
    vol = math.sqrt(24.0)
    assert np.isclose(wedge_2_2(w, hodge(jet, w, 2))[0], two_form_norm2(jet, w)[0] * vol)
    flipped = Jet2Metric(g, jet.dg, jet.ddg, -1)
    assert np.allclose(hodge(flipped, w, 2), -hodge(jet, w, 2))
    assert ORIENTATION == -1


def test_chen_teo_ricci_symmetric_and_isometries(c06, pts06):
    cb = curvature_at(c06, pts06)
    assert np.max(np.abs(cb.ricci - np.swapaxes(cb.ricci, 1, 2))) < 1e-10 * np.max(np.abs(cb.ricci) + 1)
    jet = ChenTeoChart(c06).jet(pts06)
    for k in (0, 3):
        assert np.max(np.abs(lie_derivative_coordinate(jet, k))) == 0.0


def test_killing_forms_self_dual_split():
    chart = EuclideanKerr(1.0, 0.3)
    kf = killing_forms(chart, 0, random_points(chart, 10, seed=4))
    sp = hodge_star(chart.jet(random_points(chart, 10, seed=4)), kf.omega_plus)
    assert np.allclose(sp.components, kf.omega_plus.components, atol=1e-12)
    assert np.allclose((kf.omega_plus + kf.omega_minus).components, 2 * kf.dK.components)


def test_laplacian_of_flat_3d():
    chart = FunctionChart(3, lambda c: [[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]])
    pts = np.random.default_rng(1).normal(size=(5, 3))
    lap = laplace_beltrami(chart, lambda v: v[0] ** 2 + 3 * v[1] ** 2 - v[2] ** 2, pts)
    assert np.allclose(lap, 6.0)


def test_singular_metric_detected():
    g = np.diag([1.0, 1.0, 1.0, 0.0])[None]
    jet = Jet2Metric(g, np.zeros((1, 4, 4, 4)), np.zeros((1, 4, 4, 4, 4)))
    with pytest.raises(SingularMetric):
        jet.check()
    bad = Jet2Metric(np.diag([1.0, 1.0, -1.0, -1.0])[None], jet.dg, jet.ddg)
    with pytest.raises(SingularMetric):
        bad.check()


def test_equilibration_removes_diagonal_scaling():
    g = np.diag([1e-8, 1.0, 1e8, 1e12])[None]
    assert np.isclose(equilibrated_cond(g)[0], 1.0)
    assert np.allclose(curvature_from_jet(
        Jet2Metric(g, np.zeros((1, 4, 4, 4)), np.zeros((1, 4, 4, 4, 4)))).riemann, 0.0)
