import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from chenteo.geometry import jet as J
from chenteo.geometry.jet import Jet, variables


def _pts(a, b):
    return np.array([[a, b]])


def test_product_rule():
    x, y = variables(_pts(1.5, -0.5))
    f = x * x * y
    assert np.allclose(f.val, 1.5**2 * -0.5)
    assert np.allclose(f.grad, [[2 * 1.5 * -0.5, 1.5**2]])
    assert np.allclose(f.hess, [[[2 * -0.5, 2 * 1.5], [2 * 1.5, 0.0]]])


def test_division_and_power():
    x, y = variables(_pts(2.0, 3.0))
    f = x / y
    assert np.allclose(f.grad, [[1 / 3, -2 / 9]])
    assert np.allclose(f.hess[0, 1, 1], 2 * 2 / 27)
    g = x**3
    assert np.allclose(g.grad[0, 0], 12.0)
    assert np.allclose(g.hess[0, 0, 0], 12.0)


def test_constants_mix_with_arrays():
    x, _ = variables(np.array([[1.0, 0.0], [2.0, 0.0]]))
    f = 3.0 - np.array([1.0, 2.0]) * x
    assert np.allclose(f.val, [2.0, -1.0])
    assert np.allclose(f.grad[:, 0], [-1.0, -2.0])
    c = Jet.constant(4.0, 2, 2)
    assert np.all(c.grad == 0) and np.all(c.hess == 0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(-2.0, 2.0))
def test_elementary_functions_match_calculus(a, b):
    x, y = variables(_pts(a, b))
    f = J.exp(x * y) + J.log(x) * J.sin(y) - J.sqrt(x) * J.cos(y)
    gx = b * np.exp(a * b) + np.sin(b) / a - np.cos(b) / (2 * np.sqrt(a))
    gy = a * np.exp(a * b) + np.log(a) * np.cos(b) + np.sqrt(a) * np.sin(b)
    gxy = np.exp(a * b) * (1 + a * b) + np.cos(b) / a + np.sin(b) / (2 * np.sqrt(a))
    assert np.allclose(f.grad[0], [gx, gy], rtol=1e-12, atol=1e-12)
    assert np.isclose(f.hess[0, 0, 1], gxy, rtol=1e-12, atol=1e-12)
    assert np.allclose(f.hess[0], f.hess[0].T)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.5, 2.0), st.floats(0.5, 2.0))
def test_reciprocal_is_inverse(a, b):
    x, y = variables(_pts(a, b))
    f = x * x + y
    one = f * f.reciprocal()
    assert np.allclose(one.val, 1.0)
    assert np.allclose(one.grad, 0.0, atol=1e-13)
    assert np.allclose(one.hess, 0.0, atol=1e-12)


def test_value_strips_jets():
    x, _ = variables(_pts(1.0, 2.0))
    assert np.allclose(J.value(x * 2), [2.0])
    assert J.value(5.0) == 5.0
