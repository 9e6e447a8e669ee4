import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from odebound import jet
from odebound.jet import Jet, SingularExpansionError, taylor_coefficients


def test_square_at_three():
    F = taylor_coefficients(lambda u, t: u**2, 3.0, 0.0, 3)
    assert F.tolist() == [9.0, 6.0, 1.0, 0.0]


def test_saturating_term_first_coefficient():
    # beta (1 - v^2) / (1 + v^2)^2 = -40 * (-3) / 25
    F = taylor_coefficients(lambda u, t: -40.0 * u / (1 + u**2), 2.0, 0.0, 1)
    assert F[1] == pytest.approx(4.8, rel=1e-14)


def test_exponential_series():
    F = taylor_coefficients(lambda u, t: jet.exp(u), 0.0, 0.0, 8)
    expected = [1 / math.factorial(n) for n in range(9)]
    assert np.allclose(F, expected, rtol=1e-14, atol=0)


def test_independent_of_u_gives_zero_rows():
    F = taylor_coefficients(lambda u, t: np.sin(t), np.zeros(4), np.linspace(0, 1, 4), 3)
    assert F.shape == (4, 4)
    assert np.array_equal(F[0], np.sin(np.linspace(0, 1, 4)))
    assert not np.any(F[1:])


def test_batched_matches_scalar():
    f = lambda u, t: t * u / (1 + u**2) + jet.exp(0.3 * u) - u**3  # noqa: E731
    v = np.array([-1.3, 0.2, 2.5])
    t = np.array([0.0, 0.5, 1.0])
    batched = taylor_coefficients(f, v, t, 5)
    for i in range(3):
        assert np.allclose(batched[:, i], taylor_coefficients(f, v[i], t[i], 5), rtol=1e-14, atol=1e-15)


def test_division_by_zero_constant_term():
    with pytest.raises(SingularExpansionError):
        Jet.variable(0.0, 3).__rtruediv__(1.0)
    with pytest.raises(SingularExpansionError):
        jet.log(Jet.variable(-1.0, 2))


def test_against_sympy_derivatives():
    u = sp.Symbol("u")
    expr = -10 * u * (1 - u / 5) + 2 * u - 40 * u / (1 + u**2)
    f = lambda w, t: -10 * w * (1 - w / 5) + 2 * w - 40 * w / (1 + w**2)  # noqa: E731
    v0 = 1.7
    F = taylor_coefficients(f, v0, 0.0, 6)
    for n in range(7):
        exact = float(sp.diff(expr, u, n).subs(u, v0) / sp.factorial(n))
        assert F[n] == pytest.approx(exact, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize(
    "f, g",
    [
        (lambda u: jet.sqrt(u), lambda u: np.sqrt(u)),
        (lambda u: jet.log(u), lambda u: np.log(u)),
        (lambda u: u**1.5, lambda u: u**1.5),
        (lambda u: 2.0**u, lambda u: 2.0**u),
        (lambda u: 1 / (3 + u), lambda u: 1 / (3 + u)),
    ],
)
def test_primitives_against_finite_differences(f, g):
    v0, h = 1.3, 1e-3
    F = taylor_coefficients(lambda u, t: f(u), v0, 0.0, 2)
    d1 = (g(v0 + h) - g(v0 - h)) / (2 * h)
    d2 = (g(v0 + h) - 2 * g(v0) + g(v0 - h)) / h**2
    assert F[1] == pytest.approx(d1, rel=1e-5)
    assert F[2] == pytest.approx(d2 / 2, rel=1e-5)


@given(
    a=st.floats(-3, 3),
    b=st.floats(-3, 3),
    v=st.floats(-2, 2),
)
def test_polynomial_product_rule(a, b, v):
    # (a + u)(b + u) = ab + (a+b) u + u^2 expanded about v
    F = taylor_coefficients(lambda u, t: (a + u) * (b + u), v, 0.0, 3)
    assert np.allclose(F, [(a + v) * (b + v), a + b + 2 * v, 1.0, 0.0], rtol=1e-12, atol=1e-12)


@given(v=st.floats(0.1, 5.0), p=st.integers(-4, 6))
def test_integer_power(v, p):
    F = taylor_coefficients(lambda u, t: u**p, v, 0.0, 3)
    exact = [math.comb(p, n) * v ** (p - n) if p >= 0 else _neg_binom(p, n) * v ** (p - n) for n in range(4)]
    assert np.allclose(F, exact, rtol=1e-10, atol=1e-12)


def _neg_binom(p, n):
    out = 1.0
    for k in range(n):
        out *= (p - k) / (k + 1)
    return out
