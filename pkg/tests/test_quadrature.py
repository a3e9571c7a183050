import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apnn.errors import ConfigError, ShapeError
from apnn.physics.fields import maxwellian
from apnn.quadrature import flux_moment, gauss_legendre, legendre_roots, moment, project_pi


@pytest.mark.parametrize("n", [1, 2, 5, 16, 32, 64])
def test_roots_match_numpy_leggauss(n):
    x, w = legendre_roots(n)
    xr, wr = np.polynomial.legendre.leggauss(n)
    np.testing.assert_allclose(x, xr, atol=1e-14)
    np.testing.assert_allclose(w, wr, rtol=1e-12, atol=1e-15)


def test_rule_is_symmetric_and_sums_to_length():
    r = gauss_legendre(32, (-6.0, 6.0))
    np.testing.assert_allclose(r.nodes, -r.nodes[::-1], atol=0)
    np.testing.assert_allclose(r.weights, r.weights[::-1], atol=0)
    assert abs(r.weights.sum() - 12.0) < 1e-13
    assert r.length == 12.0
    assert np.all(np.diff(r.nodes) > 0)


def test_n32_integrates_monomials_to_degree_63():
    r = gauss_legendre(32, (-6.0, 6.0))
    for k in range(64):
        exact = (6.0 ** (k + 1) - (-6.0) ** (k + 1)) / (k + 1)
        scale = 2 * 6.0 ** (k + 1) / (k + 1)
        assert abs(r.weights @ r.nodes**k - exact) <= 1e-12 * scale


def test_degree_2n_is_not_exact():
    r = gauss_legendre(4, (-1.0, 1.0))
    assert abs(r.weights @ r.nodes**8 - 2.0 / 9.0) > 1e-6


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 24), a=st.floats(-10, 10), length=st.floats(0.1, 20),
       data=st.data())
def test_exact_for_any_polynomial_up_to_2n_minus_1(n, a, length, data):
    b = a + length
    r = gauss_legendre(n, (a, b))
    deg = data.draw(st.integers(0, 2 * n - 1))
    coef = np.array(data.draw(st.lists(st.floats(-1, 1), min_size=deg + 1, max_size=deg + 1)))
    p = np.polynomial.Polynomial(coef)
    exact = p.integ()(b) - p.integ()(a)
    scale = np.polynomial.Polynomial(np.abs(coef)).integ()(max(abs(a), abs(b))) * 2 + 1e-300
    assert abs(r.weights @ p(r.nodes) - exact) <= 1e-11 * scale


def test_moments_of_the_maxwellian():
    r = gauss_legendre(32, (-6.0, 6.0))
    m = maxwellian(r.nodes)
    # mass outside [-6, 6] is erfc(6/sqrt 2) ~ 2e-9
    assert abs(moment(r, m) - 1.0) < 3e-9
    assert abs(flux_moment(r, m)) < 1e-15
    shifted = maxwellian(r.nodes, 0.7)
    # the shifted tail beyond v = 6 starts 5.3 standard deviations out
    assert abs(flux_moment(r, shifted) + 0.7) < 1e-6


def test_moments_act_on_the_last_axis():
    r = gauss_legendre(8, (-2.0, 2.0))
    s = np.random.default_rng(0).normal(size=(3, 5, 8))
    np.testing.assert_allclose(moment(r, s), s @ r.weights)
    np.testing.assert_allclose(flux_moment(r, s), s @ (r.weights * r.nodes))


def test_projection_is_idempotent_for_a_normalised_maxwellian():
    r = gauss_legendre(32, (-6.0, 6.0))
    m = maxwellian(r.nodes) / moment(r, maxwellian(r.nodes))
    f = np.random.default_rng(1).normal(size=(4, 32))
    once = project_pi(r, f, np.broadcast_to(m, f.shape))
    twice = project_pi(r, once, np.broadcast_to(m, f.shape))
    np.testing.assert_allclose(once, twice, atol=1e-14)
    np.testing.assert_allclose(moment(r, f - once), 0.0, atol=1e-13)


def test_bad_inputs():
    with pytest.raises(ConfigError):
        gauss_legendre(0, (-1, 1))
    with pytest.raises(ConfigError):
        gauss_legendre(4, (1, 1))
    with pytest.raises(ConfigError):
        gauss_legendre(4, (-np.inf, 1))
    r = gauss_legendre(4, (-1, 1))
    with pytest.raises(ShapeError):
        moment(r, np.ones(5))
