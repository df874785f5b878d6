"""Exterior algebra, jet calculus and curvature endomorphisms."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from reillylab.forms import algebra
from reillylab.forms import jets as J
from reillylab.forms.fields import (constant_weight, coordinate_form, linear_weight, quadratic_weight,
                                    random_polynomial_form)
from reillylab.forms.operators import (ForbiddenParameterError, curvature_matrix, eval_d,
                                       eval_delta_f, eval_laplacian_f, operator_lower_bound,
                                       weighted_mean_curvature)

degrees = st.sampled_from([(2, 0), (2, 1), (2, 2), (3, 0), (3, 1), (3, 2), (3, 3)])


@pytest.mark.parametrize("n,p,expected", [(2, 0, 1), (2, 1, 2), (3, 1, 3), (3, 2, 3), (3, 3, 1)])
def test_dimension(n, p, expected):
    assert algebra.dim(n, p) == expected
    assert len(algebra.multi_indices(n, p)) == expected


@given(degrees, st.integers(0, 2**31 - 1))
@settings(max_examples=40, deadline=None)
def test_star_squares_to_sign(np_, seed):
    n, p = np_
    w = np.random.default_rng(seed).standard_normal(algebra.dim(n, p))
    twice = algebra.hodge_star(algebra.hodge_star(w, n, p), n, n - p)
    assert_allclose(twice, (-1) ** (p * (n - p)) * w, atol=1e-13)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_wedge_graded_commutative(seed):
    rng = np.random.default_rng(seed)
    n = 3
    for p, q in [(1, 1), (1, 2), (2, 1)]:
        a = rng.standard_normal(algebra.dim(n, p))
        b = rng.standard_normal(algebra.dim(n, q))
        assert_allclose(algebra.wedge(a, b, n, p, q), (-1) ** (p * q) * algebra.wedge(b, a, n, q, p),
                        atol=1e-13)


def test_star_matches_wedge_pairing(rng):
    # a ^ *b = <a, b> vol
    n, p = 3, 1
    a, b = rng.standard_normal(3), rng.standard_normal(3)
    top = algebra.wedge(a, algebra.hodge_star(b, n, p), n, p, n - p)
    assert_allclose(top, [a @ b], rtol=1e-13)


@given(degrees, st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_d_squared_vanishes(np_, seed):
    n, p = np_
    if p > n - 2:
        return
    rng = np.random.default_rng(seed)
    w = random_polynomial_form(n, p, 3, rng)
    x = rng.uniform(-0.5, 0.5, (5, n))
    dd = J.exterior_d(J.exterior_d(w.jet(x, 2)))
    assert_allclose(dd.value, 0.0, atol=1e-11)


@given(degrees, st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_weighted_codifferential_squares_to_zero(np_, seed):
    n, p = np_
    if p < 2:
        return
    rng = np.random.default_rng(seed)
    w = random_polynomial_form(n, p, 3, rng)
    f = quadratic_weight(n, 0.7)
    x = rng.uniform(-0.5, 0.5, (5, n))
    once = J.weighted_codifferential(w.jet(x, 2), f.jet(x, 3))
    twice = J.weighted_codifferential(once, f.jet(x, 3))
    assert_allclose(twice.value, 0.0, atol=1e-11)


def test_coordinate_one_form_is_exact(rng):
    # sum x_i dx_i = d(|x|^2 / 2) is closed
    w = coordinate_form(3, 1)
    x = rng.uniform(-1, 1, (6, 3))
    assert_allclose(eval_d(w, x).coeffs, 0.0, atol=1e-14)


def test_delta_f_of_radial_form():
    # delta (x dx + y dy) = -2, and grad f -| w = kappa |x|^2 for f = kappa |x|^2 / 2
    w = coordinate_form(2, 1)
    x = np.array([[0.3, -0.4]])
    val = eval_delta_f(w, quadratic_weight(2, 1.5), x).coeffs
    assert_allclose(val.ravel(), [-2.0 + 1.5 * 0.25], rtol=1e-13)


@pytest.mark.parametrize("n,p", [(2, 1), (3, 1), (3, 2)])
def test_laplacian_routes_agree(n, p, rng):
    w = random_polynomial_form(n, p, 3, rng)
    f = linear_weight(n, [0.3, -0.2, 0.1][:n])
    x = rng.uniform(-0.5, 0.5, (8, n))
    a = eval_laplacian_f(w, f, x, "exterior").coeffs
    b = eval_laplacian_f(w, f, x, "lie").coeffs
    assert_allclose(a, b, atol=1e-11)


@pytest.mark.parametrize("n,p", [(2, 1), (3, 1), (3, 2), (3, 3)])
def test_quadratic_weight_curvature_is_scalar(n, p):
    # Hess f = kappa I acts on p-forms as kappa p
    kappa = 0.8
    A = curvature_matrix("T", quadratic_weight(n, kappa), np.zeros(n), p)
    assert_allclose(A, kappa * p * np.eye(algebra.dim(n, p)), atol=1e-14)


def test_flat_weyl_term_vanishes():
    A = curvature_matrix("W", quadratic_weight(3, 1.0), np.zeros(3), 2)
    assert_allclose(A, 0.0)


@pytest.mark.parametrize("N", [0.0, 1.0, 2.0])
def test_forbidden_dimension_parameter(N):
    with pytest.raises(ForbiddenParameterError):
        curvature_matrix("ricN", quadratic_weight(2, 1.0), np.zeros(2), 1, N=N)


def test_ric_N_lowers_along_gradient():
    # at x = e_1: ric_N on dx_1 is kappa - kappa^2 / (N - n + p - 1)
    f = quadratic_weight(2, 1.0)
    A = curvature_matrix("ricN", f, np.array([1.0, 0.0]), 1, N=4.0)
    assert_allclose(np.diag(A), [1.0 - 1.0 / 2.0, 1.0], rtol=1e-13)


def test_certified_ricci_bound(disk):
    lb = operator_lower_bound("ric", quadratic_weight(2, 1.0), disk, 1)
    assert lb.c_min <= lb.sampled_min
    assert lb.sampled_min == pytest.approx(1.0)
    assert lb.c_min > 1.0 - 1e-6
    assert operator_lower_bound("ric", constant_weight(2), disk, 1).sampled_min == 0.0


def test_weighted_mean_curvature():
    assert weighted_mean_curvature(1.0, 2.0, 3) == pytest.approx(2.0)
