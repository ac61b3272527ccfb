import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import eval_legendre

from intrusive_uq.random_space import (
    bracket,
    build_total_degree_basis,
    cc_points,
    clenshaw_curtis_1d,
    eval_basis,
    gauss_legendre_1d,
    gauss_lobatto_1d,
    is_nested,
    legendre_orthonormal,
    sparse_quadrature,
    tensor_quadrature,
)


def monomial_moment(alpha):
    """E[prod xi_n^alpha_n] for xi uniform on [-1, 1]^p."""
    return math.prod(0.0 if a % 2 else 1.0 / (a + 1) for a in alpha)


# -- basis ---------------------------------------------------------------------


@pytest.mark.parametrize("M,p,N", [(9, 2, 55), (0, 3, 1), (3, 1, 4)])
def test_basis_size_examples(M, p, N):
    assert build_total_degree_basis(M, p).N == N


@given(st.integers(0, 10), st.integers(1, 4))
def test_basis_size_is_binomial(M, p):
    assert build_total_degree_basis(M, p).N == math.comb(M + p, p)


def test_graded_lexicographic_order():
    basis = build_total_degree_basis(2, 2)
    assert basis.indices == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
    assert list(basis.degrees) == [0, 1, 1, 2, 2, 2]


@given(st.integers(0, 6), st.integers(0, 6), st.integers(1, 3))
def test_lower_degree_basis_is_prefix(M1, M2, p):
    lo, hi = sorted((M1, M2))
    small, big = build_total_degree_basis(lo, p), build_total_degree_basis(hi, p)
    assert big.indices[: small.N] == small.indices
    assert big.count_up_to(lo) == small.N


def test_first_basis_function_is_one(rng):
    basis = build_total_degree_basis(4, 3)
    xi = rng.uniform(-1, 1, size=(20, 3))
    assert np.all(eval_basis(basis, xi)[:, 0] == 1.0)


def test_degree_one_value_at_one():
    basis = build_total_degree_basis(1, 1)
    assert eval_basis(basis, np.array([1.0]))[1] == pytest.approx(np.sqrt(3.0), abs=1e-14)


def test_legendre_matches_scipy(rng):
    x = rng.uniform(-1, 1, 50)
    got = legendre_orthonormal(x, 10)
    for n in range(11):
        np.testing.assert_allclose(got[:, n], np.sqrt(2 * n + 1) * eval_legendre(n, x), rtol=1e-12, atol=1e-12)


def test_eval_basis_rejects_points_outside_support():
    with pytest.raises(ValueError):
        eval_basis(build_total_degree_basis(2, 1), np.array([1.5]))


@given(st.integers(0, 10), st.integers(1, 3))
def test_gram_matrix_is_identity(M, p):
    basis = build_total_degree_basis(M, p)
    rule = tensor_quadrature("gauss_legendre", M + 1, p)
    phi = eval_basis(basis, rule.points)
    gram = (phi * rule.wf[:, None]).T @ phi
    np.testing.assert_allclose(gram, np.eye(basis.N), atol=1e-10)


# -- univariate rules ----------------------------------------------------------


@pytest.mark.parametrize("level,n", [(0, 1), (1, 3), (2, 5), (3, 9), (4, 17)])
def test_cc_point_counts(level, n):
    assert cc_points(level) == n
    assert clenshaw_curtis_1d(level)[0].size == n


@pytest.mark.parametrize("level", [1, 2, 3, 4, 5])
def test_cc_weights_match_moment_system(level):
    x, w = clenshaw_curtis_1d(level)
    n = x.size
    V = np.polynomial.legendre.legvander(x, n - 1).T
    moments = np.zeros(n)
    moments[0] = 2.0
    np.testing.assert_allclose(w, np.linalg.solve(V, moments), atol=1e-12)


@given(st.integers(1, 15))
def test_gauss_legendre_exactness(Q):
    rule = tensor_quadrature("gauss_legendre", Q, 1)
    deg = 2 * Q - 1
    for k in (deg - 1, deg):
        assert bracket(rule, rule.points[:, 0] ** k) == pytest.approx(monomial_moment([k]), abs=1e-12)


@given(st.integers(2, 15))
def test_gauss_lobatto_exactness(n):
    x, w = gauss_lobatto_1d(n)
    assert x[0] == -1.0 and x[-1] == 1.0
    for k in range(2 * n - 2):
        assert np.dot(w, x**k) / 2.0 == pytest.approx(monomial_moment([k]), abs=1e-12)


def test_xi_squared_moment():
    rule = tensor_quadrature("gauss_legendre", 2, 1)
    assert bracket(rule, lambda xi: xi[:, 0] ** 2) == pytest.approx(1.0 / 3.0, abs=1e-15)


@pytest.mark.parametrize(
    "rule",
    [
        tensor_quadrature("gauss_legendre", 4, 2),
        tensor_quadrature("clenshaw_curtis", [2, 3, 1]),
        sparse_quadrature("clenshaw_curtis", 5, 3),
    ],
    ids=["gl", "cc", "sparse"],
)
def test_constant_bracket_is_one(rule):
    assert bracket(rule, np.ones(rule.Q)) == pytest.approx(1.0, abs=1e-12)


# -- tensor and sparse rules ---------------------------------------------------


@pytest.mark.parametrize("level,Q", [(1, 27), (2, 125), (3, 729)])
def test_tensor_cc_counts(level, Q):
    assert tensor_quadrature("clenshaw_curtis", level, 3).Q == Q


def test_cc_level_four_one_dimension():
    assert tensor_quadrature("clenshaw_curtis", 4, 1).Q == 17


@pytest.mark.parametrize("level,Q", [(0, 1), (1, 7), (2, 25), (3, 69), (4, 177), (5, 441)])
def test_sparse_counts(level, Q):
    assert sparse_quadrature("clenshaw_curtis", level, 3).Q == Q


def test_sparse_rule_has_negative_weights():
    rule = sparse_quadrature("clenshaw_curtis", 5, 3)
    assert rule.weights.min() < 0.0


@pytest.mark.parametrize("level", [0, 1, 2, 3, 4])
def test_sparse_one_dimension_equals_cc(level):
    sparse = sparse_quadrature("clenshaw_curtis", level, 1)
    x, w = clenshaw_curtis_1d(level)
    np.testing.assert_allclose(sparse.points[:, 0], x, atol=1e-15)
    np.testing.assert_allclose(sparse.weights, w, atol=1e-14)


@pytest.mark.parametrize("level,p", [(1, 2), (2, 3), (3, 2), (4, 3), (5, 3)])
def test_sparse_exactness(level, p):
    rule = sparse_quadrature("clenshaw_curtis", level, p)
    deg = 2 * level + 1
    for alpha in itertools.product(range(deg + 1), repeat=p):
        if sum(alpha) > deg:
            continue
        vals = np.prod(rule.points ** np.array(alpha), axis=1)
        assert bracket(rule, vals) == pytest.approx(monomial_moment(alpha), abs=1e-10)


@given(st.integers(1, 6))
def test_cc_nesting_bit_exact(level):
    fine = tensor_quadrature("clenshaw_curtis", level, 1)
    coarse = tensor_quadrature("clenshaw_curtis", level - 1, 1)
    f = lambda xi: np.sin(3.0 * xi[:, 0]) + xi[:, 0] ** 3
    assert np.array_equal(f(fine.points)[fine.nesting], f(coarse.points))
    assert is_nested(coarse, fine)


def test_tensor_and_sparse_nesting():
    assert is_nested(tensor_quadrature("clenshaw_curtis", 1, 3), tensor_quadrature("clenshaw_curtis", 2, 3))
    assert is_nested(sparse_quadrature("clenshaw_curtis", 2, 3), sparse_quadrature("clenshaw_curtis", 5, 3))
    assert not is_nested(tensor_quadrature("gauss_legendre", 3, 1), tensor_quadrature("gauss_legendre", 4, 1))


def test_invalid_inputs():
    with pytest.raises(ValueError):
        tensor_quadrature("simpson", 2, 1)
    with pytest.raises(ValueError):
        sparse_quadrature("gauss_legendre", 2, 2)
    with pytest.raises(ValueError):
        gauss_lobatto_1d(1)
    with pytest.raises(ValueError):
        gauss_legendre_1d(0)
