import json
import math

import numpy as np
import pytest
from scipy.special import eval_legendre

from specweight.errors import InvalidArgument
from specweight.polycore import (LEGENDRE, MONOMIAL, Polynomial, axpy, basis_matrix, basis_size,
                                 enumerate_multi_indices, evaluate, to_monomial)


def test_basis_size_small_cases():
    assert basis_size(1, 0) == 1
    assert basis_size(2, 2) == 6
    assert basis_size(2, 22) == 276
    assert basis_size(3, 4) == 35


def test_basis_size_rejects_bad_arguments():
    with pytest.raises(InvalidArgument):
        basis_size(0, 3)
    with pytest.raises(InvalidArgument):
        basis_size(2, -1)


def test_basis_size_overflow():
    with pytest.raises(OverflowError):
        basis_size(40, 400)


def test_graded_lex_order_2d():
    assert enumerate_multi_indices(2, 2).index_list == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))


def test_graded_lex_order_3d_degree_one():
    assert enumerate_multi_indices(3, 1).index_list == ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1))


def test_block_and_count():
    o = enumerate_multi_indices(2, 4)
    assert list(o.block(0)) == [0]
    assert list(o.block(2)) == [3, 4, 5]
    assert o.count(3) == 10
    with pytest.raises(InvalidArgument):
        o.block(5)


def test_position_rejects_missing_index():
    with pytest.raises(InvalidArgument):
        enumerate_multi_indices(2, 2).position((3, 0))


def test_monomial_evaluation():
    o = enumerate_multi_indices(2, 3)
    p = Polynomial.monomial(o, (2, 1), scale=3.0)
    assert evaluate(p, [2.0, 5.0]) == pytest.approx(60.0)
    np.testing.assert_allclose(p(np.array([[1.0, 1.0], [0.5, -2.0]])), [3.0, -1.5])


def test_legendre_family_matches_scipy():
    o = enumerate_multi_indices(1, 8)
    x = np.linspace(-1, 1, 17)
    V = basis_matrix(o, x, LEGENDRE, ((-1.0,), (1.0,)))
    for k in range(9):
        np.testing.assert_allclose(V[:, k], eval_legendre(k, x), atol=1e-14)


def test_legendre_on_shifted_box():
    o = enumerate_multi_indices(2, 3)
    box = ((0.0, -2.0), (2.0, 0.0))
    x = np.array([[0.3, -1.7], [1.9, -0.1]])
    V = basis_matrix(o, x, LEGENDRE, box)
    k = o.position((2, 1))
    t = np.array([x[:, 0] - 1.0, x[:, 1] + 1.0])
    np.testing.assert_allclose(V[:, k], eval_legendre(2, t[0]) * eval_legendre(1, t[1]), atol=1e-14)


def test_to_monomial_preserves_values(rng):
    o = enumerate_multi_indices(2, 5)
    box = ((-1.0, 0.0), (3.0, 2.0))
    p = Polynomial(o, rng.standard_normal(len(o)), LEGENDRE, box)
    m = to_monomial(p)
    assert m.family == MONOMIAL
    x = rng.uniform([-1, 0], [3, 2], size=(20, 2))
    np.testing.assert_allclose(m(x), p(x), rtol=1e-10, atol=1e-10)


def test_axpy():
    o = enumerate_multi_indices(1, 2)
    p = Polynomial(o, [1.0, 2.0, 3.0])
    q = Polynomial(o, [0.5, 0.0, -1.0])
    np.testing.assert_allclose(axpy(2.0, p, q).coeffs, [2.5, 4.0, 5.0])
    with pytest.raises(InvalidArgument):
        axpy(1.0, p, Polynomial(enumerate_multi_indices(1, 3), np.zeros(4)))


def test_json_roundtrip_bit_exact(rng):
    o = enumerate_multi_indices(2, 4)
    p = Polynomial(o, rng.standard_normal(len(o)), LEGENDRE, ((-1.0, -1.0), (1.0, 1.0)))
    q = Polynomial.from_json(json.dumps(p.to_json()))
    assert np.array_equal(p.coeffs, q.coeffs)
    assert q.box == p.box and q.family == p.family


def test_polynomial_is_immutable():
    p = Polynomial.zero(enumerate_multi_indices(1, 1))
    with pytest.raises(AttributeError):
        p.coeffs = None
    assert not p.coeffs.flags.writeable


def test_dimension_mismatch_rejected():
    p = Polynomial.zero(enumerate_multi_indices(2, 1))
    with pytest.raises(InvalidArgument):
        p(np.zeros((3, 3)))


def test_legendre_needs_box():
    with pytest.raises(InvalidArgument):
        Polynomial(enumerate_multi_indices(1, 1), [0.0, 1.0], LEGENDRE)


def test_basis_size_matches_binomial():
    for d in range(1, 5):
        for N in range(0, 8):
            assert basis_size(d, N) == len(enumerate_multi_indices(d, N)) == math.comb(N + d, d)
