"""Property-based checks of the structural invariants."""
import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from specweight import cubature as cb
from specweight.polycore import (LEGENDRE, Polynomial, axpy, basis_matrix, enumerate_multi_indices,
                                 to_monomial)
from specweight.projection import decay_report_from, envelope, norm2, project, tail_norms

SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@given(st.integers(1, 4), st.integers(0, 8))
@SETTINGS
def test_graded_order_invariants(d, N):
    o = enumerate_multi_indices(d, N)
    assert len(o) == math.comb(N + d, d)
    degs = list(o.degrees)
    assert degs == sorted(degs)
    assert len(set(o.index_list)) == len(o)
    for k, nu in enumerate(o.index_list):
        assert o.position(nu) == k
    for n in range(N + 1):
        assert all(o.degrees[k] == n for k in o.block(n))


@given(st.integers(1, 3), st.integers(0, 5), st.data())
@SETTINGS
def test_legendre_and_monomial_families_agree(d, N, data):
    o = enumerate_multi_indices(d, N)
    c = data.draw(arrays(float, len(o), elements=st.floats(-3, 3)))
    lo = np.array(data.draw(st.lists(st.floats(-2, 0), min_size=d, max_size=d)))
    width = np.array(data.draw(st.lists(st.floats(0.5, 3), min_size=d, max_size=d)))
    box = (tuple(lo), tuple(lo + width))
    p = Polynomial(o, c, LEGENDRE, box)
    x = lo + width * data.draw(arrays(float, (4, d), elements=st.floats(0, 1)))
    scale = 1.0 + float(np.abs(c).sum()) * 10 ** N
    np.testing.assert_allclose(to_monomial(p)(x), p(x), atol=1e-9 * scale)


@given(finite, st.data())
@SETTINGS
def test_axpy_is_linear(a, data):
    o = enumerate_multi_indices(2, 3)
    c1 = data.draw(arrays(float, len(o), elements=finite))
    c2 = data.draw(arrays(float, len(o), elements=finite))
    x = data.draw(arrays(float, (3, 2), elements=st.floats(-1, 1)))
    p, q = Polynomial(o, c1), Polynomial(o, c2)
    np.testing.assert_allclose(axpy(a, p, q)(x), a * p(x) + q(x), rtol=1e-9, atol=1e-9)


@given(arrays(float, 12, elements=st.floats(1e-8, 1.0)))
@SETTINGS
def test_envelope_is_strictly_decreasing_tail_record_set(c):
    o = enumerate_multi_indices(1, 11)
    env = envelope(c, o)
    assert env[-1] == 11
    vals = c[env]
    assert all(vals[i] > vals[i + 1] for i in range(len(vals) - 1))
    for k in env:
        assert all(c[k] > c[j] for j in range(k + 1, 12))


@given(st.floats(-0.5, -0.01), st.floats(-2, 2))
@SETTINGS
def test_fit_recovers_exact_geometric_decay(slope, intercept):
    o = enumerate_multi_indices(1, 20)
    c = 10.0 ** (slope * (np.arange(21) + 1) + intercept)
    rep = decay_report_from(c, o)
    assert math.isclose(rep.slope, slope, rel_tol=1e-9)
    assert math.isclose(rep.intercept, intercept, abs_tol=1e-8)


@given(arrays(float, 6, elements=st.floats(-2, 2)))
@SETTINGS
def test_tail_norms_nonincreasing_and_parseval(legendre10, c):
    def f(x):
        return np.polynomial.polynomial.polyval(x[:, 0], c) + np.cos(3 * x[:, 0])
    e = project(f, legendre10)
    t = tail_norms(e, range(11))
    assert all(t[i] >= t[i + 1] - 1e-12 for i in range(10))
    # ||Q_n f||^2 + sum_{k <= n} f_hat_k^2 = ||f||^2 for every n
    total = norm2(e)
    for n in range(11):
        assert math.isclose(t[n] ** 2 + float(np.sum(e.coeffs[: n + 1] ** 2)), total, rel_tol=1e-9, abs_tol=1e-10)


@given(st.integers(1, 8), st.integers(0, 2 ** 16))
@SETTINGS
def test_rule_on_random_points_is_exact(indicator1d_11, m, seed):
    rng = np.random.default_rng(seed)
    pts = indicator1d_11.domain.sample(rng, m)
    if m > 1 and np.min(np.diff(np.sort(pts[:, 0]))) < 1e-3:
        return
    r = cb.rule_from_points(indicator1d_11, pts)
    assert cb.exactness_check(r) <= 1e-8
    # sum of weights is the weight's mass
    assert math.isclose(float(r.weights.sum()), 1.0, rel_tol=1e-8)
    assert r.lam >= 1 / math.sqrt(m) - 1e-12


@given(st.integers(0, 2 ** 16))
@SETTINGS
def test_objective_equals_lambda_of_extended_set(triangle4, seed):
    rng = np.random.default_rng(seed)
    fixed = triangle4.domain.sample(rng, 3)
    cand = triangle4.domain.sample(rng, 1)[0]
    full = cb.rule_from_points(triangle4, np.vstack([fixed, cand])).lam
    assert math.isclose(cb.objective(fixed, cand, triangle4), full, rel_tol=1e-8)


@given(arrays(float, (5, 2), elements=st.floats(-1, 1)))
@SETTINGS
def test_basis_values_match_polynomial_objects(indicator2d_6, x):
    V = indicator2d_6.evaluate(x)
    for k in (0, 5, 27):
        np.testing.assert_allclose(indicator2d_6.polys[k](x), V[:, k], rtol=1e-12, atol=1e-12)


@given(st.integers(1, 3), st.integers(0, 6), st.data())
@SETTINGS
def test_basis_matrix_row_is_product_of_powers(d, N, data):
    o = enumerate_multi_indices(d, N)
    x = data.draw(arrays(float, (2, d), elements=st.floats(-2, 2)))
    V = basis_matrix(o, x)
    ref = np.prod(x[:, None, :] ** o.exps[None, :, :], axis=2)
    np.testing.assert_allclose(V, ref, rtol=1e-12, atol=1e-12)
