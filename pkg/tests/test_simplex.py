import numpy as np
import pytest

from specweight.simplex import initial_simplex, nelder_mead


def test_initial_simplex_centroid():
    S = initial_simplex(np.array([1.0, -2.0]), 0.5)
    assert S.shape == (3, 2)
    np.testing.assert_allclose(S.mean(axis=0), [1.0, -2.0])


def test_quadratic_minimum():
    r = nelder_mead(lambda x: (x[0] - 0.3) ** 2 + 2 * (x[1] + 0.7) ** 2, np.zeros(2), 0.5, max_iters=2000)
    np.testing.assert_allclose(r.x, [0.3, -0.7], atol=1e-6)
    assert r.fun <= r.start_fun


def test_rosenbrock():
    def rosen(x):
        return 100 * (x[1] - x[0] ** 2) ** 2 + (1 - x[0]) ** 2
    r = nelder_mead(rosen, np.array([-1.2, 1.0]), 0.2, max_iters=5000)
    np.testing.assert_allclose(r.x, [1.0, 1.0], atol=1e-4)


def test_never_worse_than_start():
    # a start already at the minimum is kept
    r = nelder_mead(lambda x: float(np.sum(np.abs(x))), np.zeros(1), 10.0, max_iters=3)
    assert r.fun == 0.0
    np.testing.assert_array_equal(r.x, [0.0])


def test_iteration_cap():
    r = nelder_mead(lambda x: float(x @ x), np.ones(3), 0.1, max_iters=5)
    assert r.iterations == 5
    assert r.evaluations >= 5


@pytest.mark.parametrize("d", [1, 2, 3])
def test_dimensions(d):
    r = nelder_mead(lambda x: float(np.sum((x - 1) ** 2)), np.zeros(d), 0.5, max_iters=3000)
    np.testing.assert_allclose(r.x, np.ones(d), atol=1e-6)
