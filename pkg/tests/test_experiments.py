import math

import numpy as np
import pytest

from specweight import builtins as bi
from specweight import experiments as ex
from specweight.cubature import OptimizerConfig


@pytest.fixture(scope="module")
def lshape():
    return ex.run_lshape(max_degree=3)


def test_layout():
    lay = ex.LShapeLayout.build()
    assert len(lay.cells) == 27
    assert sum(c.measure for c in lay.cells) == pytest.approx(3.0)
    assert lay.singular_cell == 15
    c = lay.cells[lay.singular_cell]
    assert c.lo == (0.0, -1 / 3) and c.hi == (1 / 3, 0.0)
    assert sum(lay.touches_origin(k) for k in range(27)) == 3
    # the symmetry is an involution and fixes the singular cell
    assert all(lay.mirror(lay.mirror(k)) == k for k in range(27))
    assert lay.mirror(lay.singular_cell) == lay.singular_cell


def test_cells_tile_the_lshape(rng):
    lay = ex.LShapeLayout.build()
    pts = bi.LSHAPE.sample(rng, 200)
    hits = sum(c.contains(pts, tol=0.0).astype(int) for c in lay.cells)
    assert (hits >= 1).all()


def test_lshape_totals_are_root_sum_square(lshape):
    np.testing.assert_allclose(lshape.total_modified ** 2, np.sum(lshape.modified ** 2, axis=0), rtol=1e-12)
    np.testing.assert_allclose(lshape.total_classical ** 2, np.sum(lshape.classical ** 2, axis=0), rtol=1e-12)


def test_lshape_symmetry(lshape):
    assert lshape.symmetry_residual() <= 1e-8


def test_lshape_errors_decrease_with_degree(lshape):
    assert (np.diff(lshape.classical, axis=1) <= 0).all()
    assert (np.diff(lshape.modified, axis=1) <= 1e-15).all()


def test_lshape_singular_cell_improvement(lshape):
    assert lshape.improvement()[1] >= 300


def test_lshape_tables(lshape):
    t = lshape.tables()
    head, rows = t["classical.csv"]
    assert head == ("cell", "x0", "y0", "degree_1", "degree_2", "degree_3") and len(rows) == 27
    assert lshape.summary()["singular_cell"] == 15


def test_align_cells_recovers_permutation(rng):
    ours = 10 ** rng.uniform(-8, -2, size=(10, 4))
    perm = rng.permutation(10)
    assert list(ex.align_cells(ours, ours[perm] * 1.01)) == list(perm)


def test_gpc_exact_solution_value():
    assert bi.function_entry("gpc_u")(np.array([0.0, 0.0]))[0] == 5.0


def test_gpc_small_run():
    res = ex.run_gpc(2, OptimizerConfig(restarts=4))
    assert res.sizes == (6, 15)
    assert len(res.H) == 2 and res.H[1] < res.H[0]
    e = bi.weight_entry("indicator2d")
    from specweight import refquad
    mean = refquad.integrate(bi.function_entry("gpc_u"), e.weight, e.domain).value
    # Psi_0 = 1 for the normalized weight, so u_hat_0 is the w-mean of u
    assert res.exact_coeffs[0] == pytest.approx(mean, abs=1e-11)
    assert set(res.tables()) == {"H.csv", "coeffs.csv"}


def test_integration_example_one():
    res = ex.run_integration_examples(1)
    assert res.exact == pytest.approx(1.99136798178769960340698, abs=1e-11)
    assert res.sizes == tuple(range(2, 13))
    assert res.slope() < 0
    assert res.rows[-1][4] < 1e-6


def test_decay_suite_small():
    res = ex.run_decay_suite(1, degree=12, functions=["ex1_h"])
    assert res.constant == pytest.approx(math.sqrt(1.5))
    assert all(row[3] for row in res.comparison["ex1_h"])
    assert set(res.tables()) == {"coeffs_ex1_h_legendre1d.csv", "coeffs_ex1_h_quadratic1d.csv",
                                 "comparison.csv", "fits.csv"}


def test_invalid_example_ids():
    from specweight.errors import InvalidArgument
    with pytest.raises(InvalidArgument):
        ex.run_decay_suite(4)
    with pytest.raises(InvalidArgument):
        ex.run_integration_examples(0)
    with pytest.raises(InvalidArgument):
        ex.run_gpc(0)
