import os
import subprocess
import sys

import numpy as np
import pytest

from specweight import _kernels_py as py
from specweight import kernels

cy = pytest.importorskip("specweight._kernels")


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")


def test_pure_flag_selects_fallback():
    out = subprocess.run([sys.executable, "-c", "from specweight import kernels; print(kernels.BACKEND)"],
                         env={**os.environ, "SPECWEIGHT_PURE": "1"}, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("deg", [0, 1, 5, 17])
def test_tables_agree(rng, deg):
    x = rng.uniform(-1, 1, 50)
    np.testing.assert_allclose(cy.power_table(x, deg), py.power_table(x, deg), rtol=1e-15)
    np.testing.assert_allclose(cy.legendre_table(x, deg), py.legendre_table(x, deg), rtol=1e-13, atol=1e-15)


def test_product_matrix_agrees(rng):
    from specweight.polycore import enumerate_multi_indices
    o = enumerate_multi_indices(2, 6)
    tabs = [py.legendre_table(rng.uniform(-1, 1, 30), 6) for _ in range(2)]
    np.testing.assert_allclose(cy.product_matrix(tabs, o.exps), py.product_matrix(tabs, o.exps), rtol=1e-14)


def test_point_basis_agrees(indicator2d_6, rng):
    b = indicator2d_6
    lo, hi = (np.asarray(v, dtype=float) for v in b.box)
    exps = np.ascontiguousarray(b.order.exps, dtype=np.intp)
    C = np.ascontiguousarray(b.coeffs.T)
    for _ in range(5):
        x = rng.uniform(-1, 1, 2)
        a = cy.point_basis(x, lo, hi, exps, C, 10)
        p = py.point_basis(x, lo, hi, exps, C, 10)
        np.testing.assert_allclose(a, p, rtol=1e-12, atol=1e-13)
        np.testing.assert_allclose(p, b.evaluate(x[None, :], count=10)[0], rtol=1e-12, atol=1e-13)


@pytest.mark.parametrize("reg", [0.0, 1e-8])
def test_seq_objective_agrees(indicator2d_6, rng, reg):
    from specweight.cubature import _Sequential, rule_from_points
    b = indicator2d_6
    fixed = b.domain.sample(rng, 5)
    s = _Sequential(b, fixed, reg)
    for _ in range(5):
        x = np.ascontiguousarray(rng.uniform(-1, 1, 2))
        args = (x, s.lo, s.hi, s.exps, s.coeffs, s.q, s.V, s.u, s.s, reg)
        a, p = cy.seq_objective(*args), py.seq_objective(*args)
        assert a == pytest.approx(p, rel=1e-11)
        if reg == 0.0:
            assert p == pytest.approx(rule_from_points(b, np.vstack([fixed, x])).lam, rel=1e-9)
