import math

import numpy as np
import pytest

from specweight import builtins as bi
from specweight.errors import CannotDeriveConstant, FitUndefined, InvalidArgument
from specweight.polycore import enumerate_multi_indices
from specweight.projection import (Expansion, comparison_check, decay_report, decay_report_from,
                                   derive_constant, envelope, norm2, project, residual_norm2,
                                   tail_norm, tail_norms, truncated_eval)
from specweight.weights import Interval, RadialPower

from conftest import basis_for


def square(x):
    return x[:, 0] ** 2


def test_coefficients_of_x_squared(legendre10):
    e = project(square, legendre10)
    expect = np.zeros(11)
    expect[0], expect[2] = 1 / 3, 2 / (3 * math.sqrt(5))
    np.testing.assert_allclose(e.coeffs, expect, atol=1e-14)


def test_tail_norm_methods_agree(legendre10):
    e = project(square, legendre10)
    assert norm2(e) == pytest.approx(0.2, abs=1e-14)
    for method in ("parseval", "hybrid", "direct"):
        t = tail_norms(e, [0, 1, 2], method)
        np.testing.assert_allclose(t, [2 / math.sqrt(45), 2 / math.sqrt(45), 0.0], atol=1e-7)
    assert tail_norm(square, e, 0) == pytest.approx(2 / math.sqrt(45), abs=1e-12)
    with pytest.raises(InvalidArgument):
        tail_norms(e, [0], "nope")


def test_hybrid_tail_is_accurate_far_below_sqrt_tol(legendre10):
    e = project(lambda x: np.exp(x[:, 0]), legendre10)
    t = tail_norms(e, [9], "hybrid")[0]
    direct = math.sqrt(residual_norm2(e, 9))
    assert t == pytest.approx(direct, rel=1e-6)
    assert t < 1e-9


def test_truncated_eval(legendre10):
    e = project(square, legendre10)
    assert truncated_eval(e, 2, np.array([0.3])) == pytest.approx(0.09, abs=1e-14)
    assert truncated_eval(e, 0, 0.3) == pytest.approx(1 / 3, abs=1e-14)
    np.testing.assert_allclose(truncated_eval(e, 2, np.array([[0.1], [0.2]])), [0.01, 0.04], atol=1e-14)
    with pytest.raises(InvalidArgument):
        truncated_eval(e, 11, 0.0)


def test_expansion_is_read_only(legendre10):
    e = project(square, legendre10)
    assert not e.coeffs.flags.writeable


def test_function_returning_wrong_shape_is_reshaped(legendre10):
    e = project(lambda x: x[:, :1] ** 2, legendre10)
    assert e.coeffs[2] == pytest.approx(2 / (3 * math.sqrt(5)), abs=1e-14)


def test_derived_constants():
    W = bi.WEIGHTS
    unit = Interval(-1.0, 1.0)
    assert derive_constant(W["legendre1d"].weight, W["quadratic1d"].weight, unit) == pytest.approx(math.sqrt(1.5))
    assert derive_constant(W["chebyshev1d"].weight, W["invsqrt1d"].weight, unit) == pytest.approx(2 ** -0.25)
    assert derive_constant(W["legendre2d"].weight, W["indicator2d"].weight, bi.SQUARE) == pytest.approx(4 / 3)
    same = W["legendre1d"].weight
    assert derive_constant(same, same.with_normalization(4.0), unit) == pytest.approx(2.0)
    with pytest.raises(CannotDeriveConstant):
        derive_constant(RadialPower(0.25), W["legendre2d"].weight, bi.SQUARE)


def test_synthetic_geometric_decay_fit():
    order = enumerate_multi_indices(1, 30)
    c = 10.0 ** (-0.1 * (np.arange(31) + 1))
    rep = decay_report_from(c, order, n_fit_peaks=4)
    assert rep.slope == pytest.approx(-0.1, abs=1e-12)
    assert rep.intercept == pytest.approx(0.0, abs=1e-10)
    assert rep.envelope_points[-4:] == (27, 28, 29, 30)


def test_envelope_keeps_tail_records_only():
    order = enumerate_multi_indices(1, 5)
    c = np.array([1.0, 0.1, 0.5, 0.01, 0.2, 0.001])
    assert envelope(c, order) == [0, 2, 4, 5]
    assert envelope(c, order, floor=0.05) == [0, 2, 4]


def test_envelope_2d_uses_block_maxima():
    order = enumerate_multi_indices(2, 2)
    c = np.array([1.0, 0.3, 0.2, 0.01, 0.05, 0.02])
    assert envelope(c, order) == [0, 1, 4]


def test_fit_undefined():
    order = enumerate_multi_indices(1, 3)
    with pytest.raises(FitUndefined):
        decay_report_from(np.zeros(4), order)
    with pytest.raises(FitUndefined):
        decay_report_from(np.array([1.0, 0.1, 0.0, 0.0]), order, n_fit_peaks=4)
    with pytest.raises(InvalidArgument):
        decay_report_from(np.ones(4), order, n_fit_peaks=1)


def test_comparison_lemma_small_case():
    b1, b2 = basis_for("legendre1d", 12), basis_for("quadratic1d", 12)
    f = bi.function_entry("ex1_h")
    C, rows = comparison_check(f, b1, b2, structure=f.structure, slack=1e-8)
    assert C == pytest.approx(math.sqrt(1.5))
    assert len(rows) == 13 and all(r.passed for r in rows)
    assert all(rows[i].tail2 >= rows[i + 1].tail2 - 1e-12 for i in range(12))


def test_comparison_rejects_different_domains(legendre10, triangle4):
    with pytest.raises(InvalidArgument):
        comparison_check(square, legendre10, triangle4, C=1.0)


def test_decay_report_rows(legendre10):
    e = project(lambda x: np.exp(x[:, 0]), legendre10)
    rep = decay_report(e)
    assert len(rep.rows) == 11
    k, deg, c, lg = rep.rows[3]
    assert (k, deg) == (3, 3) and lg == pytest.approx(math.log10(abs(c)))
    assert rep.slope < 0


def test_expansion_records_structure(legendre10):
    f = bi.function_entry("ex1_h")
    e = project(f, legendre10, structure=f.structure)
    assert isinstance(e, Expansion)
    assert e.integration_structure.breakpoints == (-0.5,)
