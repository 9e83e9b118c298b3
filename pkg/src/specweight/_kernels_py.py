"""NumPy implementations of the hot kernels.

These mirror ``_kernels.pyx`` one-for-one and are used whenever the compiled
extension is unavailable (or when ``SPECWEIGHT_PURE=1``).
"""
import numpy as np

HUGE = 1e300


def power_table(x, deg):
    x = np.ascontiguousarray(x, dtype=float)
    out = np.empty((x.shape[0], deg + 1))
    out[:, 0] = 1.0
    for k in range(1, deg + 1):
        out[:, k] = out[:, k - 1] * x
    return out


def legendre_table(t, deg):
    t = np.ascontiguousarray(t, dtype=float)
    out = np.empty((t.shape[0], deg + 1))
    out[:, 0] = 1.0
    if deg >= 1:
        out[:, 1] = t
    for k in range(1, deg):
        out[:, k + 1] = ((2 * k + 1) * t * out[:, k] - k * out[:, k - 1]) / (k + 1)
    return out


def product_matrix(tables, exps):
    exps = np.asarray(exps, dtype=np.intp)
    out = tables[0][:, exps[:, 0]].copy()
    for j in range(1, len(tables)):
        out *= tables[j][:, exps[:, j]]
    return out


def point_basis(x, lo, hi, exps, coeffs, nrows):
    """Values of the first ``nrows`` Legendre-family polynomials at one point."""
    exps = np.asarray(exps, dtype=np.intp)
    deg = int(exps.max()) if exps.size else 0
    t = (2.0 * np.asarray(x, dtype=float) - (lo + hi)) / (hi - lo)
    prod = np.ones(exps.shape[0])
    for j in range(t.shape[0]):
        tab = legendre_table(t[j:j + 1], deg)[0]
        prod *= tab[exps[:, j]]
    return coeffs[:nrows] @ prod


def seq_objective(x, lo, hi, exps, coeffs, q, V, u, s, reg=0.0):
    m1 = q.shape[0]
    c = point_basis(x, lo, hi, exps, coeffs, m1)
    qc = float(q @ c)
    cmax = max(1.0, float(np.abs(c).max()))
    if abs(qc) <= 1e-13 * cmax:
        return HUGE
    alpha = s / qc
    a = u - alpha * (V @ c)
    # reg * cmax / |qc| breaks ties when lambda ignores the new point
    return float(np.sqrt(alpha * alpha + a @ a)) + reg * cmax / abs(qc)
