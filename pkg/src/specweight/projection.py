"""Spectral expansions in an orthonormal basis, tail norms and decay fits."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import refquad
from .errors import CannotDeriveConstant, FitUndefined, InconsistentExpansion, InvalidArgument
from .orthogonalization import OrthonormalBasis
from .weights import (Chebyshev1D, Constant, IndicatorComposite, Interval, InvSqrt1D, PolyFactor,
                      StructureMap, WeightSpec)


def _vectorize(f, d):
    if getattr(f, "_vectorized", False):
        return f

    def g(x):
        return np.asarray(f(x), dtype=float).reshape(x.shape[0])
    g._vectorized = True
    return g


@dataclass(frozen=True, eq=False)
class Expansion:
    """Coefficients ``f_hat[k] = <f, Psi_k>_w`` of ``f`` in ``basis``."""

    basis: OrthonormalBasis
    coeffs: np.ndarray
    oracle_tol: float
    function: object = None
    structure: StructureMap = field(default_factory=StructureMap)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def integration_structure(self):
        return self.basis.structure.merge(self.structure)


def project(f, b: OrthonormalBasis, tol: float = refquad.DEFAULT_TOL, *,
            structure: StructureMap | None = None) -> Expansion:
    """Expand ``f`` (maps ``(n, d)`` points to ``(n,)`` values) in ``b``.

    ``structure`` lists the kinks and singular points of ``f`` itself so the
    oracle can align its panels with them.
    """
    g = _vectorize(f, b.dimension)
    s = b.structure.merge(structure)
    res = refquad.integrate(lambda x: g(x)[:, None] * b.evaluate(x), b.weight, b.domain, tol,
                            structure=s, q=b.q)
    return Expansion(b, res.value, tol, g, structure or StructureMap())


def _count_for(b, n):
    if n < 0 or n > b.degree:
        raise InvalidArgument(f"degree cut {n} outside 0..{b.degree}")
    return b.order.count(n)


def truncated_eval(e: Expansion, n: int, x):
    """``sum over |nu_k| <= n of f_hat[k] * Psi_k(x)``."""
    k = _count_for(e.basis, n)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 0 or (x.ndim == 1 and x.shape[0] == e.basis.dimension)
    vals = e.basis.evaluate(x.reshape(-1, e.basis.dimension), count=k) @ e.coeffs[:k]
    return float(vals[0]) if single else vals


def norm2(e: Expansion) -> float:
    """``||f||^2`` in the weighted norm, by the oracle."""
    f = e.function
    return refquad.integrate(lambda x: f(x) ** 2, e.basis.weight, e.basis.domain, e.oracle_tol,
                             structure=e.integration_structure, q=e.basis.q).value


def residual_norm2(e: Expansion, n: int) -> float:
    """``||f - P_n f||^2`` integrated directly."""
    k = _count_for(e.basis, n)
    f, b, c = e.function, e.basis, e.coeffs[:k]
    return refquad.integrate(lambda x: (f(x) - b.evaluate(x, count=k) @ c) ** 2, b.weight, b.domain,
                             e.oracle_tol, structure=e.integration_structure, q=b.q).value


def tail_norms(e: Expansion, ns, method: str = "hybrid") -> np.ndarray:
    """``||Q_n f||`` for every ``n`` in ``ns``.

    ``parseval``
        ``sqrt(||f||^2 - sum_{|nu_k| <= n} f_hat_k^2)``; loses all digits once
        the tail drops below ``sqrt(tol)``.
    ``hybrid``
        ``||f - P_N f||^2`` integrated directly at the full degree ``N``, plus
        ``sum_{n < |nu_k| <= N} f_hat_k^2``.  Exact by orthogonality and free
        of cancellation.
    ``direct``
        one oracle integral of ``(f - P_n f)^2`` per ``n``.
    """
    b = e.basis
    ns = [int(n) for n in ns]
    for n in ns:
        _count_for(b, n)
    sq = e.coeffs ** 2
    if method == "direct":
        return np.sqrt(np.array([residual_norm2(e, n) for n in ns]))
    if method == "parseval":
        total = norm2(e)
        out = []
        for n in ns:
            r = total - float(np.sum(sq[: b.order.count(n)]))
            if r < -10 * e.oracle_tol:
                raise InconsistentExpansion(
                    f"||f||^2 - sum f_hat^2 = {r:.3g} at n={n}; oracle tolerance too loose")
            out.append(math.sqrt(max(r, 0.0)))
        return np.array(out)
    if method == "hybrid":
        base = max(residual_norm2(e, b.degree), 0.0)
        return np.array([math.sqrt(base + float(np.sum(sq[b.order.count(n):]))) for n in ns])
    raise InvalidArgument(f"unknown tail-norm method {method!r}")


def tail_norm(f, e: Expansion, n: int, method: str = "parseval") -> float:
    """``||Q_n f||``; ``f`` must be the function ``e`` was built from."""
    if f is not None and e.function is None:
        e = Expansion(e.basis, e.coeffs, e.oracle_tol, _vectorize(f, e.basis.dimension), e.structure)
    return float(tail_norms(e, [n], method)[0])


# ---------------------------------------------------------------- decay


@dataclass(frozen=True)
class DecayReport:
    """``rows``: ``(k, |nu_k|, coeff, log10|coeff|)`` with ``k`` zero-based.

    The fit is ``log10|coeff| ~ slope * index + intercept`` where ``index`` is
    the one-based position ``k + 1``.
    """

    rows: tuple
    envelope_points: tuple
    envelope_fit: tuple

    @property
    def slope(self):
        return self.envelope_fit[0]

    @property
    def intercept(self):
        return self.envelope_fit[1]


def _tail_records(values, candidates):
    # candidates whose value exceeds every later candidate's value
    out = []
    best = -np.inf
    for k in reversed(candidates):
        if values[k] > best:
            out.append(k)
            best = values[k]
    return out[::-1]


def envelope(coeffs, order, floor=0.0):
    """Positions of the upper envelope of ``|coeffs|``.

    In 1D every position is a candidate; in 2D and 3D only the largest entry
    of each total-degree block is.  A candidate is kept when it is larger
    than every later candidate and above ``floor``.
    """
    a = np.abs(np.asarray(coeffs, dtype=float))
    K = a.shape[0]
    if order.dimension == 1:
        cand = list(range(K))
    else:
        cand = []
        for n in range(order.max_degree + 1):
            blk = order.block(n)
            if blk.start >= K:
                break
            seg = a[blk.start:min(blk.stop, K)]
            cand.append(blk.start + int(np.argmax(seg)))
    cand = [k for k in cand if a[k] > floor]
    return _tail_records(a, cand)


def decay_report(e: Expansion, n_fit_peaks: int = 4, floor: float | None = None) -> DecayReport:
    """Envelope fit over the last ``n_fit_peaks`` envelope points.

    ``floor`` defaults to ``max(1e-12, 100 * oracle_tol)``: coefficients below
    it are oracle noise.
    """
    return decay_report_from(e.coeffs, e.basis.order, n_fit_peaks,
                             max(1e-12, 100 * e.oracle_tol) if floor is None else floor)


def decay_report_from(coeffs, order, n_fit_peaks=4, floor=0.0) -> DecayReport:
    if n_fit_peaks < 2:
        raise InvalidArgument("a line fit needs at least 2 envelope points")
    c = np.asarray(coeffs, dtype=float)
    with np.errstate(divide="ignore"):
        lg = np.log10(np.abs(c))
    degs = order.degrees[: c.shape[0]]
    rows = tuple((k, int(degs[k]), float(c[k]), float(lg[k])) for k in range(c.shape[0]))
    env = envelope(c, order, floor)
    if not env:
        raise FitUndefined("all coefficients are zero or below the noise floor")
    if len(env) < n_fit_peaks:
        raise FitUndefined(f"only {len(env)} envelope points, {n_fit_peaks} requested")
    pts = env[-n_fit_peaks:]
    x = np.array(pts, dtype=float) + 1.0
    slope, intercept = np.polyfit(x, lg[pts], 1)
    return DecayReport(rows, tuple(env), (float(slope), float(intercept)))


# ---------------------------------------------------------------- comparison


def _poly_sup_1d(w: PolyFactor, a, b):
    coeffs = np.zeros(max(e[0] for e, _ in w.terms) + 1)
    for (e,), c in w.terms:
        coeffs[e] += c
    p = np.polynomial.Polynomial(coeffs)
    xs = [a, b] + [r.real for r in p.deriv().roots() if abs(r.imag) < 1e-12 and a <= r.real <= b]
    return max(float(p(x)) for x in xs)


def _sup_value(w: WeightSpec, domain):
    if isinstance(w, Constant):
        return w.normalization * w.c
    if isinstance(w, IndicatorComposite):
        return w.normalization * 2.0 * w.c
    if isinstance(w, PolyFactor) and isinstance(domain, Interval):
        return w.normalization * _poly_sup_1d(w, domain.a, domain.b)
    return None


def derive_constant(w1: WeightSpec, w2: WeightSpec, domain) -> float:
    """``C = sqrt(sup w2 / w1)`` for weight pairs with a closed-form ratio."""
    if type(w1) is type(w2) and w1.with_normalization(1.0) == w2.with_normalization(1.0):
        return math.sqrt(w2.normalization / w1.normalization)
    if isinstance(w1, Constant):
        top = _sup_value(w2, domain)
        if top is not None:
            return math.sqrt(top / (w1.normalization * w1.c))
    if isinstance(w1, Chebyshev1D) and isinstance(w2, InvSqrt1D):
        # w2/w1 = sqrt(1 + |x|)/2 <= 1/sqrt(2)
        return math.sqrt(w2.normalization / w1.normalization / math.sqrt(2.0))
    raise CannotDeriveConstant(
        f"no closed-form bound for {type(w2).__name__}/{type(w1).__name__}; pass C explicitly")


@dataclass(frozen=True)
class ComparisonRow:
    n: int
    tail2: float
    bound: float
    passed: bool


def comparison_check(f, basis1: OrthonormalBasis, basis2: OrthonormalBasis, C: float | None = None,
                     N_max: int | None = None, tol: float = refquad.DEFAULT_TOL, *,
                     structure: StructureMap | None = None, slack: float | None = None):
    """Rows ``(n, ||Q_n^2 f||_2, C ||Q_n^1 f||_1, pass)`` for ``n = 0..N_max``."""
    if basis1.domain != basis2.domain:
        raise InvalidArgument("both bases must live on the same domain")
    if C is None:
        C = derive_constant(basis1.weight, basis2.weight, basis1.domain)
    N_max = min(basis1.degree, basis2.degree) if N_max is None else N_max
    slack = 10 * tol if slack is None else slack
    ns = list(range(N_max + 1))
    t1 = tail_norms(project(f, basis1, tol, structure=structure), ns)
    t2 = tail_norms(project(f, basis2, tol, structure=structure), ns)
    rows = [ComparisonRow(n, float(a), float(C * b), bool(a <= C * b + slack)) for n, a, b in zip(ns, t2, t1)]
    return C, rows
