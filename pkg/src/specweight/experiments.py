"""Deterministic end-to-end experiment runners.

Every runner returns a result object with ``tables()`` (name -> (header, rows)
for CSV output) and ``summary()`` (a JSON-ready dict).  Nothing here touches
the file system.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import builtins as bi
from . import refquad
from .cubature import OptimizerConfig, apply_rule, random_rule_lambda, rules_by_size
from .errors import InvalidArgument, NumericalError
from .orthogonalization import OrthonormalBasis, gram_schmidt
from .projection import DecayReport, decay_report, derive_constant, project, tail_norms
from .weights import Box, Constant, RadialPower, StructureMap, normalize, point_singularity

#: ``(weight1, weight2, functions, default degree)`` per decay example
DECAY_EXAMPLES = {
    1: ("legendre1d", "quadratic1d", ("ex1_f", "ex1_g", "ex1_h"), 40),
    2: ("chebyshev1d", "invsqrt1d", ("ex1_f", "ex1_g", "ex1_h"), 40),
    3: ("legendre2d", "indicator2d", ("ex3_f",), 22),
}
#: ``(weight, function, max degree)`` per integration example
INTEGRATION_EXAMPLES = {
    1: ("indicator1d", "int1_f", 11),
    2: ("indicator2d", "int2_f", 6),
    3: ("triangle", "int2_f", 6),
}
COMPARISON_SLACK = 1e-8
#: the Example 3 basis at degree 22 has 276 functions
DECAY_CAP = 300


def _basis(name, degree, tol, cap=DECAY_CAP):
    entry = bi.weight_entry(name)
    return gram_schmidt(entry.weight, entry.domain, degree, tol, cap=cap)


# ---------------------------------------------------------------- decay


@dataclass
class DecaySuiteResult:
    example_id: int
    degree: int
    weights: tuple
    gram_residuals: dict
    reports: dict            # (function, weight) -> DecayReport
    constant: float
    comparison: dict         # function -> [(n, tail2, bound, passed)]

    def slope(self, fn, weight):
        return self.reports[(fn, weight)].slope

    def tables(self):
        out = {}
        for (fn, w), rep in self.reports.items():
            out[f"coeffs_{fn}_{w}.csv"] = (("k", "degree", "coeff", "log10_abs"), rep.rows)
        rows = []
        for fn, table in self.comparison.items():
            rows += [(fn, n, t2, bound, int(ok)) for n, t2, bound, ok in table]
        out["comparison.csv"] = (("function", "n", "tail_w2", "C_tail_w1", "pass"), rows)
        fits = [(fn, w, rep.slope, rep.intercept, " ".join(str(k + 1) for k in rep.envelope_points[-4:]))
                for (fn, w), rep in self.reports.items()]
        out["fits.csv"] = (("function", "weight", "slope", "intercept", "fit_indices"), fits)
        return out

    def summary(self):
        return {
            "example": self.example_id,
            "degree": self.degree,
            "weights": list(self.weights),
            "gram_residual": self.gram_residuals,
            "constant": self.constant,
            "fits": {f"{fn}/{w}": {"slope": r.slope, "intercept": r.intercept,
                                   "fit_indices": [k + 1 for k in r.envelope_points[-4:]]}
                     for (fn, w), r in self.reports.items()},
            "comparison_all_pass": {fn: all(r[3] for r in t) for fn, t in self.comparison.items()},
        }


def run_decay_suite(example_id: int, degree: int | None = None, tol: float = refquad.DEFAULT_TOL,
                    functions=None) -> DecaySuiteResult:
    """Project the example's functions in both bases; fits plus comparison table."""
    if example_id not in DECAY_EXAMPLES:
        raise InvalidArgument(f"decay example must be one of {sorted(DECAY_EXAMPLES)}")
    w1, w2, fns, default_degree = DECAY_EXAMPLES[example_id]
    degree = default_degree if degree is None else degree
    fns = fns if functions is None else tuple(functions)
    bases = {w: _basis(w, degree, tol) for w in (w1, w2)}
    C = derive_constant(bases[w1].weight, bases[w2].weight, bases[w1].domain)
    ns = list(range(degree + 1))
    reports, comparison = {}, {}
    for fn in fns:
        entry = bi.function_entry(fn)
        tails = {}
        for w, b in bases.items():
            e = project(entry, b, tol, structure=entry.structure)
            reports[(fn, w)] = decay_report(e)
            tails[w] = tail_norms(e, ns)
        comparison[fn] = [(n, float(a), float(C * t), bool(a <= C * t + COMPARISON_SLACK))
                          for n, a, t in zip(ns, tails[w2], tails[w1])]
    return DecaySuiteResult(example_id, degree, (w1, w2),
                            {w: b.gram_residual for w, b in bases.items()}, reports, C, comparison)


@dataclass
class GfunResult:
    report: DecayReport
    smooth_report: DecayReport
    block_max: tuple          # (degree, first index, max |coeff| in block)
    identity_residual: float

    def tables(self):
        return {
            "coeffs_g_legendre2d.csv": (("k", "degree", "coeff", "log10_abs"), self.report.rows),
            "block_max.csv": (("degree", "first_index", "max_abs_coeff"), self.block_max),
        }

    def summary(self):
        return {
            "slope_g_w1": self.report.slope,
            "slope_f_w2": self.smooth_report.slope,
            "identity_residual": self.identity_residual,
            "min_block_max_through_index_200": min(m for _, k, m in self.block_max if k <= 200),
        }


def run_gfun_legendre(degree: int = 22, tol: float = refquad.DEFAULT_TOL) -> GfunResult:
    """Discontinuous ``g = f * w2`` in the ``w1`` basis.

    ``identity_residual`` checks ``<g, Psi>_{w1} = (1/4) <f, Psi>_{w2}`` for
    every ``Psi`` of the ``w2`` basis.
    """
    w1, w2, _, _ = DECAY_EXAMPLES[3]
    b1, b2 = _basis(w1, degree, tol), _basis(w2, degree, tol)
    g, f = bi.function_entry("ex3_g"), bi.function_entry("ex3_f")
    eg = project(g, b1, tol, structure=g.structure)
    ef = project(f, b2, tol)
    cross = refquad.integrate(lambda x: g(x)[:, None] * b2.evaluate(x), b1.weight, b1.domain, tol,
                              structure=b2.structure.merge(g.structure), q=b2.q).value
    identity = float(np.max(np.abs(cross - ef.coeffs * b1.weight.c)))
    a = np.abs(eg.coeffs)
    blocks = []
    for n in range(degree + 1):
        blk = b1.order.block(n)
        blocks.append((n, blk.start + 1, float(np.max(a[blk]))))
    return GfunResult(decay_report(eg), decay_report(ef), tuple(blocks), identity)


# ---------------------------------------------------------------- L-shape

LSHAPE_SIDE = 1.0 / 3.0


@dataclass(frozen=True)
class LShapeLayout:
    """27 squares of side 1/3 numbered row-major from ``(-1, -1)``."""

    cells: tuple
    singular_cell: int

    @classmethod
    def build(cls):
        cells = []
        for j in range(6):
            for i in range(6):
                if i < 3 and j >= 3:
                    continue
                cells.append(Box((((i - 3) / 3, (i - 2) / 3), ((j - 3) / 3, (j - 2) / 3))))
        sing = next(k for k, c in enumerate(cells) if c.lo[0] == 0.0 and c.hi[1] == 0.0)
        return cls(tuple(cells), sing)

    def touches_origin(self, k):
        c = self.cells[k]
        return any(abs(x) < 1e-12 and abs(y) < 1e-12 for x in (c.lo[0], c.hi[0]) for y in (c.lo[1], c.hi[1]))

    def mirror(self, k):
        """Index of the image of cell ``k`` under ``(x, y) -> (-y, -x)``."""
        c = self.cells[k]
        lo = (-c.hi[1], -c.hi[0])
        for j, o in enumerate(self.cells):
            if abs(o.lo[0] - lo[0]) < 1e-9 and abs(o.lo[1] - lo[1]) < 1e-9:
                return j
        raise AssertionError("L-shape layout is not closed under its symmetry")


@dataclass
class LShapeResult:
    layout: LShapeLayout
    degrees: tuple
    modified: np.ndarray      # (cells, degrees) plain L2 errors
    classical: np.ndarray

    @property
    def total_modified(self):
        return np.sqrt(np.sum(self.modified ** 2, axis=0))

    @property
    def total_classical(self):
        return np.sqrt(np.sum(self.classical ** 2, axis=0))

    def scaled(self, which):
        """Errors times ``sqrt(mu(cell))`` (the norm with the ``1/mu`` cell weight, inverted)."""
        return getattr(self, which) * math.sqrt(LSHAPE_SIDE ** 2)

    def symmetry_residual(self):
        worst = 0.0
        for k in range(len(self.layout.cells)):
            j = self.layout.mirror(k)
            for arr in (self.modified, self.classical):
                worst = max(worst, float(np.max(np.abs(arr[k] - arr[j]) / np.abs(arr[k]))))
        return worst

    def improvement(self, k=None):
        k = self.layout.singular_cell if k is None else k
        return self.classical[k] / self.modified[k]

    def tables(self):
        head = ("cell", "x0", "y0") + tuple(f"degree_{n}" for n in self.degrees)

        def rows(a):
            return [(k, c.lo[0], c.lo[1], *a[k]) for k, c in enumerate(self.layout.cells)]
        return {
            "modified.csv": (head, rows(self.modified)),
            "classical.csv": (head, rows(self.classical)),
            "modified_scaled.csv": (head, rows(self.scaled("modified"))),
            "classical_scaled.csv": (head, rows(self.scaled("classical"))),
            "totals.csv": (("degree", "modified", "classical"),
                           list(zip(self.degrees, self.total_modified, self.total_classical))),
        }

    def summary(self):
        s = self.layout.singular_cell
        return {
            "singular_cell": s,
            "degrees": list(self.degrees),
            "singular_modified": [float(v) for v in self.modified[s]],
            "singular_classical": [float(v) for v in self.classical[s]],
            "improvement": [float(v) for v in self.improvement()],
            "total_modified": [float(v) for v in self.total_modified],
            "total_classical": [float(v) for v in self.total_classical],
            "symmetry_residual": self.symmetry_residual(),
        }


def _lshape_cell(cell, structure, degrees, tol):
    N = max(degrees)
    f, fr = bi.function_entry("lshape_f"), bi.function_entry("lshape_fr")
    fs = bi.lshape_fs
    plain = Constant(1.0)
    cls_basis = gram_schmidt(Constant(1.0 / cell.measure), cell, N, tol, structure=structure)
    mod_weight = normalize(RadialPower(0.25), cell)
    mod_basis = gram_schmidt(mod_weight, cell, N, tol)
    ec = project(f, cls_basis, tol, structure=structure)
    em = project(fr, mod_basis, tol)
    q = max(cls_basis.q, mod_basis.q)
    out_c, out_m = [], []
    for n in degrees:
        kc = cls_basis.order.count(n)
        rc = refquad.integrate(lambda x: (f(x) - cls_basis.evaluate(x, count=kc) @ ec.coeffs[:kc]) ** 2,
                               plain, cell, tol, structure=structure, q=q).value
        rm = refquad.integrate(
            lambda x: (f(x) - fs(x) * (mod_basis.evaluate(x, count=kc) @ em.coeffs[:kc])) ** 2,
            plain, cell, tol, structure=structure, q=q).value
        out_c.append(math.sqrt(max(rc, 0.0)))
        out_m.append(math.sqrt(max(rm, 0.0)))
    return out_m, out_c


def run_lshape(max_degree: int = 4, tol: float = refquad.DEFAULT_TOL, threads: int = 1) -> LShapeResult:
    """Classical and modified local approximations on the 27-cell L-shape."""
    if max_degree < 1:
        raise InvalidArgument("max_degree must be >= 1")
    layout = LShapeLayout.build()
    degrees = tuple(range(1, max_degree + 1))
    sing = point_singularity((0.0, 0.0), 0.5)

    def work(k):
        s = sing if layout.touches_origin(k) else StructureMap()
        return _lshape_cell(layout.cells[k], s, degrees, tol)

    ks = range(len(layout.cells))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            res = list(ex.map(work, ks))
    else:
        res = [work(k) for k in ks]
    return LShapeResult(layout, degrees, np.array([r[0] for r in res]), np.array([r[1] for r in res]))


def align_cells(ours, reference):
    """Assign each reference row to one of our rows by least log-distance.

    ``ours`` and ``reference`` are ``(cells, columns)`` arrays of positive
    values.  Returns ``mapping`` with ``mapping[i]`` our row matched to
    reference row ``i``.
    """
    from scipy.optimize import linear_sum_assignment
    a = np.log10(np.asarray(ours, dtype=float))
    r = np.log10(np.asarray(reference, dtype=float))
    cost = np.abs(r[:, None, :] - a[None, :, :]).sum(axis=2)
    rows, cols = linear_sum_assignment(cost)
    mapping = np.empty(len(rows), dtype=int)
    mapping[rows] = cols
    return mapping


# ---------------------------------------------------------------- integration


@dataclass
class IntegrationResult:
    example_id: int
    exact: float
    sizes: tuple
    rows: list               # (size, lambda, random lambda, value, error) or failure
    points: dict             # size -> (m, d) array
    failures: dict = field(default_factory=dict)

    @property
    def errors(self):
        return np.array([r[4] for r in self.rows])

    def slope(self):
        s = np.array([r[0] for r in self.rows], dtype=float)
        e = np.log10(np.maximum(self.errors, 1e-300))
        return float(np.polyfit(s, e, 1)[0])

    def tables(self):
        pts = [(m, j, *p) for m, P in self.points.items() for j, p in enumerate(P)]
        d = next(iter(self.points.values())).shape[1] if self.points else 1
        return {
            "errors.csv": (("points", "lambda", "random_lambda", "value", "error", "log10_error"),
                           [(*r, math.log10(max(r[4], 1e-300))) for r in self.rows]),
            "points.csv": (("size", "j") + tuple(f"x{i}" for i in range(d)), pts),
        }

    def summary(self):
        last = self.rows[-1] if self.rows else None
        return {
            "example": self.example_id,
            "exact": self.exact,
            "sizes": list(self.sizes),
            "slope": self.slope() if len(self.rows) > 1 else None,
            "final_error": last[4] if last else None,
            "final_lambda": last[1] if last else None,
            "final_random_lambda": last[2] if last else None,
            "failures": {str(k): v for k, v in self.failures.items()},
        }


#: three independent trials per size; keeps the rule with the smallest lambda
INTEGRATION_CONFIG = OptimizerConfig(trials=3)


def run_integration_examples(example_id: int, cfg: OptimizerConfig = INTEGRATION_CONFIG,
                             tol: float = refquad.DEFAULT_TOL, max_degree: int | None = None) -> IntegrationResult:
    """Error of optimized rules of growing size against the oracle integral."""
    if example_id not in INTEGRATION_EXAMPLES:
        raise InvalidArgument(f"integration example must be one of {sorted(INTEGRATION_EXAMPLES)}")
    wname, fname, default_degree = INTEGRATION_EXAMPLES[example_id]
    N = default_degree if max_degree is None else max_degree
    b = _basis(wname, N, tol)
    f = bi.function_entry(fname)
    exact = refquad.integrate(f, b.weight, b.domain, tol, structure=b.structure, q=b.q).value
    sizes = tuple(b.order.count(n) for n in range(1, N + 1))
    rules = rules_by_size(b, sizes, cfg, {"builtin": wname, "degree": N})
    rows, points, failures = [], {}, {}
    for m in sizes:
        r = rules[m]
        if isinstance(r, NumericalError):
            failures[m] = str(r)
            continue
        v = apply_rule(r, f)
        rows.append((m, r.lam, random_rule_lambda(b, m, cfg.seed), v, abs(v - exact)))
        points[m] = r.points
    return IntegrationResult(example_id, exact, sizes, rows, points, failures)


# ---------------------------------------------------------------- GPC

GPC_CONFIG = OptimizerConfig(trials=3)


@dataclass
class GpcResult:
    n_max: int
    sizes: tuple
    H: np.ndarray
    exact_coeffs: np.ndarray
    numerical_coeffs: dict   # N -> coefficients for |k| <= N
    lambdas: tuple

    def tables(self):
        return {
            "H.csv": (("N", "points", "lambda", "H"),
                      [(n, s, lam, h) for n, s, lam, h in zip(range(1, self.n_max + 1), self.sizes,
                                                               self.lambdas, self.H)]),
            "coeffs.csv": (("N", "k", "numerical", "exact"),
                           [(n, k, float(c[k]), float(self.exact_coeffs[k]))
                            for n, c in self.numerical_coeffs.items() for k in range(len(c))]),
        }

    def summary(self):
        H = self.H
        return {
            "n_max": self.n_max,
            "sizes": list(self.sizes),
            "H": [float(h) for h in H],
            "ratio_last_first": float(H[-1] / H[0]),
            "non_monotone_steps": int(np.sum(np.diff(H) > 0)),
            "u_hat_0": float(self.exact_coeffs[0]),
        }


def run_gpc(N_max: int = 5, cfg: OptimizerConfig = GPC_CONFIG, tol: float = refquad.DEFAULT_TOL) -> GpcResult:
    """``H(N) = sum_{|k| <= N} (u~_k - u^_k)^2`` for ``N = 1..N_max``.

    ``u~`` comes from an optimized rule on ``C(2N + 2, 2)`` points, exact for
    the basis up to degree ``2N``.
    """
    if N_max < 1:
        raise InvalidArgument("N_max must be >= 1")
    b = _basis("indicator2d", 2 * N_max, tol, cap=max(DECAY_CAP, math.comb(2 * N_max + 2, 2)))
    u = bi.function_entry("gpc_u")
    exact = project(u, b, tol).coeffs
    sizes = tuple(math.comb(2 * n + 2, 2) for n in range(1, N_max + 1))
    rules = rules_by_size(b, sizes, cfg, {"builtin": "indicator2d", "degree": 2 * N_max})
    H, num, lams = [], {}, []
    for n, m in zip(range(1, N_max + 1), sizes):
        r = rules[m]
        if isinstance(r, NumericalError):
            raise r
        K = b.order.count(n)
        c = (r.weights * u(r.points)) @ b.evaluate(r.points, count=K)
        num[n] = c
        H.append(float(np.sum((c - exact[:K]) ** 2)))
        lams.append(r.lam)
    return GpcResult(N_max, sizes, np.array(H), exact, num, tuple(lams))
