"""Cubature rules from condition-number-minimizing point placement.

A rule with ``m`` points is exact on the first ``m`` orthonormal functions:
``R A = beta`` with ``R[i, j] = Psi_i(x_j)`` and ``beta_k = <Psi_k, 1>_w``.
Points are placed one at a time, each minimizing ``lambda = ||R^{-1} beta||``
over the new point with the earlier points fixed.
"""
from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla

from . import kernels, refquad
from .errors import InvalidArgument, RuleConstructionFailed, SingularSystem
from .orthogonalization import OrthonormalBasis
from .simplex import nelder_mead

HUGE = kernels.HUGE
PIVOT_RATIO = 1e-13
EXACTNESS_LIMIT = 1e-8
# lambda can be flat in the new point (its weight vanishes); this small
# multiple of the inverse distance to singularity keeps points apart
TIE_BREAK = 1e-8


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 8
    simplex_scale: float = 0.1
    max_iters: int = 400
    joint_polish: bool = True
    seed: int = 0
    penalty: float = 1e4
    polish_iters: int | None = None
    polish_sweeps: int = 6
    sweep_restarts: int = 4
    screen: int = 256
    threads: int = 1
    trials: int = 1

    def __post_init__(self):
        if self.restarts < 1 or self.trials < 1:
            raise InvalidArgument("restarts and trials must be >= 1")
        if self.simplex_scale <= 0 or self.max_iters < 1 or self.penalty <= 0:
            raise InvalidArgument("simplex_scale, max_iters and penalty must be positive")


@dataclass(frozen=True, eq=False)
class CubatureRule:
    points: np.ndarray
    weights: np.ndarray
    lam: float
    basis: OrthonormalBasis = None
    exactness_residual: float = 0.0
    basis_ref: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("points", "weights"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def __len__(self):
        return self.weights.shape[0]

    def to_json(self) -> dict:
        return {
            "points": [[float(v) for v in p] for p in self.points],
            "weights": [float(v) for v in self.weights],
            "lambda": float(self.lam),
            "basis_ref": self.basis_ref,
            "exactness_residual": float(self.exactness_residual),
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    @classmethod
    def from_json(cls, obj, basis=None) -> "CubatureRule":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(np.array(obj["points"], dtype=float), np.array(obj["weights"], dtype=float),
                   float(obj["lambda"]), basis, float(obj["exactness_residual"]), obj.get("basis_ref", {}))

    @classmethod
    def load(cls, path, basis=None):
        with open(path) as fh:
            return cls.from_json(json.load(fh), basis)


def _points(b, points):
    return np.asarray(points, dtype=float).reshape(-1, b.dimension)


def assemble_R(b: OrthonormalBasis, points) -> np.ndarray:
    """``R[i, j] = Psi_i(x_j)`` for ``i, j < len(points)``."""
    pts = _points(b, points)
    m = pts.shape[0]
    if m > len(b):
        raise InvalidArgument(f"{m} points for a basis of {len(b)} functions")
    return b.evaluate(pts, count=m).T


def _factor(R):
    with warnings.catch_warnings():
        # exact singularity is reported below
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(R, check_finite=False)
    scale = max(np.linalg.norm(R, ord=np.inf), 1e-300)
    if not np.all(np.isfinite(lu)) or np.min(np.abs(np.diag(lu))) < PIVOT_RATIO * scale:
        raise SingularSystem("collocation matrix is numerically singular")
    return lu, piv


def solve_weights(R, beta):
    """Solve ``R A = beta`` by pivoted LU; returns ``(A, ||R A - beta||)``."""
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise InvalidArgument("collocation matrix must be square")
    beta = np.asarray(beta, dtype=float)[: R.shape[0]]
    A = sla.lu_solve(_factor(R), beta, check_finite=False)
    return A, float(np.linalg.norm(R @ A - beta))


def _lambda(b, pts, reg=0.0):
    R = assemble_R(b, pts)
    try:
        lu = _factor(R)
    except SingularSystem:
        return HUGE
    A = sla.lu_solve(lu, b.beta[: R.shape[0]], check_finite=False)
    lam = float(np.linalg.norm(A))
    if reg:
        lam += reg * float(np.linalg.norm(sla.lu_solve(lu, np.eye(R.shape[0]), check_finite=False)))
    return lam


class _Sequential:
    """``lambda`` as a function of one new point, earlier points fixed.

    With ``R_fixed = Q [T; 0]`` and null direction ``q``, the new weight is
    ``alpha = q.beta / q.c`` and the others ``a = u - alpha V c`` where ``c``
    holds the basis values at the candidate; ``V = T^{-1} Q_1^T``.
    """

    def __init__(self, b: OrthonormalBasis, fixed, reg=0.0):
        self.reg = reg
        m = fixed.shape[0] + 1
        beta = b.beta[:m]
        deg = int(b.order.degrees[m - 1])
        nin = b.order.count(deg)
        self.exps = np.ascontiguousarray(b.order.exps[:nin])
        self.coeffs = np.ascontiguousarray(b.coeffs[:nin, :m].T)
        self.lo = np.array(b.box[0], dtype=float)
        self.hi = np.array(b.box[1], dtype=float)
        if m == 1:
            self.q = np.ones(1)
            self.V = np.zeros((0, 1))
            self.u = np.zeros(0)
            self.s = float(beta[0])
            return
        Rf = b.evaluate(fixed, count=m).T
        Q, Rr = np.linalg.qr(Rf, mode="complete")
        T = Rr[: m - 1]
        self.q = np.ascontiguousarray(Q[:, m - 1])
        self.V = np.ascontiguousarray(sla.solve_triangular(T, Q[:, : m - 1].T))
        self.u = self.V @ beta
        self.s = float(self.q @ beta)

    def __call__(self, x):
        return kernels.seq_objective(x, self.lo, self.hi, self.exps, self.coeffs, self.q, self.V, self.u,
                                     self.s, self.reg)


def _penalized(raw, domain, penalty):
    def fun(x):
        p = domain.project(x)
        d2 = float(np.sum((np.asarray(x) - p) ** 2))
        return min(raw(p) + penalty * d2, HUGE)
    return fun


def objective(fixed_points, candidate, b: OrthonormalBasis, penalty: float = 1e4) -> float:
    """``lambda`` of ``fixed + [candidate]`` on the matching sub-basis.

    Outside the domain the value at the nearest domain point is charged an
    extra ``penalty * dist**2``; singular configurations give ``1e300``.
    """
    fixed = _points(b, fixed_points) if len(fixed_points) else np.zeros((0, b.dimension))
    if fixed.shape[0] + 1 > len(b):
        raise InvalidArgument("more points than basis functions")
    return _penalized(_Sequential(b, fixed), b.domain, penalty)(np.asarray(candidate, dtype=float).ravel())


def _screened(fun, dom, rng, n_screen, k):
    """The ``k`` best of ``n_screen`` uniform samples (all ``k`` if no screening)."""
    n = max(n_screen, k)
    cand = dom.sample(rng, n)
    if n == k:
        return list(cand)
    vals = np.array([fun(x) for x in cand])
    return [cand[i] for i in np.argsort(vals, kind="stable")[:k]]


def _place(b, fixed, cfg, rng):
    fun = _penalized(_Sequential(b, fixed, TIE_BREAK), b.domain, cfg.penalty)
    edge = cfg.simplex_scale * b.domain.diameter
    starts = _screened(fun, b.domain, rng, cfg.screen, cfg.restarts)
    if fixed.shape[0] == 0:
        starts[0] = refquad.weighted_centroid(b.weight, b.domain)

    def run(x0):
        return nelder_mead(fun, x0, edge, cfg.max_iters)

    if cfg.threads > 1:
        with ThreadPoolExecutor(cfg.threads) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(x0) for x0 in starts]
    best = min(range(len(results)), key=lambda i: (results[i].fun, i))
    return b.domain.project(results[best].x), results


def sequential_points(b: OrthonormalBasis, cfg: OptimizerConfig = OptimizerConfig(), count: int | None = None,
                      diagnostics: list | None = None) -> np.ndarray:
    """Place ``count`` points one after another; every prefix is a rule."""
    count = len(b) if count is None else count
    if not 1 <= count <= len(b):
        raise InvalidArgument(f"point count {count} outside 1..{len(b)}")
    rng = np.random.default_rng(cfg.seed)
    pts = np.zeros((0, b.dimension))
    for _ in range(count):
        x, results = _place(b, pts, cfg, rng)
        if diagnostics is not None:
            diagnostics.append(results)
        pts = np.vstack([pts, x])
    return pts


def _sweep(b, pts, cfg, rng):
    """Re-place every point in turn with the others fixed."""
    dom = b.domain
    m = pts.shape[0]
    edge = cfg.simplex_scale * dom.diameter
    for j in range(m):
        others = np.delete(pts, j, axis=0)
        fun = _penalized(_Sequential(b, others, TIE_BREAK), dom, cfg.penalty)
        best = nelder_mead(fun, pts[j], edge / math.sqrt(m), cfg.max_iters // 2)
        current = best.start_fun
        starts = _screened(fun, dom, rng, cfg.screen, cfg.sweep_restarts) if cfg.sweep_restarts else ()
        for x0 in starts:
            r = nelder_mead(fun, x0, edge, cfg.max_iters // 2)
            if r.fun < best.fun:
                best = r
        if best.fun < current:
            pts[j] = dom.project(best.x)
    return pts


def polish(b: OrthonormalBasis, points, cfg: OptimizerConfig, rng=None) -> np.ndarray:
    """Improve a complete point set; never returns a larger ``lambda``.

    Cyclic sweeps re-place one point at a time (from its current position and
    ``cfg.sweep_restarts`` random starts) until a sweep gains less than 1%,
    then one simplex pass runs over all coordinates jointly.
    """
    pts = _points(b, points).copy()
    m, d = pts.shape
    dom = b.domain
    rng = np.random.default_rng([cfg.seed, m]) if rng is None else rng
    lam = _lambda(b, pts, TIE_BREAK)
    for _ in range(cfg.polish_sweeps):
        trial = _sweep(b, pts.copy(), cfg, rng)
        new = _lambda(b, trial, TIE_BREAK)
        if new < lam:
            pts = trial
        if not new < 0.99 * lam:
            break
        lam = new

    def fun(z):
        P = z.reshape(m, d)
        proj = np.array([dom.project(p) for p in P])
        d2 = float(np.sum((P - proj) ** 2))
        return min(_lambda(b, proj, TIE_BREAK) + cfg.penalty * d2, HUGE)

    iters = cfg.polish_iters if cfg.polish_iters is not None else cfg.max_iters * max(1, m * d // 4)
    res = nelder_mead(fun, pts.ravel(), 0.25 * cfg.simplex_scale * dom.diameter / max(1, m), iters)
    if res.fun < res.start_fun:
        out = res.x.reshape(m, d)
        return np.array([dom.project(p) for p in out])
    return pts


def rule_from_points(b: OrthonormalBasis, points, basis_ref=None) -> CubatureRule:
    pts = _points(b, points)
    R = assemble_R(b, pts)
    A, _ = solve_weights(R, b.beta)
    resid = float(np.max(np.abs(R @ A - b.beta[: len(A)])))
    return CubatureRule(pts, A, float(np.linalg.norm(A)), b, resid, dict(basis_ref or {}))


def _finish(b, pts, basis_ref):
    try:
        r = rule_from_points(b, pts, basis_ref)
    except SingularSystem as exc:
        raise RuleConstructionFailed(f"final points are singular: {exc}", lam=math.inf) from None
    if not r.exactness_residual <= EXACTNESS_LIMIT:
        raise RuleConstructionFailed(
            f"exactness residual {r.exactness_residual:.3g} above {EXACTNESS_LIMIT:g} (lambda {r.lam:.3g})",
            lam=r.lam, residual=r.exactness_residual)
    return r


def build_rule(b: OrthonormalBasis, cfg: OptimizerConfig = OptimizerConfig(), count: int | None = None,
               basis_ref=None) -> CubatureRule:
    """Rule with ``count`` points (default ``len(b)``), exact on ``Psi_0..Psi_{count-1}``."""
    pts = sequential_points(b, cfg, count)
    if cfg.joint_polish:
        pts = polish(b, pts, cfg)
    return _finish(b, pts, basis_ref)


def rules_by_size(b: OrthonormalBasis, sizes, cfg: OptimizerConfig = OptimizerConfig(), basis_ref=None):
    """Rules for several sizes from one growing point sequence.

    Points are added one at a time; at each requested size the current set is
    polished (when enabled) and the polished set is grown further.  With
    ``cfg.trials > 1`` each size is attempted from independent random streams
    and the set with the smallest ``lambda`` is kept.  Returns
    ``{size: rule or RuleConstructionFailed}``.
    """
    sizes = sorted(set(int(s) for s in sizes))
    if not sizes or sizes[0] < 1 or sizes[-1] > len(b):
        raise InvalidArgument(f"rule sizes must lie in 1..{len(b)}")
    base = np.zeros((0, b.dimension))
    out = {}
    for m in sizes:
        best, best_lam = None, np.inf
        for t in range(cfg.trials):
            rng = np.random.default_rng([cfg.seed, m, t])
            pts = base
            while pts.shape[0] < m:
                x, _ = _place(b, pts, cfg, rng)
                pts = np.vstack([pts, x])
            if cfg.joint_polish:
                pts = polish(b, pts, cfg, rng)
            lam = _lambda(b, pts)
            if best is None or lam < best_lam:
                best, best_lam = pts, lam
        base = best
        try:
            out[m] = _finish(b, base, basis_ref)
        except RuleConstructionFailed as exc:
            out[m] = exc
    return out


def random_rule_lambda(b: OrthonormalBasis, count: int, seed: int = 0, draws: int = 11) -> float:
    """Median ``lambda`` of rules on uniformly random points."""
    rng = np.random.default_rng(seed)
    lams = [_lambda(b, b.domain.sample(rng, count)) for _ in range(draws)]
    return float(np.median(lams))


def apply_rule(r: CubatureRule, f) -> float:
    """``sum_j A_j f(x_j)``."""
    vals = np.asarray(f(r.points), dtype=float).reshape(len(r))
    return float(r.weights @ vals)


def exactness_check(r: CubatureRule, b: OrthonormalBasis | None = None) -> float:
    """``max_k |NI[Psi_k] - beta_k|`` over the functions the rule is built on."""
    b = r.basis if b is None else b
    m = len(r)
    V = b.evaluate(r.points, count=m)
    return float(np.max(np.abs(r.weights @ V - b.beta[:m])))


def condition_bound(r: CubatureRule) -> float:
    """``lambda = ||R^{-1} beta|| = ||A||``."""
    return float(np.linalg.norm(r.weights))


@dataclass(frozen=True)
class ThetaRow:
    j: int
    residual: float
    bound: float
    passed: bool


def verify_theta(r: CubatureRule, f, e, theta: float):
    """Per point: ``|f(x_j) - (P_M f)(x_j)| <= M**-theta`` with ``M = len(r) - 1``."""
    m = len(r)
    if e.coeffs.shape[0] < m:
        raise InvalidArgument(f"expansion has {e.coeffs.shape[0]} terms, rule needs {m}")
    M = m - 1
    bound = math.inf if M == 0 else float(M) ** (-theta)
    fv = np.asarray(f(r.points), dtype=float).reshape(m)
    pv = e.basis.evaluate(r.points, count=m) @ e.coeffs[:m]
    res = np.abs(fv - pv)
    return [ThetaRow(j, float(res[j]), bound, bool(res[j] <= bound)) for j in range(m)]


def with_seed(cfg: OptimizerConfig, seed: int) -> OptimizerConfig:
    return replace(cfg, seed=seed)
