"""Downhill simplex (Nelder-Mead) minimization."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5


@dataclass(frozen=True)
class SimplexResult:
    x: np.ndarray
    fun: float
    start_fun: float
    iterations: int
    evaluations: int


def initial_simplex(x0, edge):
    """``d + 1`` vertices with edge ``edge`` along the axes, centroid at ``x0``."""
    x0 = np.asarray(x0, dtype=float)
    d = x0.shape[0]
    verts = np.vstack([np.zeros(d), edge * np.eye(d)])
    return verts - verts.mean(axis=0) + x0


def nelder_mead(fun, x0, edge, max_iters=400, xtol=1e-12, ftol=1e-15) -> SimplexResult:
    """Minimize ``fun`` from a simplex of edge ``edge`` centred on ``x0``.

    ``x0`` itself is evaluated as well; the best point ever seen is returned,
    so the result is never worse than the starting centroid.
    """
    x0 = np.asarray(x0, dtype=float)
    S = initial_simplex(x0, edge)
    F = np.array([fun(v) for v in S])
    start = float(fun(x0))
    evals = len(S) + 1
    best_x, best_f = x0.copy(), start
    it = 0
    for it in range(1, max_iters + 1):
        idx = np.argsort(F, kind="stable")
        S, F = S[idx], F[idx]
        if F[0] < best_f:
            best_x, best_f = S[0].copy(), float(F[0])
        if np.max(np.abs(S[1:] - S[0])) <= xtol * max(1.0, np.max(np.abs(S[0]))) and F[-1] - F[0] <= ftol * max(1.0, abs(F[0])):
            break
        c = S[:-1].mean(axis=0)
        xr = c + REFLECT * (c - S[-1])
        fr = fun(xr)
        evals += 1
        if F[0] <= fr < F[-2]:
            S[-1], F[-1] = xr, fr
            continue
        if fr < F[0]:
            xe = c + EXPAND * (xr - c)
            fe = fun(xe)
            evals += 1
            if fe < fr:
                S[-1], F[-1] = xe, fe
            else:
                S[-1], F[-1] = xr, fr
            continue
        if fr < F[-1]:
            xc = c + CONTRACT * (xr - c)
            fc = fun(xc)
            evals += 1
            if fc <= fr:
                S[-1], F[-1] = xc, fc
                continue
        else:
            xc = c + CONTRACT * (S[-1] - c)
            fc = fun(xc)
            evals += 1
            if fc < F[-1]:
                S[-1], F[-1] = xc, fc
                continue
        S[1:] = S[0] + SHRINK * (S[1:] - S[0])
        F[1:] = [fun(v) for v in S[1:]]
        evals += len(S) - 1
    k = int(np.argmin(F))
    if F[k] < best_f:
        best_x, best_f = S[k].copy(), float(F[k])
    return SimplexResult(best_x, best_f, start, it, evals)
