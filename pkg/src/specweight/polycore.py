"""Multi-indices, graded ordering and dense polynomials.

Polynomials are dense coefficient vectors aligned with a :class:`GradedOrder`.
Two coefficient families share that layout:

``monomial``
    ``p(x) = sum_k c_k x**nu_k``.
``legendre``
    ``p(x) = sum_k c_k prod_j L_{nu_k[j]}(t_j)`` where ``t`` is ``x`` mapped
    affinely from a box onto ``[-1, 1]^d`` and ``L_n`` is the Legendre
    polynomial.  The k-th product has leading monomial ``x**nu_k`` plus terms
    of lower total degree, so the first k+1 products span the same space as
    the first k+1 monomials.  This family stays well conditioned at degrees
    where monomial coefficients lose all precision (degree 40 in 1D, 22 in 2D).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg
from numpy.polynomial import polynomial as nppoly

from . import kernels
from .errors import InvalidArgument

MONOMIAL = "monomial"
LEGENDRE = "legendre"
_INT64_MAX = 2**63 - 1


def basis_size(d: int, N: int) -> int:
    """Number of multi-indices of dimension ``d`` with total degree <= ``N``."""
    if d < 1 or N < 0:
        raise InvalidArgument(f"basis_size needs d >= 1 and N >= 0, got d={d}, N={N}")
    n = math.comb(N + d, d)
    if n > _INT64_MAX:
        raise OverflowError(f"basis size C({N + d},{d}) overflows a 64-bit count")
    return n


def _descending(d, n):
    # all nu with |nu| = n, first coordinate most significant, descending
    if d == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _descending(d - 1, n - first):
            yield (first,) + rest


@dataclass(frozen=True)
class GradedOrder:
    dimension: int
    max_degree: int
    index_list: tuple = field(repr=False)

    def __len__(self):
        return len(self.index_list)

    def __eq__(self, other):
        return (
            isinstance(other, GradedOrder)
            and self.dimension == other.dimension
            and self.max_degree == other.max_degree
        )

    def __hash__(self):
        return hash((self.dimension, self.max_degree))

    @cached_property
    def exps(self) -> np.ndarray:
        a = np.array(self.index_list, dtype=np.intp).reshape(len(self.index_list), self.dimension)
        a.setflags(write=False)
        return a

    @cached_property
    def degrees(self) -> np.ndarray:
        a = self.exps.sum(axis=1)
        a.setflags(write=False)
        return a

    @cached_property
    def _positions(self):
        return {nu: k for k, nu in enumerate(self.index_list)}

    def position(self, nu) -> int:
        try:
            return self._positions[tuple(int(v) for v in nu)]
        except KeyError:
            raise InvalidArgument(f"multi-index {tuple(nu)} not in order of degree {self.max_degree}") from None

    def block(self, n: int) -> range:
        """Positions of the multi-indices of total degree exactly ``n``."""
        if n < 0 or n > self.max_degree:
            raise InvalidArgument(f"degree {n} outside 0..{self.max_degree}")
        start = basis_size(self.dimension, n - 1) if n > 0 else 0
        return range(start, basis_size(self.dimension, n))

    def count(self, n: int) -> int:
        """Number of multi-indices of total degree <= ``n``."""
        return basis_size(self.dimension, n)


@lru_cache(maxsize=None)
def enumerate_multi_indices(d: int, N: int) -> GradedOrder:
    """Graded-lex order: total degree ascending, then lexicographically
    descending with the first coordinate most significant.

    >>> enumerate_multi_indices(2, 2).index_list
    ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
    """
    if d < 1 or N < 0:
        raise InvalidArgument(f"enumerate_multi_indices needs d >= 1 and N >= 0, got d={d}, N={N}")
    basis_size(d, N)
    idx = tuple(nu for n in range(N + 1) for nu in _descending(d, n))
    return GradedOrder(d, N, idx)


def _as_points(x, d):
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1
    if d == 1 and x.ndim == 1 and x.shape[0] != 1:
        x = x[:, None]
        single = False
    x = np.atleast_2d(x)
    if x.ndim != 2 or x.shape[1] != d:
        raise InvalidArgument(f"points of dimension {x.shape[-1]} given to a {d}-dimensional polynomial")
    return x, single


def basis_matrix(order: GradedOrder, points, family=MONOMIAL, box=None) -> np.ndarray:
    """Values of every basis product at ``points``; shape ``(n, len(order))``."""
    pts = np.asarray(points, dtype=float).reshape(-1, order.dimension)
    deg = order.max_degree
    if family == MONOMIAL:
        tables = [kernels.power_table(pts[:, j], deg) for j in range(order.dimension)]
    elif family == LEGENDRE:
        lo, hi = (np.asarray(b, dtype=float) for b in box)
        t = (2.0 * pts - (lo + hi)) / (hi - lo)
        tables = [kernels.legendre_table(t[:, j], deg) for j in range(order.dimension)]
    else:
        raise InvalidArgument(f"unknown coefficient family {family!r}")
    return kernels.product_matrix(tables, order.exps)


class Polynomial:
    """Dense polynomial over a graded order.  Immutable."""

    __slots__ = ("order", "coeffs", "family", "box")

    def __init__(self, order: GradedOrder, coeffs, family: str = MONOMIAL, box=None):
        c = np.array(coeffs, dtype=float).ravel()
        if c.shape[0] != len(order):
            raise InvalidArgument(f"{c.shape[0]} coefficients for an order of length {len(order)}")
        if family not in (MONOMIAL, LEGENDRE):
            raise InvalidArgument(f"unknown coefficient family {family!r}")
        if family == LEGENDRE:
            if box is None:
                raise InvalidArgument("legendre family needs a box")
            lo, hi = (tuple(float(v) for v in b) for b in box)
            if len(lo) != order.dimension or any(h <= l for l, h in zip(lo, hi)):
                raise InvalidArgument(f"bad box {box} for dimension {order.dimension}")
            box = (lo, hi)
        else:
            box = None
        c.setflags(write=False)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "box", box)

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    @classmethod
    def zero(cls, order, family=MONOMIAL, box=None):
        return cls(order, np.zeros(len(order)), family, box)

    @classmethod
    def monomial(cls, order, nu, scale=1.0):
        c = np.zeros(len(order))
        c[order.position(nu)] = scale
        return cls(order, c)

    @property
    def dimension(self):
        return self.order.dimension

    @property
    def degree(self):
        return self.order.max_degree

    def __call__(self, x):
        return evaluate(self, x)

    def __repr__(self):
        return f"Polynomial(d={self.dimension}, N={self.degree}, family={self.family})"

    def to_json(self) -> dict:
        out = {
            "dimension": self.dimension,
            "degree": self.degree,
            "family": self.family,
            "coeffs": [float(v) for v in self.coeffs],
        }
        if self.box is not None:
            out["box"] = {"lo": list(self.box[0]), "hi": list(self.box[1])}
        return out

    @classmethod
    def from_json(cls, obj) -> "Polynomial":
        if isinstance(obj, str):
            obj = json.loads(obj)
        order = enumerate_multi_indices(int(obj["dimension"]), int(obj["degree"]))
        family = obj.get("family", MONOMIAL)
        box = None
        if "box" in obj:
            box = (obj["box"]["lo"], obj["box"]["hi"])
        return cls(order, obj["coeffs"], family, box)


def evaluate(p: Polynomial, x):
    """Evaluate ``p`` at one point (returns a float) or at rows of an array."""
    pts, single = _as_points(x, p.dimension)
    vals = basis_matrix(p.order, pts, p.family, p.box) @ p.coeffs
    return float(vals[0]) if single else vals


def axpy(a: float, p: Polynomial, q: Polynomial) -> Polynomial:
    """Coefficient-wise ``a*p + q``."""
    if p.order != q.order or p.family != q.family or p.box != q.box:
        raise InvalidArgument("axpy needs polynomials over the same order and family")
    return Polynomial(p.order, a * p.coeffs + q.coeffs, p.family, p.box)


def _legendre_to_power(deg, lo, hi):
    # T[a, p]: coefficient of x**p in L_a((2x - lo - hi)/(hi - lo))
    scale, shift = 2.0 / (hi - lo), -(lo + hi) / (hi - lo)
    T = np.zeros((deg + 1, deg + 1))
    for a in range(deg + 1):
        in_t = npleg.leg2poly(np.eye(deg + 1)[a])
        acc = np.zeros(1)
        for c in in_t[::-1]:
            acc = nppoly.polyadd(nppoly.polymul(acc, [shift, scale]), [c])
        T[a, : acc.shape[0]] = acc[: deg + 1]
    return T


def legendre_to_monomial_matrix(order: GradedOrder, box) -> np.ndarray:
    """Matrix ``S`` with ``monomial_coeffs = S @ legendre_coeffs``."""
    lo, hi = box
    tabs = [_legendre_to_power(order.max_degree, lo[j], hi[j]) for j in range(order.dimension)]
    exps = order.exps
    S = np.ones((len(order), len(order)))
    for j in range(order.dimension):
        S *= tabs[j][exps[:, j]][:, exps[:, j]].T
    return S


def to_monomial(p: Polynomial) -> Polynomial:
    if p.family == MONOMIAL:
        return p
    S = legendre_to_monomial_matrix(p.order, p.box)
    return Polynomial(p.order, S @ p.coeffs)
