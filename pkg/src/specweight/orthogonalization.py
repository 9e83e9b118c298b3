"""Orthonormal polynomial families for a weighted domain.

Modified Gram-Schmidt with one full re-orthogonalization pass, run on the
values of the input basis at the nodes of a converged reference-quadrature
grid.  The input basis is the graded family of Legendre products on the
domain's bounding box: the first k+1 of them span the same space as the first
k+1 graded monomials, so the resulting ``Psi_k`` are the ones Gram-Schmidt on
monomials would produce, without the monomial conditioning loss.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import refquad
from .errors import DegenerateBasis, InvalidArgument
from .polycore import LEGENDRE, GradedOrder, Polynomial, basis_matrix, enumerate_multi_indices
from .weights import (DomainSpec, StructureMap, WeightSpec, config_to_json, domain_from_json,
                      weight_from_json)

DEFAULT_CAP = 200
DEGENERATE_RATIO = 1e-8


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """``Psi_0 .. Psi_M``; column ``k`` of ``coeffs`` holds ``Psi_k`` in the
    Legendre-product family on ``box``."""

    order: GradedOrder
    coeffs: np.ndarray
    weight: WeightSpec
    domain: DomainSpec
    box: tuple
    gram_residual: float
    structure: StructureMap = field(default_factory=StructureMap)
    beta: np.ndarray = None
    q: int = refquad.DEFAULT_Q

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.beta is None:
            b = np.zeros(c.shape[1])
            b[0] = 1.0
        else:
            b = np.array(self.beta, dtype=float)
        b.setflags(write=False)
        object.__setattr__(self, "beta", b)

    def __len__(self):
        return self.coeffs.shape[1]

    @property
    def dimension(self):
        return self.order.dimension

    @property
    def degree(self):
        return self.order.max_degree

    @cached_property
    def polys(self):
        return [Polynomial(self.order, self.coeffs[:, k], LEGENDRE, self.box) for k in range(len(self))]

    def evaluate(self, x, count=None):
        """Matrix ``V[i, k] = Psi_k(x_i)`` for the first ``count`` functions."""
        pts = np.asarray(x, dtype=float).reshape(-1, self.dimension)
        k = len(self) if count is None else count
        order = self.order
        c = self.coeffs[:, :k]
        if k < len(self):
            deg = int(order.degrees[k - 1])
            sub = enumerate_multi_indices(order.dimension, deg)
            c = c[: len(sub)]
            order = sub
        return basis_matrix(order, pts, LEGENDRE, self.box) @ c

    def truncate(self, degree: int) -> "OrthonormalBasis":
        if degree > self.degree or degree < 0:
            raise InvalidArgument(f"cannot truncate a degree-{self.degree} basis to degree {degree}")
        sub = enumerate_multi_indices(self.dimension, degree)
        k = len(sub)
        return OrthonormalBasis(sub, self.coeffs[:k, :k], self.weight, self.domain, self.box,
                                self.gram_residual, self.structure, self.beta[:k], self.q)

    def to_json(self) -> dict:
        return {
            **config_to_json(self.weight, self.domain),
            "dimension": self.dimension,
            "degree": self.degree,
            "family": LEGENDRE,
            "box": {"lo": list(self.box[0]), "hi": list(self.box[1])},
            "gram_residual": self.gram_residual,
            "beta": [float(v) for v in self.beta],
            "q": self.q,
            "coeffs": [[float(v) for v in self.coeffs[:, k]] for k in range(len(self))],
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    @classmethod
    def from_json(cls, obj) -> "OrthonormalBasis":
        if isinstance(obj, str):
            obj = json.loads(obj)
        order = enumerate_multi_indices(int(obj["dimension"]), int(obj["degree"]))
        rows = np.array(obj["coeffs"], dtype=float)
        if rows.shape != (len(order), len(order)):
            raise InvalidArgument("coefficient matrix does not match the stated degree")
        box = (tuple(obj["box"]["lo"]), tuple(obj["box"]["hi"]))
        return cls(order, rows.T, weight_from_json(obj["weight"]), domain_from_json(obj["domain"]), box,
                   float(obj["gram_residual"]), beta=obj.get("beta"),
                   q=int(obj.get("q", refquad.DEFAULT_Q)))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def _mgs_pass(Q, C, k):
    for j in range(k):
        r = Q[:, j] @ Q[:, k]
        Q[:, k] -= r * Q[:, j]
        C[:, k] -= r * C[:, j]


def gram_schmidt(weight: WeightSpec, domain: DomainSpec, N: int, tol: float = refquad.DEFAULT_TOL, *,
                 cap: int = DEFAULT_CAP, structure: StructureMap | None = None,
                 q: int | None = None) -> OrthonormalBasis:
    """Orthonormal ``Psi_k`` for ``(weight, domain)`` up to total degree ``N``.

    The weight need not be normalized: ``Psi_0`` is then ``1/sqrt(int w)``.
    Inner products use the reference grid at the first level where the Gram
    matrix of the input basis is converged to ``tol``; ``gram_residual`` is
    measured on the next finer level.  The Gauss order defaults to
    ``max(20, N + 2)`` so that products of basis functions are integrated
    exactly on smooth panels.
    """
    d = domain.dimension
    order = enumerate_multi_indices(d, N)
    K = len(order)
    q = max(refquad.DEFAULT_Q, N + 2) if q is None else q
    if K > cap:
        raise InvalidArgument(f"basis of {K} functions exceeds the cap of {cap}")
    lo, hi = domain.bbox()
    box = (tuple(float(v) for v in lo), tuple(float(v) for v in hi))

    def inputs(x):
        return basis_matrix(order, x, LEGENDRE, box)

    conv = refquad.gram(inputs, weight, domain, tol, structure=structure, q=q)
    nodes, wq, _ = refquad.grid(weight, domain, conv.level, structure, q)
    sw = np.sqrt(wq)
    Q = inputs(nodes) * sw[:, None]
    in_norms = np.linalg.norm(Q, axis=0)
    C = np.eye(K)
    for k in range(K):
        _mgs_pass(Q, C, k)
        _mgs_pass(Q, C, k)
        nrm = np.linalg.norm(Q[:, k])
        if not nrm > DEGENERATE_RATIO * in_norms[k]:
            raise DegenerateBasis(
                f"input function {order.index_list[k]} is numerically dependent on its predecessors "
                f"(relative norm {nrm / in_norms[k]:.3g})", multi_index=order.index_list[k])
        Q[:, k] /= nrm
        C[:, k] /= nrm

    fine_nodes, fine_wq, _ = refquad.grid(weight, domain, conv.level + 1, structure, q)
    V = inputs(fine_nodes) @ C
    G = (V * fine_wq[:, None]).T @ V
    resid = float(np.max(np.abs(G - np.eye(K))))
    beta = fine_wq @ V
    return OrthonormalBasis(order, C, weight, domain, box, resid, structure or StructureMap(), beta, q)


def verify_orthonormality(b: OrthonormalBasis, tol: float = refquad.DEFAULT_TOL) -> float:
    """Max deviation of the oracle Gram matrix of ``b`` from the identity."""
    G = refquad.gram(b.evaluate, b.weight, b.domain, tol / 10, structure=b.structure, q=b.q).value
    return float(np.max(np.abs(G - np.eye(len(b)))))
