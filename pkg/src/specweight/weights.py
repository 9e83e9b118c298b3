"""Domains, weight functions and their structural features.

Weights form a closed set of named variants so that every discontinuity and
singularity is known up front; :func:`structure_map` reports them and the
reference quadrature partitions and grades its panels accordingly.

All specs are frozen dataclasses (hashable, shareable between threads).
Points are passed as arrays of shape ``(n, d)``.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidArgument, InvalidWeight, SingularEvaluation

# ---------------------------------------------------------------- domains


def _pts(x, d):
    x = np.asarray(x, dtype=float)
    if d == 1 and x.ndim == 1:
        x = x[:, None]
    x = np.atleast_2d(x)
    if x.shape[1] != d:
        raise InvalidArgument(f"points of dimension {x.shape[1]} for a {d}-dimensional domain")
    return x


class DomainSpec:
    """Base class for the bounded integration regions."""

    dimension: int

    def bbox(self):
        raise NotImplementedError

    def cells(self):
        """Base cells: list of ``("box", lo, hi)`` or ``("tri", v0, v1, v2)``."""
        raise NotImplementedError

    def contains(self, x, tol=1e-12):
        raise NotImplementedError

    def project(self, p):
        """Closest point of the closed domain to the single point ``p``."""
        raise NotImplementedError

    @property
    def measure(self):
        total = 0.0
        for c in self.cells():
            if c[0] == "box":
                total += float(np.prod(np.subtract(c[2], c[1])))
            else:
                total += _tri_area(*c[1:])
        return total

    @property
    def diameter(self):
        lo, hi = self.bbox()
        return float(np.linalg.norm(np.subtract(hi, lo)))

    def distance(self, p):
        p = np.asarray(p, dtype=float)
        return float(np.linalg.norm(p - self.project(p)))

    def sample(self, rng, n=1):
        """Uniform points by rejection from the bounding box."""
        lo, hi = (np.asarray(b) for b in self.bbox())
        out = []
        while len(out) < n:
            cand = rng.uniform(lo, hi, size=(max(4, 2 * n), self.dimension))
            for row in cand[self.contains(cand, tol=0.0)]:
                out.append(row)
        return np.array(out[:n])

    def vertices(self):
        """Corner points of the base cells (used to place singular features)."""
        pts = []
        for c in self.cells():
            if c[0] == "box":
                lo, hi = c[1], c[2]
                for mask in range(2 ** len(lo)):
                    pts.append(tuple(hi[j] if mask >> j & 1 else lo[j] for j in range(len(lo))))
            else:
                pts.extend(c[1:])
        return pts

    def to_json(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Interval(DomainSpec):
    a: float
    b: float

    def __post_init__(self):
        if not self.b > self.a:
            raise InvalidArgument(f"interval needs a < b, got [{self.a}, {self.b}]")

    dimension = 1

    def bbox(self):
        return (self.a,), (self.b,)

    def cells(self):
        return [("box", (self.a,), (self.b,))]

    def contains(self, x, tol=1e-12):
        x = _pts(x, 1)[:, 0]
        return (x >= self.a - tol) & (x <= self.b + tol)

    def project(self, p):
        return np.clip(np.asarray(p, dtype=float).reshape(1), self.a, self.b)

    def to_json(self):
        return {"type": "interval", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Box(DomainSpec):
    intervals: tuple

    def __post_init__(self):
        iv = tuple((float(a), float(b)) for a, b in self.intervals)
        if not iv or len(iv) > 3 or any(not b > a for a, b in iv):
            raise InvalidArgument(f"box needs 1..3 nondegenerate intervals, got {self.intervals}")
        object.__setattr__(self, "intervals", iv)

    @property
    def dimension(self):
        return len(self.intervals)

    @property
    def lo(self):
        return tuple(a for a, _ in self.intervals)

    @property
    def hi(self):
        return tuple(b for _, b in self.intervals)

    def bbox(self):
        return self.lo, self.hi

    def cells(self):
        return [("box", self.lo, self.hi)]

    def contains(self, x, tol=1e-12):
        x = _pts(x, self.dimension)
        return np.all((x >= np.array(self.lo) - tol) & (x <= np.array(self.hi) + tol), axis=1)

    def project(self, p):
        return np.clip(np.asarray(p, dtype=float), self.lo, self.hi)

    def to_json(self):
        return {"type": "box", "intervals": [list(iv) for iv in self.intervals]}


def _tri_area(v0, v1, v2):
    return 0.5 * abs((v1[0] - v0[0]) * (v2[1] - v0[1]) - (v2[0] - v0[0]) * (v1[1] - v0[1]))


def _closest_on_segment(p, a, b):
    ab = b - a
    t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0)
    return a + t * ab


@dataclass(frozen=True)
class Triangle(DomainSpec):
    vertices_: tuple

    def __post_init__(self):
        v = tuple(tuple(float(c) for c in p) for p in self.vertices_)
        if len(v) != 3 or any(len(p) != 2 for p in v):
            raise InvalidArgument("triangle needs 3 vertices in R^2")
        if _tri_area(*v) <= 0:
            raise InvalidArgument(f"degenerate triangle {v}")
        object.__setattr__(self, "vertices_", v)

    dimension = 2

    def bbox(self):
        a = np.array(self.vertices_)
        return tuple(a.min(axis=0)), tuple(a.max(axis=0))

    def cells(self):
        return [("tri",) + self.vertices_]

    def _bary(self, x):
        (x0, y0), (x1, y1), (x2, y2) = self.vertices_
        det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        l1 = ((x[:, 0] - x0) * (y2 - y0) - (x2 - x0) * (x[:, 1] - y0)) / det
        l2 = ((x1 - x0) * (x[:, 1] - y0) - (x[:, 0] - x0) * (y1 - y0)) / det
        return 1.0 - l1 - l2, l1, l2

    def contains(self, x, tol=1e-12):
        l0, l1, l2 = self._bary(_pts(x, 2))
        return (l0 >= -tol) & (l1 >= -tol) & (l2 >= -tol)

    def project(self, p):
        p = np.asarray(p, dtype=float)
        if self.contains(p[None, :], tol=0.0)[0]:
            return p.copy()
        v = [np.array(q) for q in self.vertices_]
        cands = [_closest_on_segment(p, v[i], v[(i + 1) % 3]) for i in range(3)]
        return min(cands, key=lambda c: float(np.sum((c - p) ** 2)))

    def halfplanes(self):
        """``(n, c)`` pairs with the triangle equal to ``{x : n.x <= c}``."""
        v = [np.array(q) for q in self.vertices_]
        orient = np.sign((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]))
        out = []
        for i in range(3):
            a, b = v[i], v[(i + 1) % 3]
            n = orient * np.array([b[1] - a[1], a[0] - b[0]])
            out.append((n, float(n @ a)))
        return out

    def to_json(self):
        return {"type": "triangle", "vertices": [list(p) for p in self.vertices_]}


@dataclass(frozen=True)
class CellUnion(DomainSpec):
    boxes: tuple

    def __post_init__(self):
        bx = tuple(b if isinstance(b, Box) else Box(tuple(b)) for b in self.boxes)
        if not bx:
            raise InvalidArgument("cell_union needs at least one box")
        d = bx[0].dimension
        if any(b.dimension != d for b in bx):
            raise InvalidArgument("cell_union boxes must share a dimension")
        for i in range(len(bx)):
            for j in range(i + 1, len(bx)):
                overlap = np.prod([max(0.0, min(bh, ch) - max(bl, cl))
                                   for (bl, bh), (cl, ch) in zip(bx[i].intervals, bx[j].intervals)])
                if overlap > 0:
                    raise InvalidArgument("cell_union boxes must have disjoint interiors")
        object.__setattr__(self, "boxes", bx)

    @property
    def dimension(self):
        return self.boxes[0].dimension

    def bbox(self):
        lo = np.min([b.lo for b in self.boxes], axis=0)
        hi = np.max([b.hi for b in self.boxes], axis=0)
        return tuple(lo), tuple(hi)

    def cells(self):
        return [("box", b.lo, b.hi) for b in self.boxes]

    def contains(self, x, tol=1e-12):
        x = _pts(x, self.dimension)
        out = np.zeros(x.shape[0], dtype=bool)
        for b in self.boxes:
            out |= b.contains(x, tol)
        return out

    def project(self, p):
        cands = [b.project(p) for b in self.boxes]
        p = np.asarray(p, dtype=float)
        return min(cands, key=lambda c: float(np.sum((c - p) ** 2)))

    def to_json(self):
        return {"type": "cell_union", "boxes": [b.to_json()["intervals"] for b in self.boxes]}


def domain_from_json(obj) -> DomainSpec:
    kind = obj.get("type")
    if kind == "interval":
        return Interval(float(obj["a"]), float(obj["b"]))
    if kind == "box":
        return Box(tuple(tuple(iv) for iv in obj["intervals"]))
    if kind == "triangle":
        return Triangle(tuple(tuple(v) for v in obj["vertices"]))
    if kind == "cell_union":
        return CellUnion(tuple(Box(tuple(tuple(iv) for iv in b)) for b in obj["boxes"]))
    raise InvalidArgument(f"unknown domain type {kind!r}")


def lshape() -> CellUnion:
    """``([-1,1] x [-1,0]) U ([0,1] x [-1,1])`` as two interior-disjoint boxes."""
    return CellUnion((Box(((-1.0, 1.0), (-1.0, 0.0))), Box(((0.0, 1.0), (0.0, 1.0)))))


def region_boundary(q: DomainSpec):
    """Boundary pieces of a region as segments (pairs of points)."""
    if isinstance(q, Interval):
        return [((q.a,), (q.a,)), ((q.b,), (q.b,))]
    if isinstance(q, Triangle):
        v = q.vertices_
        return [(v[i], v[(i + 1) % 3]) for i in range(3)]
    boxes = q.boxes if isinstance(q, CellUnion) else (q,)
    segs = []
    for b in boxes:
        if b.dimension == 1:
            segs += [((b.lo[0],), (b.lo[0],)), ((b.hi[0],), (b.hi[0],))]
        elif b.dimension == 2:
            (x0, x1), (y0, y1) = b.intervals
            segs += [((x0, y0), (x1, y0)), ((x1, y0), (x1, y1)), ((x1, y1), (x0, y1)), ((x0, y1), (x0, y0))]
        else:
            raise InvalidArgument("boundary segments are only reported for d <= 2")
    return segs


# ---------------------------------------------------------------- structure


@dataclass(frozen=True)
class StructureMap:
    """Where a weight (or integrand) stops being smooth.

    ``singular_points`` entries are ``(point, exponent)``: near the point the
    integrand behaves like ``dist**exponent``.  ``regions`` are the sets whose
    boundaries carry the discontinuities; quadrature panels are aligned with
    them.
    """

    discontinuity_segments: tuple = ()
    singular_points: tuple = ()
    singular_edges: tuple = ()
    regions: tuple = ()

    def merge(self, other: "StructureMap | None") -> "StructureMap":
        if other is None:
            return self

        def uniq(a, b):
            return tuple(dict.fromkeys(a + b))

        # one entry per location; the smallest exponent grades hardest
        pts = {}
        for p, e in self.singular_points + other.singular_points:
            pts[p] = min(e, pts.get(p, e))

        return StructureMap(
            uniq(self.discontinuity_segments, other.discontinuity_segments),
            tuple(pts.items()),
            uniq(self.singular_edges, other.singular_edges),
            uniq(self.regions, other.regions),
        )

    @property
    def is_empty(self):
        return not (self.discontinuity_segments or self.singular_points or self.singular_edges)

    @property
    def breakpoints(self):
        """1D discontinuity locations."""
        return tuple(sorted({s[0][0] for s in self.discontinuity_segments if len(s[0]) == 1}))


def breaks_1d(*xs) -> StructureMap:
    """Structure of a 1D integrand with kinks or jumps at ``xs``."""
    return StructureMap(discontinuity_segments=tuple(((float(x),), (float(x),)) for x in xs))


def point_singularity(point, exponent) -> StructureMap:
    return StructureMap(singular_points=((tuple(float(c) for c in point), float(exponent)),))


# ---------------------------------------------------------------- weights


class WeightSpec:
    """Base class of the weight variants; ``normalization`` scales the value."""

    normalization: float
    tag = ""

    def raw(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return evaluate_weight(self, x)

    def with_normalization(self, factor):
        return dataclasses.replace(self, normalization=float(factor))

    def _structure(self, domain):
        return StructureMap()

    def to_json(self):
        out = {"type": self.tag}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, DomainSpec):
                v = v.to_json()
            elif f.name == "factors":
                v = [w.to_json() for w in v]
            elif f.name == "terms":
                v = [[list(e), c] for e, c in v]
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out


@dataclass(frozen=True)
class Constant(WeightSpec):
    c: float = 1.0
    normalization: float = 1.0
    tag = "constant"

    def raw(self, x):
        return np.full(x.shape[0], float(self.c))


@dataclass(frozen=True)
class PolyFactor(WeightSpec):
    """``sum_i coeff_i * x**exps_i``, e.g. ``1 - x**2`` as ``(((0,), 1), ((2,), -1))``."""

    terms: tuple = (((0,), 1.0),)
    normalization: float = 1.0
    tag = "poly_factor"

    def __post_init__(self):
        t = tuple((tuple(int(e) for e in ex), float(c)) for ex, c in self.terms)
        object.__setattr__(self, "terms", t)

    def raw(self, x):
        out = np.zeros(x.shape[0])
        for ex, c in self.terms:
            if len(ex) != x.shape[1]:
                raise InvalidArgument("poly_factor term dimension does not match the points")
            out += c * np.prod(x ** np.array(ex), axis=1)
        return out


@dataclass(frozen=True)
class IndicatorComposite(WeightSpec):
    """``c * (chi_Q + 1)``; ``Q`` is closed (its boundary counts as inside)."""

    c: float = 1.0
    region: DomainSpec = None
    normalization: float = 1.0
    tag = "indicator_composite"

    def __post_init__(self):
        if self.region is None:
            raise InvalidArgument("indicator_composite needs a region Q")

    def raw(self, x):
        inside = self.region.contains(x, tol=1e-14)
        return float(self.c) * (inside.astype(float) + 1.0)

    def _structure(self, domain):
        return StructureMap(discontinuity_segments=tuple(region_boundary(self.region)),
                            regions=(self.region,))


@dataclass(frozen=True)
class InvSqrt1D(WeightSpec):
    """``1 / (2 sqrt(1 - |x|))`` on ``[-1, 1]``."""

    normalization: float = 1.0
    tag = "inv_sqrt_1d"

    def raw(self, x):
        r = 1.0 - np.abs(x[:, 0])
        if np.any(r <= 0):
            raise SingularEvaluation("inv_sqrt_1d evaluated at |x| >= 1")
        return 0.5 / np.sqrt(r)

    def _structure(self, domain):
        return StructureMap(discontinuity_segments=(((0.0,), (0.0,)),),
                            singular_points=(((-1.0,), -0.5), ((1.0,), -0.5)))


@dataclass(frozen=True)
class Chebyshev1D(WeightSpec):
    """``1 / sqrt(1 - x**2)`` on ``[-1, 1]``."""

    normalization: float = 1.0
    tag = "chebyshev_1d"

    def raw(self, x):
        r = 1.0 - x[:, 0] ** 2
        if np.any(r <= 0):
            raise SingularEvaluation("chebyshev_1d evaluated at |x| >= 1")
        return 1.0 / np.sqrt(r)

    def _structure(self, domain):
        return StructureMap(singular_points=(((-1.0,), -0.5), ((1.0,), -0.5)))


@dataclass(frozen=True)
class RadialPower(WeightSpec):
    """``|x - center|**(2 alpha)``, i.e. ``(x**2 + y**2)**alpha`` about the origin."""

    alpha: float = 0.25
    center: tuple = (0.0, 0.0)
    normalization: float = 1.0
    tag = "radial_power"

    def __post_init__(self):
        if not self.alpha > -1:
            raise InvalidArgument(f"radial_power needs alpha > -1, got {self.alpha}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def raw(self, x):
        r2 = np.sum((x - np.array(self.center)) ** 2, axis=1)
        if self.alpha < 0 and np.any(r2 == 0):
            raise SingularEvaluation("radial_power with alpha < 0 evaluated at its center")
        return r2 ** float(self.alpha)

    def _structure(self, domain):
        if self.alpha >= 0 and float(self.alpha).is_integer():
            return StructureMap()
        if not domain.contains(np.array([self.center]), tol=1e-12)[0]:
            return StructureMap()
        return StructureMap(singular_points=((self.center, 2.0 * float(self.alpha)),))


@dataclass(frozen=True)
class Product(WeightSpec):
    factors: tuple = ()
    normalization: float = 1.0
    tag = "product"

    def __post_init__(self):
        if not self.factors:
            raise InvalidArgument("product needs at least one factor")
        object.__setattr__(self, "factors", tuple(self.factors))

    def raw(self, x):
        out = np.ones(x.shape[0])
        for w in self.factors:
            out *= evaluate_weight(w, x)
        return out

    def _structure(self, domain):
        s = StructureMap()
        for w in self.factors:
            s = s.merge(w._structure(domain))
        return s


_VARIANTS = {cls.tag: cls for cls in (Constant, PolyFactor, IndicatorComposite, InvSqrt1D,
                                      Chebyshev1D, RadialPower, Product)}


def weight_from_json(obj) -> WeightSpec:
    obj = dict(obj)
    kind = obj.pop("type", None)
    if kind not in _VARIANTS:
        raise InvalidArgument(f"unknown weight type {kind!r}")
    if kind == "indicator_composite":
        obj["region"] = domain_from_json(obj["region"])
    elif kind == "product":
        obj["factors"] = tuple(weight_from_json(w) for w in obj["factors"])
    elif kind == "poly_factor":
        obj["terms"] = tuple((tuple(e), c) for e, c in obj["terms"])
    elif kind == "radial_power" and "center" in obj:
        obj["center"] = tuple(obj["center"])
    try:
        return _VARIANTS[kind](**obj)
    except TypeError as exc:
        raise InvalidArgument(f"bad fields for weight {kind!r}: {exc}") from None


def load_config(path_or_obj):
    """Read ``{"domain": ..., "weight": ...}`` from a path, JSON text or dict."""
    obj = path_or_obj
    if not isinstance(obj, dict):
        text = str(obj)
        if text.lstrip().startswith("{"):
            obj = json.loads(text)
        else:
            with open(text) as fh:
                obj = json.load(fh)
    try:
        return weight_from_json(obj["weight"]), domain_from_json(obj["domain"])
    except KeyError as exc:
        raise InvalidArgument(f"config is missing {exc}") from None


def config_to_json(weight: WeightSpec, domain: DomainSpec) -> dict:
    return {"domain": domain.to_json(), "weight": weight.to_json()}


# ---------------------------------------------------------------- operations


def evaluate_weight(w: WeightSpec, x):
    """Pointwise ``normalization * w(x)``.

    ``x`` is either an ``(n, d)`` array (returns an array) or a single point
    (returns a float).  A flat array is read as n points only for weights that
    are one-dimensional by construction.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 0 or (x.ndim == 1 and not _is_1d(w))
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x[:, None] if _is_1d(w) else x[None, :]
    vals = float(w.normalization) * w.raw(x)
    return float(vals[0]) if single else vals


def _is_1d(w):
    if isinstance(w, (InvSqrt1D, Chebyshev1D)):
        return True
    if isinstance(w, Product):
        return any(_is_1d(f) for f in w.factors)
    if isinstance(w, IndicatorComposite):
        return w.region.dimension == 1
    if isinstance(w, PolyFactor):
        return len(w.terms[0][0]) == 1
    if isinstance(w, RadialPower):
        return len(w.center) == 1
    return False


def structure_map(w: WeightSpec, domain: DomainSpec) -> StructureMap:
    return w._structure(domain)


def normalize(w: WeightSpec, domain: DomainSpec, tol: float = 1e-12) -> WeightSpec:
    """Rescale ``w`` so that it integrates to one over ``domain``."""
    from . import refquad

    res = refquad.integrate(None, w, domain, tol=tol)
    total = res.value
    if not np.isfinite(total) or total <= 0:
        raise InvalidWeight(f"weight integrates to {total}; cannot normalize")
    return w.with_normalization(w.normalization / total)


@dataclass(frozen=True)
class WeightedDomain:
    """A (weight, domain) pair, the usual unit handed around."""

    weight: WeightSpec
    domain: DomainSpec
    extra: StructureMap = field(default_factory=StructureMap)

    @cached_property
    def structure(self):
        return structure_map(self.weight, self.domain).merge(self.extra)
