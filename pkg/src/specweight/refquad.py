"""Reference (oracle) integration of ``f * w`` over a domain.

Composite tensor Gauss-Legendre of order ``q`` on panels that

* follow the domain's base cells,
* are cut along every discontinuity region reported by the structure map,
* are graded geometrically (ratio 1/4) toward singular points, with a power
  substitution on the innermost panel that absorbs ``dist**alpha`` behaviour.

Triangles use the Duffy map from the unit square with the apex on the vertex
that may carry a singularity.  Refinement level ``l`` splits every structure
cell uniformly ``2**l`` times per axis and deepens the grading; integration
stops when two successive levels agree to ``tol``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import AccuracyNotReached, InvalidArgument
from .weights import (Box, CellUnion, DomainSpec, Interval, StructureMap, Triangle,
                      WeightSpec, evaluate_weight, structure_map)

DEFAULT_Q = 20
DEFAULT_TOL = 1e-11
MAX_DEPTH = 12
GRADING_RATIO = 0.25
MAX_NODES = 3_000_000
_EPS = 1e-13
_CHUNK = 20_000


@dataclass(frozen=True)
class OracleResult:
    value: object
    error_estimate: float
    panels_used: int
    level: int = 0


@lru_cache(maxsize=None)
def _gauss01(q):
    x, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


# ---------------------------------------------------------------- geometry


def _clip(poly, n, c):
    """Part of convex polygon ``poly`` with ``n.x <= c`` (Sutherland-Hodgman)."""
    out = []
    k = len(poly)
    for i in range(k):
        p, r = poly[i], poly[(i + 1) % k]
        sp, sr = n @ p - c, n @ r - c
        if sp <= 0:
            out.append(p)
        if (sp < 0 < sr) or (sr < 0 < sp):
            t = sp / (sp - sr)
            out.append(p + t * (r - p))
    return out


def _poly_area(poly):
    if len(poly) < 3:
        return 0.0
    a = np.array(poly)
    x, y = a[:, 0], a[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _poly_to_cells(poly, scale):
    pts = []
    for p in poly:
        if not pts or np.max(np.abs(p - pts[-1])) > 1e-14 * scale:
            pts.append(p)
    while len(pts) > 1 and np.max(np.abs(pts[0] - pts[-1])) <= 1e-14 * scale:
        pts.pop()
    # drop collinear vertices
    clean = []
    k = len(pts)
    for i in range(k):
        a, b, c = pts[i - 1], pts[i], pts[(i + 1) % k]
        cross = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
        if abs(cross) > 1e-14 * scale * scale:
            clean.append(b)
    if len(clean) < 3 or _poly_area(clean) <= 1e-14 * scale * scale:
        return []
    if len(clean) == 4:
        a = np.array(clean)
        xs, ys = np.unique(np.round(a[:, 0], 15)), np.unique(np.round(a[:, 1], 15))
        if xs.size == 2 and ys.size == 2:
            return [("box", (float(xs[0]), float(ys[0])), (float(xs[1]), float(ys[1])))]
    return [("tri", tuple(clean[0]), tuple(clean[i]), tuple(clean[i + 1])) for i in range(1, len(clean) - 1)]


def _cell_poly(cell):
    if cell[0] == "box":
        (x0, y0), (x1, y1) = cell[1], cell[2]
        return [np.array(p, dtype=float) for p in ((x0, y0), (x1, y0), (x1, y1), (x0, y1))]
    return [np.array(p, dtype=float) for p in cell[1:]]


def _halfplanes(region):
    if isinstance(region, Triangle):
        return region.halfplanes()
    lo, hi = region.bbox()
    return [(np.array([-1.0, 0.0]), -lo[0]), (np.array([1.0, 0.0]), hi[0]),
            (np.array([0.0, -1.0]), -lo[1]), (np.array([0.0, 1.0]), hi[1])]


def _split_by_region_2d(cell, region, scale):
    if isinstance(region, CellUnion):
        cells = [cell]
        for b in region.boxes:
            cells = [piece for c in cells for piece in _split_by_region_2d(c, b, scale)]
        return cells
    poly = _cell_poly(cell)
    hp = _halfplanes(region)
    inside = poly
    for n, c in hp:
        inside = _clip(inside, n, c)
        if not inside:
            break
    if _poly_area(inside) <= 1e-14 * scale * scale:
        return [cell]
    if abs(_poly_area(inside) - _poly_area(poly)) <= 1e-14 * scale * scale:
        return [cell]
    pieces = _poly_to_cells(inside, scale)
    rest = poly
    for n, c in hp:
        out = _clip(rest, -n, -c)
        if out:
            pieces += _poly_to_cells(out, scale)
        rest = _clip(rest, n, c)
        if not rest:
            break
    return pieces


def _split_box_at(cell, coords_per_axis):
    lo, hi = cell[1], cell[2]
    cuts = []
    for j in range(len(lo)):
        cs = sorted({c for c in coords_per_axis[j] if lo[j] + _EPS < c < hi[j] - _EPS})
        cuts.append([lo[j]] + cs + [hi[j]])
    out = []
    for idx in np.ndindex(*[len(c) - 1 for c in cuts]):
        out.append(("box", tuple(cuts[j][i] for j, i in enumerate(idx)),
                    tuple(cuts[j][i + 1] for j, i in enumerate(idx))))
    return out


def _region_coords(region, d):
    if isinstance(region, CellUnion):
        coords = [set() for _ in range(d)]
        for b in region.boxes:
            for j, s in enumerate(_region_coords(b, d)):
                coords[j] |= s
        return coords
    lo, hi = region.bbox()
    return [{lo[j], hi[j]} for j in range(d)]


def _on_vertex(cell, p, scale):
    verts = _cell_vertices(cell)
    for v in verts:
        if max(abs(a - b) for a, b in zip(v, p)) <= 1e-13 * scale:
            return True
    return False


def _cell_vertices(cell):
    if cell[0] == "box":
        lo, hi = cell[1], cell[2]
        return [tuple(hi[j] if m >> j & 1 else lo[j] for j in range(len(lo))) for m in range(2 ** len(lo))]
    return list(cell[1:])


def _cell_contains(cell, p, tol):
    if cell[0] == "box":
        return all(l - tol <= x <= h + tol for x, l, h in zip(p, cell[1], cell[2]))
    return bool(Triangle(cell[1:]).contains(np.array([p]), tol=tol)[0])


def _split_tri_at(cell, p):
    v = [np.array(q) for q in cell[1:]]
    p = np.array(p)
    out = []
    for i in range(3):
        t = ("tri", tuple(p), tuple(v[i]), tuple(v[(i + 1) % 3]))
        if _poly_area([p, v[i], v[(i + 1) % 3]]) > 1e-15:
            out.append(t)
    return out


def _refine_uniform(cell):
    if cell[0] == "box":
        lo, hi = cell[1], cell[2]
        mid = [0.5 * (a + b) for a, b in zip(lo, hi)]
        return _split_box_at(cell, [[m] for m in mid])
    a, b, c = (np.array(q) for q in cell[1:])
    ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
    return [("tri",) + tuple(tuple(p) for p in t) for t in ((a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca))]


@lru_cache(maxsize=256)
def structure_cells(domain: DomainSpec, structure: StructureMap):
    """Cells on which the integrand is smooth up to singular vertices.

    Returns a tuple of ``(cell, singular)`` where ``singular`` is ``None`` or
    ``(point, exponent)`` sitting on a vertex of ``cell``.
    """
    d = domain.dimension
    scale = max(1.0, domain.diameter)
    cells = list(domain.cells())
    # discontinuities
    if d == 1:
        bps = structure.breakpoints
        for r in structure.regions:
            bps = bps + tuple(r.bbox()[0]) + tuple(r.bbox()[1])
        cells = [piece for c in cells for piece in _split_box_at(c, [bps])]
    else:
        for region in structure.regions:
            if region.dimension != d:
                raise InvalidArgument("discontinuity region dimension does not match the domain")
            new = []
            for c in cells:
                if c[0] == "box" and not isinstance(region, Triangle):
                    new += _split_box_at(c, _region_coords(region, d))
                elif d == 2:
                    new += _split_by_region_2d(c, region, scale)
                else:
                    raise InvalidArgument("triangular regions are supported in 2D only")
            cells = new
    # singular points become cell vertices
    sing = [(tuple(float(v) for v in p), float(a)) for p, a in structure.singular_points]
    for p, _ in sing:
        new = []
        for c in cells:
            if _cell_contains(c, p, 1e-14 * scale) and not _on_vertex(c, p, scale):
                new += _split_box_at(c, [[x] for x in p]) if c[0] == "box" else _split_tri_at(c, p)
            else:
                new.append(c)
        cells = new
    # at most one singular vertex per cell
    out = []
    stack = list(reversed(cells))
    guard = 0
    while stack:
        c = stack.pop()
        hits = [(p, a) for p, a in sing if _on_vertex(c, p, scale)]
        if len(hits) > 1:
            guard += 1
            if guard > 10_000:
                raise InvalidArgument("singular points too close together to separate")
            stack.extend(reversed(_refine_uniform(c)))
            continue
        out.append((c, hits[0] if hits else None))
    return tuple(out)


# ---------------------------------------------------------------- panels


def _power_for(alpha):
    for p in range(1, 9):
        v = p * (1.0 + alpha)
        if abs(v - round(v)) < 1e-12:
            return p
    return 8


def _grading_depth(d, alpha, level):
    if d <= 2:
        # the innermost substitution absorbs dist**alpha exactly; grading only
        # keeps the smooth factor well resolved near the point
        return min(2 + level, 12)
    base = math.ceil(14.0 / max(d + alpha, 0.25))
    return int(min(max(base, 2) + level, 12))


def _rule_interval(a, b, q, power=1, toward_a=True):
    t, w = _gauss01(q)
    if power == 1:
        return a + (b - a) * t, (b - a) * w
    s = t ** power
    jac = power * t ** (power - 1)
    h = b - a
    if toward_a:
        return a + h * s, h * jac * w
    return b - h * s, h * jac * w


def _box_nodes(lo, hi, q, sing_corner=None, power=1):
    axes = []
    for j in range(len(lo)):
        if sing_corner is not None and power > 1:
            toward_a = abs(sing_corner[j] - lo[j]) <= abs(sing_corner[j] - hi[j])
            axes.append(_rule_interval(lo[j], hi[j], q, power, toward_a))
        else:
            axes.append(_rule_interval(lo[j], hi[j], q))
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return nodes, weights


def _graded_boxes(lo, hi, corner, depth):
    """Boxes grading toward ``corner``; the last one touches it."""
    out = []
    lo, hi = list(lo), list(hi)
    for _ in range(depth):
        cuts = []
        for j in range(len(lo)):
            if abs(corner[j] - lo[j]) <= abs(corner[j] - hi[j]):
                cuts.append([lo[j] + GRADING_RATIO * (hi[j] - lo[j])])
            else:
                cuts.append([hi[j] - GRADING_RATIO * (hi[j] - lo[j])])
        kids = _split_box_at(("box", tuple(lo), tuple(hi)), cuts)
        nxt = None
        for k in kids:
            if all(k[1][j] <= corner[j] + _EPS and corner[j] - _EPS <= k[2][j] for j in range(len(lo))):
                nxt = k
            else:
                out.append(("box", k[1], k[2]))
        lo, hi = list(nxt[1]), list(nxt[2])
    out.append(("inner", tuple(lo), tuple(hi)))
    return out


def _tri_nodes(v0, v1, v2, q, depth=0, power=1):
    """Duffy map from the unit square; ``u -> 0`` collapses onto ``v0``."""
    v0, v1, v2 = (np.asarray(v, dtype=float) for v in (v0, v1, v2))
    area2 = abs((v1[0] - v0[0]) * (v2[1] - v0[1]) - (v2[0] - v0[0]) * (v1[1] - v0[1]))
    if depth:
        pieces = []
        hi = 1.0
        for _ in range(depth):
            lo = GRADING_RATIO * hi
            pieces.append(_rule_interval(lo, hi, q))
            hi = lo
        pieces.append(_rule_interval(0.0, hi, q, power, toward_a=True))
        u = np.concatenate([p[0] for p in pieces])
        wu = np.concatenate([p[1] for p in pieces])
    else:
        u, wu = _rule_interval(0.0, 1.0, q, power, toward_a=True)
    v, wv = _rule_interval(0.0, 1.0, q)
    U, Vv = np.meshgrid(u, v, indexing="ij")
    WU, WV = np.meshgrid(wu, wv, indexing="ij")
    U, Vv, W = U.ravel(), Vv.ravel(), (WU * WV).ravel()
    pts = v0 + U[:, None] * (v1 - v0) + (U * Vv)[:, None] * (v2 - v1)
    return pts, W * U * area2


def _corner_triangles(lo, hi, corner):
    """Split a 2D box into two triangles sharing the vertex ``corner``."""
    x0, y0 = lo
    x1, y1 = hi
    verts = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    i = min(range(4), key=lambda k: (verts[k][0] - corner[0]) ** 2 + (verts[k][1] - corner[1]) ** 2)
    c, n1, opp, n2 = verts[i], verts[(i + 1) % 4], verts[(i + 2) % 4], verts[(i + 3) % 4]
    return (c, n1, opp), (c, opp, n2)


def _cell_rule(cell, singular, q, level, d):
    if singular is None:
        if cell[0] == "box":
            return _box_nodes(cell[1], cell[2], q), 1
        return _tri_nodes(*cell[1:], q), 1
    p, alpha = singular
    depth = _grading_depth(d, alpha, level)
    if cell[0] == "box":
        parts = _graded_boxes(cell[1], cell[2], p, depth)
        nodes, weights = [], []
        for kind, lo, hi in parts:
            if kind != "inner":
                n, w = _box_nodes(lo, hi, q)
            elif d == 1:
                n, w = _box_nodes(lo, hi, q, sing_corner=p, power=_power_for(alpha))
            elif d == 2:
                # Duffy on each half; its Jacobian adds one power of dist
                halves = [_tri_nodes(*t, q, depth=0, power=_power_for(alpha + 1.0))
                          for t in _corner_triangles(lo, hi, p)]
                n = np.concatenate([h[0] for h in halves])
                w = np.concatenate([h[1] for h in halves])
            else:
                n, w = _box_nodes(lo, hi, q, sing_corner=p, power=_power_for(alpha / d))
            nodes.append(n)
            weights.append(w)
        return (np.concatenate(nodes), np.concatenate(weights)), len(parts)
    verts = list(cell[1:])
    i = min(range(3), key=lambda k: sum((a - b) ** 2 for a, b in zip(verts[k], p)))
    v0, v1, v2 = verts[i], verts[(i + 1) % 3], verts[(i + 2) % 3]
    return _tri_nodes(v0, v1, v2, q, depth=depth, power=_power_for(alpha + 1.0)), depth + 1


@lru_cache(maxsize=64)
def geometric_grid(domain: DomainSpec, structure: StructureMap, level: int, q: int = DEFAULT_Q):
    """Nodes and plain (unweighted) quadrature weights at refinement ``level``."""
    d = domain.dimension
    scale = max(1.0, domain.diameter)
    nodes, weights = [], []
    panels = 0
    for cell, sing in structure_cells(domain, structure):
        subs = [cell]
        for _ in range(level):
            subs = [k for c in subs for k in _refine_uniform(c)]
        for sub in subs:
            s = sing if (sing is not None and _on_vertex(sub, sing[0], scale)) else None
            (n, w), k = _cell_rule(sub, s, q, level, d)
            nodes.append(n)
            weights.append(w)
            panels += k
    nodes = np.concatenate(nodes).reshape(-1, d)
    weights = np.concatenate(weights)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights, panels


def _expected_nodes(domain, structure, level, q):
    n0 = len(structure_cells(domain, structure)) * q ** domain.dimension
    return n0 * (2 ** domain.dimension) ** level


def grid(weight: WeightSpec, domain: DomainSpec, level: int, structure: StructureMap | None = None,
         q: int = DEFAULT_Q):
    """``(nodes, weights * w(nodes), panels)`` at one refinement level."""
    s = structure_map(weight, domain).merge(structure)
    nodes, weights, panels = geometric_grid(domain, s, level, q)
    return nodes, weights * evaluate_weight(weight, nodes), panels


def _as_integrand(f):
    if f is None:
        return lambda x: np.ones(x.shape[0])
    if np.isscalar(f):
        c = float(f)
        return lambda x: np.full(x.shape[0], c)
    return f


def _refine(reduce, weight, domain, tol, structure, q, max_depth, start_level):
    if tol <= 0:
        raise InvalidArgument("tol must be positive")
    s = structure_map(weight, domain).merge(structure)
    prev = None
    best = None
    for level in range(start_level, max_depth + 1):
        if level > start_level and _expected_nodes(domain, s, level, q) > MAX_NODES:
            break
        nodes, weights, panels = geometric_grid(domain, s, level, q)
        wq = weights * evaluate_weight(weight, nodes)
        val = reduce(nodes, wq)
        if prev is not None:
            diff = float(np.max(np.abs(np.asarray(val) - np.asarray(prev))))
            scale = max(1.0, float(np.max(np.abs(val))))
            best = OracleResult(val, diff, panels, level)
            if diff < tol * scale:
                return best
        prev = val
    raise AccuracyNotReached(
        f"oracle did not reach tol={tol:g} by level {level}"
        + (f" (last difference {best.error_estimate:.3g})" if best else ""), best=best)


def integrate(f, weight: WeightSpec, domain: DomainSpec, tol: float = DEFAULT_TOL, *,
              structure: StructureMap | None = None, q: int = DEFAULT_Q, max_depth: int = MAX_DEPTH,
              start_level: int = 0) -> OracleResult:
    """Integrate ``f * weight`` over ``domain``.

    ``f`` maps an ``(n, d)`` array to shape ``(n,)`` or ``(n, ...)``; ``None``
    means the constant one.  ``structure`` adds the integrand's own kinks and
    singularities to those of the weight.  The result value is taken from the
    finest level; ``error_estimate`` is the max difference to the level below.
    """
    g = _as_integrand(f)

    def reduce(nodes, wq):
        return np.tensordot(wq, g(nodes), axes=(0, 0))

    res = _refine(reduce, weight, domain, tol, structure, q, max_depth, start_level)
    if np.ndim(res.value) == 0:
        res = OracleResult(float(res.value), res.error_estimate, res.panels_used, res.level)
    return res


def inner_product(f, g, weight, domain, tol=DEFAULT_TOL, *, structure=None) -> float:
    ff, gg = _as_integrand(f), _as_integrand(g)
    return integrate(lambda x: ff(x) * gg(x), weight, domain, tol, structure=structure).value


def gram(evaluator, weight, domain, tol=DEFAULT_TOL, *, structure=None, q=DEFAULT_Q,
         max_depth=MAX_DEPTH, start_level=0) -> OracleResult:
    """``G[i, j] = <b_i, b_j>_w`` for the columns returned by ``evaluator``."""

    def reduce(nodes, wq):
        G = 0.0
        for i in range(0, nodes.shape[0], _CHUNK):
            B = evaluator(nodes[i:i + _CHUNK])
            G = G + (B * wq[i:i + _CHUNK, None]).T @ B
        return G

    return _refine(reduce, weight, domain, tol, structure, q, max_depth, start_level)


def weighted_centroid(weight, domain, tol=1e-10):
    mass = integrate(None, weight, domain, tol).value
    first = integrate(lambda x: x, weight, domain, tol).value
    return np.atleast_1d(first) / mass


__all__ = ["OracleResult", "integrate", "inner_product", "gram", "grid", "geometric_grid",
           "structure_cells", "weighted_centroid", "Interval", "Box"]
