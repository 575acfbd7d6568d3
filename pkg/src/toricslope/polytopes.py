"""Exact rational polytope data for toric models of dimension 1 and 2.

All coordinates are :class:`fractions.Fraction`; nothing here touches floats
except the ``support`` evaluation on numeric grids.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import gcd
from typing import Iterable, Sequence

import numpy as np

Point = tuple[Fraction, ...]


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, float):
        return Fraction(v).limit_denominator(10**12)
    return Fraction(v)


def _pt(v: Iterable) -> Point:
    return tuple(_frac(c) for c in v)


def _dot(a: Sequence, b: Sequence) -> Fraction:
    return sum((Fraction(x) * Fraction(y) for x, y in zip(a, b)), Fraction(0))


def _cross(o: Point, a: Point, b: Point) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: Iterable[Sequence]) -> tuple[Point, ...]:
    """Exact convex hull; counter-clockwise vertex order for n = 2."""
    pts = sorted(set(_pt(p) for p in points))
    if not pts:
        raise ValueError("empty point set")
    n = len(pts[0])
    if n == 1:
        return (pts[0],) if pts[0] == pts[-1] else (pts[0], pts[-1])
    if n != 2:
        raise ValueError("only dimensions 1 and 2 are supported")
    if len(pts) <= 2:
        return tuple(pts)
    lower: list[Point] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return tuple(lower[:-1] + upper[:-1])


def polygon_area_centroid(verts: Sequence[Point]) -> tuple[Fraction, Point]:
    """Signed-area shoelace for a CCW convex polygon; degenerate gives area 0."""
    if len(verts) < 3:
        return Fraction(0), verts[0] if verts else (Fraction(0), Fraction(0))
    a = Fraction(0)
    cx = Fraction(0)
    cy = Fraction(0)
    for i in range(len(verts)):
        x0, y0 = verts[i]
        x1, y1 = verts[(i + 1) % len(verts)]
        c = x0 * y1 - x1 * y0
        a += c
        cx += (x0 + x1) * c
        cy += (y0 + y1) * c
    a /= 2
    if a == 0:
        return Fraction(0), verts[0]
    return a, (cx / (6 * a), cy / (6 * a))


def clip_polygon(verts: Sequence[Point], a: Sequence, b) -> tuple[Point, ...]:
    """Intersect a convex polygon with the half-plane ``<a, mu> + b >= 0``."""
    a = _pt(a)
    b = _frac(b)
    out: list[Point] = []
    m = len(verts)
    for i in range(m):
        p = verts[i]
        q = verts[(i + 1) % m]
        fp = _dot(a, p) + b
        fq = _dot(a, q) + b
        if fp >= 0:
            out.append(p)
        if (fp > 0 and fq < 0) or (fp < 0 and fq > 0):
            s = fp / (fp - fq)
            out.append((p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])))
    dedup: list[Point] = []
    for p in out:
        if not dedup or dedup[-1] != p:
            dedup.append(p)
    if len(dedup) > 1 and dedup[0] == dedup[-1]:
        dedup.pop()
    return tuple(dedup)


def clip_segment(p: Point, q: Point, a: Sequence, b) -> tuple[Point, Point] | None:
    """Intersect the segment [p, q] with ``<a, mu> + b >= 0``."""
    a = _pt(a)
    b = _frac(b)
    fp = _dot(a, p) + b
    fq = _dot(a, q) + b
    if fp < 0 and fq < 0:
        return None
    if fp >= 0 and fq >= 0:
        return p, q
    s = fp / (fp - fq)
    r = tuple(pi + s * (qi - pi) for pi, qi in zip(p, q))
    return (p, r) if fp >= 0 else (r, q)


@dataclass(frozen=True)
class ClassDescriptor:
    """Support-function data ``h(x) = max_v <v, x>`` of a rational polytope.

    Records the asymptotic linear growth of an invariant potential and hence
    its cohomology class. The zero descriptor has the single vertex 0.
    """

    vertices: tuple[Point, ...]

    @classmethod
    def zero(cls, n: int) -> "ClassDescriptor":
        return cls(((Fraction(0),) * n,))

    @classmethod
    def from_points(cls, pts: Iterable[Sequence]) -> "ClassDescriptor":
        return cls(convex_hull(pts))

    @property
    def dimension(self) -> int:
        return len(self.vertices[0])

    def support(self, x: np.ndarray) -> np.ndarray:
        """Evaluate ``h`` on points of shape ``(..., n)``."""
        v = np.array([[float(c) for c in p] for p in self.vertices])
        return np.max(np.tensordot(x, v, axes=([-1], [1])), axis=-1)

    def support_exact(self, a: Sequence) -> Fraction:
        return max(_dot(a, v) for v in self.vertices)

    def __add__(self, other: "ClassDescriptor") -> "ClassDescriptor":
        if other.dimension != self.dimension:
            raise ValueError("dimension mismatch")
        pts = [tuple(p + q for p, q in zip(u, w)) for u in self.vertices for w in other.vertices]
        return ClassDescriptor.from_points(pts)

    def scaled(self, s) -> "ClassDescriptor":
        s = _frac(s)
        if s == 0:
            return ClassDescriptor.zero(self.dimension)
        return ClassDescriptor.from_points([tuple(s * c for c in p) for p in self.vertices])

    def product(self, other: "ClassDescriptor") -> "ClassDescriptor":
        pts = [u + w for u in self.vertices for w in other.vertices]
        return ClassDescriptor.from_points(pts)

    def is_zero(self) -> bool:
        return all(c == 0 for p in self.vertices for c in p)


def _primitive(v: Sequence[int]) -> tuple[int, ...]:
    g = 0
    for c in v:
        g = gcd(g, int(c))
    if g == 0:
        raise ValueError("zero normal")
    return tuple(int(c) // g for c in v)


@dataclass(frozen=True)
class DelzantPolytope:
    """Polytope ``{mu : <u_F, mu> + c_F >= 0}`` with inward primitive normals.

    Parameters
    ----------
    normals : tuple of int tuples
        Inward primitive facet normals ``u_F``.
    offsets : tuple of Fraction
        Facet constants ``c_F``.
    """

    normals: tuple[tuple[int, ...], ...]
    offsets: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.normals) != len(self.offsets):
            raise ValueError("normals and offsets differ in length")
        n = len(self.normals[0])
        if n not in (1, 2):
            raise ValueError(f"unsupported dimension {n}; only n in {{1, 2}}")
        for u in self.normals:
            if len(u) != n or _primitive(u) != tuple(u):
                raise ValueError(f"normal {u} is not a primitive integer vector")
        object.__setattr__(self, "offsets", tuple(_frac(c) for c in self.offsets))
        verts = self._compute_vertices()
        if len(verts) < n + 1:
            raise ValueError("polytope is empty, unbounded or not full-dimensional")
        object.__setattr__(self, "_vertices", verts)
        self._check_delzant()

    # construction helpers
    @classmethod
    def simplex(cls, n: int, size) -> "DelzantPolytope":
        """``size`` times the standard simplex."""
        size = _frac(size)
        if n == 1:
            return cls(((1,), (-1,)), (Fraction(0), size))
        if n == 2:
            return cls(((1, 0), (0, 1), (-1, -1)), (Fraction(0), Fraction(0), size))
        raise ValueError(f"unsupported dimension {n}")

    @classmethod
    def box(cls, lows: Sequence, highs: Sequence) -> "DelzantPolytope":
        normals = []
        offsets = []
        for i, (lo, hi) in enumerate(zip(lows, highs)):
            e = [0] * len(lows)
            e[i] = 1
            normals.append(tuple(e))
            offsets.append(-_frac(lo))
            e = [0] * len(lows)
            e[i] = -1
            normals.append(tuple(e))
            offsets.append(_frac(hi))
        return cls(tuple(normals), tuple(offsets))

    @property
    def dimension(self) -> int:
        return len(self.normals[0])

    @property
    def vertices(self) -> tuple[Point, ...]:
        return self._vertices  # type: ignore[attr-defined]

    def ell(self, mu: Sequence) -> tuple[Fraction, ...]:
        return tuple(_dot(u, mu) + c for u, c in zip(self.normals, self.offsets))

    def ell_numeric(self, mu: np.ndarray) -> np.ndarray:
        """Facet functions on numeric points, shape ``(..., n_facets)``."""
        u = np.array(self.normals, dtype=float)
        c = np.array([float(c) for c in self.offsets])
        return np.tensordot(mu, u, axes=([-1], [1])) + c

    def contains(self, mu: Sequence) -> bool:
        return all(v >= 0 for v in self.ell(_pt(mu)))

    def _compute_vertices(self) -> tuple[Point, ...]:
        n = len(self.normals[0])
        cands = []
        for idx in combinations(range(len(self.normals)), n):
            if n == 1:
                (i,) = idx
                u = self.normals[i][0]
                cands.append((Fraction(-self.offsets[i]) / u,))
                continue
            i, j = idx
            (a, b), (c, d) = self.normals[i], self.normals[j]
            det = a * d - b * c
            if det == 0:
                continue
            r1, r2 = -self.offsets[i], -self.offsets[j]
            cands.append(((r1 * d - b * r2) / det, (a * r2 - c * r1) / det))
        inside = [p for p in cands if self.contains(p)]
        if not inside:
            return ()
        return convex_hull(inside)

    def _check_delzant(self) -> None:
        n = self.dimension
        for v in self.vertices:
            active = [u for u, l in zip(self.normals, self.ell(v)) if l == 0]
            if len(active) != n:
                raise ValueError(f"vertex {v} lies on {len(active)} facets, expected {n}")
            if n == 1:
                det = active[0][0]
            else:
                det = active[0][0] * active[1][1] - active[0][1] * active[1][0]
            if abs(det) != 1:
                raise ValueError(f"Delzant condition fails at vertex {v}")

    def facet_vertices(self, k: int) -> tuple[Point, ...]:
        """Vertices lying on facet ``k`` (one for n=1, two for n=2)."""
        return tuple(v for v in self.vertices if self.ell(v)[k] == 0)

    def facet_measure(self, k: int) -> Fraction:
        """Facet volume normalized by the primitive normal (lattice measure)."""
        if self.dimension == 1:
            return Fraction(1)
        p, q = self.facet_vertices(k)
        u = self.normals[k]
        d = (q[0] - p[0], q[1] - p[1])
        return abs(d[0] * u[1] - d[1] * u[0]) / (u[0] ** 2 + u[1] ** 2)

    def boundary_measure(self) -> Fraction:
        return sum((self.facet_measure(k) for k in range(len(self.normals))), Fraction(0))

    def volume(self) -> Fraction:
        """Lebesgue volume (length for n = 1)."""
        if self.dimension == 1:
            return self.vertices[-1][0] - self.vertices[0][0]
        return polygon_area_centroid(self.vertices)[0]

    def descriptor(self) -> ClassDescriptor:
        return ClassDescriptor(self.vertices)

    def support_exact(self, a: Sequence) -> Fraction:
        return max(_dot(a, v) for v in self.vertices)

    def scaled(self, s) -> "DelzantPolytope":
        s = _frac(s)
        return DelzantPolytope(self.normals, tuple(s * c for c in self.offsets))

    def product(self, other: "DelzantPolytope") -> "DelzantPolytope":
        if self.dimension + other.dimension > 2:
            raise ValueError("product dimension exceeds 2")
        normals = tuple(u + (0,) for u in self.normals) + tuple((0,) + u for u in other.normals)
        return DelzantPolytope(normals, self.offsets + other.offsets)

    def anticanonical(self, factor) -> "DelzantPolytope":
        """``factor`` times the polytope ``{<u_F, mu> + 1 >= 0}``."""
        return DelzantPolytope(self.normals, tuple(_frac(factor) for _ in self.offsets))

    def bounding_box(self) -> tuple[Point, Point]:
        n = self.dimension
        lo = tuple(min(v[i] for v in self.vertices) for i in range(n))
        hi = tuple(max(v[i] for v in self.vertices) for i in range(n))
        return lo, hi

    def cells(self, pieces: Sequence[tuple[Point, Fraction]]):
        """Split into regions where each affine piece of ``max_k <a_k,mu>+b_k`` wins.

        Yields ``(k, region)`` with region an interval ``(lo, hi)`` for n = 1
        or a CCW vertex tuple for n = 2. Ties go to the lowest index.
        """
        for k, (a, b) in enumerate(pieces):
            if self.dimension == 1:
                lo, hi = self.vertices[0][0], self.vertices[-1][0]
                ok = True
                for j, (a2, b2) in enumerate(pieces):
                    if j == k:
                        continue
                    # a_k mu + b_k >= a_j mu + b_j, strict for j < k
                    da = a[0] - a2[0]
                    db = b - b2
                    if da == 0:
                        if db < 0 or (db == 0 and j < k):
                            ok = False
                        continue
                    root = -db / da
                    if da > 0:
                        lo = max(lo, root)
                    else:
                        hi = min(hi, root)
                if ok and hi > lo:
                    yield k, (lo, hi)
            else:
                region = self.vertices
                for j, (a2, b2) in enumerate(pieces):
                    if j == k:
                        continue
                    da = (a[0] - a2[0], a[1] - a2[1])
                    db = b - b2
                    if da == (0, 0):
                        if db < 0 or (db == 0 and j < k):
                            region = ()
                            break
                        continue
                    region = clip_polygon(region, da, db)
                    if len(region) < 3:
                        break
                if len(region) >= 3 and polygon_area_centroid(region)[0] > 0:
                    yield k, region
