"""Closed-form invariant functions with exact derivative jets.

A jet of order ``k`` at points of shape ``(..., n)`` is the list
``[value, grad, hess, d3, d4][: k + 1]`` with derivative tensors carried on
trailing axes. Potentials built from these families never go through finite
differences, which keeps integration-by-parts identities exact up to the
quadrature error.
"""

from __future__ import annotations

import math

from fractions import Fraction
from typing import Sequence

import numpy as np

from .conventions import POLYTOPE_FACTOR
from .polytopes import ClassDescriptor

MAX_ORDER = 4


class AnalyticFunction:
    """Base class: an invariant function with exact jets.

    Subclasses implement :meth:`jet`. ``descriptor`` records the asymptotic
    linear growth (``None`` for super-linear growth, zero for bounded).
    """

    n: int = 1
    descriptor: ClassDescriptor | None = None

    def jet(self, pts: np.ndarray, order: int = 2) -> list[np.ndarray]:
        raise NotImplementedError

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return self.jet(pts, 0)[0]

    def __add__(self, other: "AnalyticFunction") -> "Combination":
        return Combination([(1.0, self), (1.0, other)])

    def __sub__(self, other: "AnalyticFunction") -> "Combination":
        return Combination([(1.0, self), (-1.0, other)])

    def __rmul__(self, c: float) -> "Combination":
        return Combination([(float(c), self)])

    def __neg__(self) -> "Combination":
        return Combination([(-1.0, self)])


class Combination(AnalyticFunction):
    """Finite linear combination ``sum c_k f_k``."""

    def __init__(self, terms: Sequence[tuple[float, AnalyticFunction]]):
        flat: list[tuple[float, AnalyticFunction]] = []
        for c, f in terms:
            if isinstance(f, Combination):
                flat.extend((c * c2, f2) for c2, f2 in f.terms)
            else:
                flat.append((float(c), f))
        if not flat:
            raise ValueError("empty combination")
        dims = {f.n for _, f in flat}
        if len(dims) != 1:
            raise ValueError("dimension mismatch in combination")
        self.terms = tuple(flat)
        self.n = dims.pop()
        desc = ClassDescriptor.zero(self.n)
        for c, f in flat:
            if f.descriptor is None:
                desc = None
                break
            if c < 0 and not f.descriptor.is_zero():
                # difference of classes is not a support function; keep growth unknown
                desc = None
                break
            desc = desc + f.descriptor.scaled(Fraction(c).limit_denominator(10**9))
        self.descriptor = desc

    def jet(self, pts, order=2):
        out = None
        for c, f in self.terms:
            j = f.jet(pts, order)
            if out is None:
                out = [c * a for a in j]
            else:
                out = [o + c * a for o, a in zip(out, j)]
        return out


class Constant(AnalyticFunction):
    def __init__(self, n: int, c: float):
        self.n = n
        self.c = float(c)
        self.descriptor = ClassDescriptor.zero(n)

    def jet(self, pts, order=2):
        shape = pts.shape[:-1]
        out = [np.full(shape, self.c)]
        for k in range(1, order + 1):
            out.append(np.zeros(shape + (self.n,) * k))
        return out


class Linear(AnalyticFunction):
    """``<a, x>``."""

    def __init__(self, a: Sequence[float]):
        self.a = np.asarray(a, dtype=float)
        self.n = self.a.shape[0]
        self.descriptor = ClassDescriptor.from_points([[Fraction(v).limit_denominator(10**9) for v in self.a]])

    def jet(self, pts, order=2):
        shape = pts.shape[:-1]
        out = [pts @ self.a]
        if order >= 1:
            out.append(np.broadcast_to(self.a, shape + (self.n,)).copy())
        for k in range(2, order + 1):
            out.append(np.zeros(shape + (self.n,) * k))
        return out


class Quadratic(AnalyticFunction):
    """``x^T A x`` with ``A`` symmetric."""

    def __init__(self, A):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        if not np.allclose(self.A, self.A.T):
            raise ValueError("A must be symmetric")
        self.n = self.A.shape[0]
        self.descriptor = None

    def jet(self, pts, order=2):
        shape = pts.shape[:-1]
        Ax = pts @ self.A
        out = [np.einsum("...i,...i->...", pts, Ax)]
        if order >= 1:
            out.append(2.0 * Ax)
        if order >= 2:
            out.append(np.broadcast_to(2.0 * self.A, shape + (self.n, self.n)).copy())
        for k in range(3, order + 1):
            out.append(np.zeros(shape + (self.n,) * k))
        return out


class FubiniStudy(AnalyticFunction):
    """``scale * log(1 + sum_j exp(2 x_j))``, the Fubini-Study potential.

    Its gradient image is ``POLYTOPE_FACTOR * scale`` times the open simplex.
    Derivatives are cumulants of a categorical law, which keeps every jet
    entry bounded and free of overflow.
    """

    def __init__(self, n: int, scale: float = 1.0):
        if n not in (1, 2):
            raise ValueError(f"unsupported dimension {n}")
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.n = n
        self.scale = float(scale)
        s = Fraction(scale).limit_denominator(10**9)
        verts = [(Fraction(0),) * n]
        for j in range(n):
            v = [Fraction(0)] * n
            v[j] = POLYTOPE_FACTOR * s
            verts.append(tuple(v))
        self.descriptor = ClassDescriptor.from_points(verts)

    def _probs(self, pts):
        z = 2.0 * pts
        zmax = np.maximum(np.max(z, axis=-1), 0.0)
        e = np.exp(z - zmax[..., None])
        e0 = np.exp(-zmax)
        tot = e0 + np.sum(e, axis=-1)
        return e / tot[..., None], e0 / tot, zmax + np.log(tot)

    def jet(self, pts, order=2):
        s = self.scale
        p, p0, lse = self._probs(pts)
        out = [s * lse]
        if order >= 1:
            out.append(2.0 * s * p)
        if order >= 2:
            for k, kap in enumerate(_categorical_cumulants(p, p0, order)[2:], start=2):
                out.append((2.0**k) * s * kap)
        return out

    def ricci_potential(self) -> "Combination":
        """Closed form of ``-log det D^2 psi``.

        ``det D^2 log(1 + sum e^{2x}) = 4^n e^{2 sum x} / (1 + sum e^{2x})^{n+1}``.
        """
        n = self.n
        c = -n * math.log(self.scale) - 2 * n * math.log(2.0)
        return Combination([(1.0, Constant(n, c)), (1.0, Linear([-2.0] * n)),
                            (float(n + 1), FubiniStudy(n, 1.0))])

    def inverse_gradient_1d(self, mu: np.ndarray) -> np.ndarray:
        """For n = 1, the point ``y`` with ``psi'(y) = mu``."""
        if self.n != 1:
            raise ValueError("inverse_gradient_1d needs n = 1")
        top = POLYTOPE_FACTOR * self.scale
        mu = np.asarray(mu, dtype=float)
        return 0.5 * (np.log(mu) - np.log(top - mu))

    def legendre_dual(self, mu: np.ndarray) -> np.ndarray:
        """Closed-form symplectic potential ``1/2 sum l log l - s log(2s)``."""
        s = self.scale
        top = POLYTOPE_FACTOR * s
        mu = np.asarray(mu, dtype=float)
        l0 = top - np.sum(mu, axis=-1)
        ls = [mu[..., j] for j in range(self.n)] + [l0]
        tot = sum(0.5 * _xlogx(l) for l in ls)
        return tot - s * np.log(top)


def _xlogx(v):
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(v > 0, v * np.log(np.where(v > 0, v, 1.0)), np.where(v == 0, 0.0, np.nan))


def _categorical_cumulants(p: np.ndarray, p0: np.ndarray, order: int) -> list[np.ndarray]:
    """Cumulant tensors of the indicator vector of a categorical law.

    ``p`` holds the probabilities of categories ``1..n`` and ``p0`` that of
    category 0. Cumulants come from central moments with deviations
    ``e_c - p`` whose diagonal entry ``1 - p_j`` is summed from the other
    probabilities, so tails where some ``p_j`` is tiny or close to 1 keep
    full relative accuracy.
    """
    n = p.shape[-1]
    probs = [p0] + [p[..., j] for j in range(n)]
    devs = []
    for c in range(n + 1):
        d = -p.copy()
        if c > 0:
            j = c - 1
            d[..., j] = sum(probs[k] for k in range(n + 1) if k != c)
        devs.append(d)
    e = np.einsum
    out = [None, p]
    k2 = sum(pc[..., None, None] * e("...i,...j->...ij", d, d) for pc, d in zip(probs, devs))
    out.append(k2)
    if order >= 3:
        out.append(sum(pc[..., None, None, None] * e("...i,...j,...k->...ijk", d, d, d)
                       for pc, d in zip(probs, devs)))
    if order >= 4:
        m4 = sum(pc[..., None, None, None, None] * e("...i,...j,...k,...l->...ijkl", d, d, d, d)
                 for pc, d in zip(probs, devs))
        pairs = (
            e("...ij,...kl->...ijkl", k2, k2)
            + e("...ik,...jl->...ijkl", k2, k2)
            + e("...il,...jk->...ijkl", k2, k2)
        )
        out.append(m4 - pairs)
    return out


class GaussianBump(AnalyticFunction):
    """``amplitude * exp(-|x - center|^2 / (2 width^2))``."""

    def __init__(self, center: Sequence[float], width: float, amplitude: float = 1.0):
        self.c = np.asarray(center, dtype=float)
        self.n = self.c.shape[0]
        if width <= 0:
            raise ValueError("width must be positive")
        self.w = float(width)
        self.a = float(amplitude)
        self.descriptor = ClassDescriptor.zero(self.n)

    def jet(self, pts, order=2):
        e = np.einsum
        s2 = self.w**2
        d = pts - self.c
        g = self.a * np.exp(-0.5 * np.sum(d * d, axis=-1) / s2)
        u = d / s2
        out = [g]
        eye = np.eye(self.n)
        if order >= 1:
            out.append(-u * g[..., None])
        if order >= 2:
            h = e("...i,...j->...ij", u, u) - eye / s2
            out.append(h * g[..., None, None])
        if order >= 3:
            t = -e("...i,...j,...k->...ijk", u, u, u) + (
                e("ij,...k->...ijk", eye, u) + e("ik,...j->...ijk", eye, u) + e("jk,...i->...ijk", eye, u)
            ) / s2
            out.append(t * g[..., None, None, None])
        if order >= 4:
            uu = e("...i,...j->...ij", u, u)
            t = (
                e("...i,...j,...k,...l->...ijkl", u, u, u, u)
                - (
                    e("ij,...kl->...ijkl", eye, uu)
                    + e("ik,...jl->...ijkl", eye, uu)
                    + e("il,...jk->...ijkl", eye, uu)
                    + e("jk,...il->...ijkl", eye, uu)
                    + e("jl,...ik->...ijkl", eye, uu)
                    + e("kl,...ij->...ijkl", eye, uu)
                )
                / s2
                + (e("ij,kl->ijkl", eye, eye) + e("ik,jl->ijkl", eye, eye) + e("il,jk->ijkl", eye, eye)) / s2**2
            )
            out.append(t * g[..., None, None, None, None])
        return out


class Embedded(AnalyticFunction):
    """A function of the coordinates ``axes`` viewed on ``R^n``."""

    def __init__(self, f: AnalyticFunction, axes: Sequence[int], n: int):
        self.f = f
        self.axes = tuple(axes)
        if len(self.axes) != f.n:
            raise ValueError("axes do not match the inner dimension")
        self.n = n
        if f.descriptor is None:
            self.descriptor = None
        else:
            pts = []
            for v in f.descriptor.vertices:
                w = [Fraction(0)] * n
                for ax, c in zip(self.axes, v):
                    w[ax] = c
                pts.append(tuple(w))
            self.descriptor = ClassDescriptor.from_points(pts)

    def jet(self, pts, order=2):
        inner = self.f.jet(pts[..., list(self.axes)], order)
        shape = pts.shape[:-1]
        out = [inner[0]]
        for k in range(1, order + 1):
            full = np.zeros(shape + (self.n,) * k)
            idx = np.ix_(*([list(self.axes)] * k))
            full[(Ellipsis,) + idx] = inner[k]
            out.append(full)
        return out


class Translated(AnalyticFunction):
    """``x -> f(x - c)``; the class descriptor is unchanged."""

    def __init__(self, f: AnalyticFunction, c: Sequence[float]):
        self.f = f
        self.c = np.asarray(c, dtype=float)
        if self.c.shape != (f.n,):
            raise ValueError("shift has the wrong dimension")
        self.n = f.n
        self.descriptor = f.descriptor

    def jet(self, pts, order=2):
        return self.f.jet(pts - self.c, order)


def product_potential(a: AnalyticFunction, b: AnalyticFunction) -> Combination:
    """``a(x_A) + b(x_B)`` on the product of the two coordinate spaces."""
    n = a.n + b.n
    ea = Embedded(a, range(a.n), n)
    eb = Embedded(b, range(a.n, n), n)
    out = Combination([(1.0, ea), (1.0, eb)])
    if a.descriptor is not None and b.descriptor is not None:
        out.descriptor = a.descriptor.product(b.descriptor)
    return out


def random_bumps(rng: np.random.Generator, n: int, count: int = 3, spread: float = 1.5,
                 width: tuple[float, float] = (0.8, 1.6), amplitude: float = 0.05) -> Combination:
    """Sum of Gaussian bumps with random centers, widths and signs."""
    terms = []
    for _ in range(count):
        c = rng.uniform(-spread, spread, size=n)
        w = rng.uniform(*width)
        a = amplitude * rng.uniform(-1.0, 1.0)
        terms.append((1.0, GaussianBump(c, w, a)))
    return Combination(terms)
