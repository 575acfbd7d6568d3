"""Toric models: grids in logarithmic coordinates, invariant potentials and
forms, mixed determinants and quadrature of top-degree wedge products."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .analytic import (
    AnalyticFunction,
    Combination,
    Constant,
    FubiniStudy,
    GaussianBump,
    Quadratic,
    product_potential,
)
from .conventions import POLYTOPE_FACTOR, top_degree_constant
from .polytopes import ClassDescriptor, DelzantPolytope

__all__ = [
    "LogGrid",
    "InvariantPotential",
    "InvariantForm",
    "KahlerStructure",
    "LegendreResult",
    "make_projective_space",
    "make_product",
    "make_quadratic_model",
    "hessian_field",
    "fd_hessian",
    "mixed_determinant",
    "quadrature_sum",
    "integrate_top",
    "legendre_transform",
    "random_potential",
    "DelzantPolytope",
    "ClassDescriptor",
]

MIN_POINTS = 33
DEFAULT_L = {1: 10.0, 2: 8.0}
DEFAULT_N = {1: 129, 2: 97}


def _tuple(v, n, cast):
    if isinstance(v, (list, tuple, np.ndarray)):
        if len(v) != n:
            raise ValueError(f"expected {n} entries, got {len(v)}")
        return tuple(cast(x) for x in v)
    return (cast(v),) * n


@dataclass(frozen=True)
class LogGrid:
    """Tensor grid on ``center + [-L, L]^n`` in logarithmic coordinates.

    Parameters
    ----------
    n : int
        Dimension (1 or 2).
    L : tuple of float
        Half-width per axis.
    N : tuple of int
        Points per axis of the uniform partition; ``h = 2L/(N-1)``.
    center : tuple of float
        Axis centers (zero unless a ray needs room on one side).
    breaks : tuple
        Per-axis kink locations, or ``None``. An axis with breaks uses
        composite Gauss-Legendre nodes on the uniform cells split at the
        breaks; other axes use the trapezoidal rule on the uniform nodes.
    gauss_order : int
        Nodes per sub-cell on split axes.
    """

    n: int
    L: tuple[float, ...]
    N: tuple[int, ...]
    center: tuple[float, ...] = ()
    breaks: tuple[tuple[float, ...] | None, ...] | None = None
    gauss_order: int = 4

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"unsupported dimension {self.n}")
        object.__setattr__(self, "L", _tuple(self.L, self.n, float))
        object.__setattr__(self, "N", _tuple(self.N, self.n, int))
        center = self.center if self.center != () else 0.0
        object.__setattr__(self, "center", _tuple(center, self.n, float))
        if any(L <= 0 for L in self.L):
            raise ValueError("half-width L must be positive")
        if any(N < MIN_POINTS for N in self.N):
            raise ValueError(f"need at least {MIN_POINTS} points per axis")
        if self.breaks is not None:
            br = tuple(None if b is None else tuple(sorted(float(x) for x in b)) for b in self.breaks)
            if len(br) != self.n:
                raise ValueError("breaks must list one entry per axis")
            if all(b is None or len(b) == 0 for b in br):
                br = None
            object.__setattr__(self, "breaks", br)

    @classmethod
    def make(cls, n: int, L=None, N=None, center=None) -> "LogGrid":
        return cls(n, DEFAULT_L[n] if L is None else L, DEFAULT_N[n] if N is None else N,
                   () if center is None else center)

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(2.0 * L / (N - 1) for L, N in zip(self.L, self.N))

    @property
    def uniform(self) -> bool:
        return self.breaks is None

    def _axis_is_split(self, k: int) -> bool:
        return self.breaks is not None and self.breaks[k] is not None and len(self.breaks[k]) > 0

    def edges(self, k: int) -> np.ndarray:
        return self.center[k] + np.linspace(-self.L[k], self.L[k], self.N[k])

    @cached_property
    def _axis_rules(self) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
        rules = []
        gx, gw = np.polynomial.legendre.leggauss(self.gauss_order)
        for k in range(self.n):
            e = self.edges(k)
            if not self._axis_is_split(k):
                w = np.full(self.N[k], self.h[k])
                w[0] *= 0.5
                w[-1] *= 0.5
                rules.append((e, w))
                continue
            inner = [b for b in self.breaks[k] if e[0] < b < e[-1]]
            pts = np.unique(np.concatenate([e, np.asarray(inner, dtype=float)]))
            a, b = pts[:-1], pts[1:]
            keep = b - a > 1e-12 * self.h[k]
            a, b = a[keep], b[keep]
            x = ((b - a)[:, None] * (gx + 1.0) / 2.0 + a[:, None]).ravel()
            w = ((b - a)[:, None] * gw / 2.0).ravel()
            rules.append((x, w))
        return tuple(rules)

    @property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(r[0] for r in self._axis_rules)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @cached_property
    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    @cached_property
    def weights(self) -> np.ndarray:
        ws = [r[1] for r in self._axis_rules]
        if self.n == 1:
            return ws[0].copy()
        return np.multiply.outer(ws[0], ws[1])

    def with_breaks(self, breaks: Mapping[int, Sequence[float]]) -> "LogGrid":
        br = [None] * self.n
        for k, b in breaks.items():
            br[k] = tuple(b)
        return LogGrid(self.n, self.L, self.N, self.center, tuple(br), self.gauss_order)

    def uniform_version(self) -> "LogGrid":
        return LogGrid(self.n, self.L, self.N, self.center, None, self.gauss_order)

    def product(self, other: "LogGrid") -> "LogGrid":
        if self.n + other.n > 2:
            raise ValueError("product dimension exceeds 2")
        br = None
        if self.breaks is not None or other.breaks is not None:
            br = (self.breaks or (None,) * self.n) + (other.breaks or (None,) * other.n)
        return LogGrid(self.n + other.n, self.L + other.L, self.N + other.N,
                       self.center + other.center, br, self.gauss_order)

    def shell_mask(self, frac: float = 0.1) -> np.ndarray:
        """Nodes in the outer ``frac`` of the box along any axis."""
        pts = self.points
        mask = np.zeros(self.shape, dtype=bool)
        for k in range(self.n):
            d = np.abs(pts[..., k] - self.center[k])
            mask |= d >= (1.0 - frac) * self.L[k]
        return mask

    def interior_mask(self, frac: float = 0.1) -> np.ndarray:
        return ~self.shell_mask(frac)

    def describe(self) -> dict:
        return {
            "n": self.n,
            "L": list(self.L),
            "N": list(self.N),
            "center": list(self.center),
            "split_axes": [k for k in range(self.n) if self._axis_is_split(k)],
        }


def _check_grid(*grids: LogGrid) -> LogGrid:
    g0 = grids[0]
    for g in grids[1:]:
        if g is not g0 and g != g0:
            raise ValueError("fields live on different grids")
    return g0


@dataclass(frozen=True, eq=False)
class InvariantPotential:
    """Scalar field on a :class:`LogGrid` with class data.

    ``derivs`` optionally carries exact derivative tensors
    ``(grad, hess, d3, d4)`` (any prefix); :func:`hessian_field` uses them in
    place of finite differences. ``source`` is the analytic family the field
    was sampled from, when there is one.
    """

    grid: LogGrid
    values: np.ndarray
    descriptor: ClassDescriptor | None
    smooth: bool = True
    derivs: tuple[np.ndarray, ...] = ()
    source: AnalyticFunction | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("potential values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: LogGrid, fn: AnalyticFunction, order: int = 4) -> "InvariantPotential":
        if fn.n != grid.n:
            raise ValueError("function and grid dimensions differ")
        jet = fn.jet(grid.points, order)
        return cls(grid, jet[0], fn.descriptor, True, tuple(jet[1:]), fn)

    @classmethod
    def zero(cls, grid: LogGrid) -> "InvariantPotential":
        shape = grid.shape
        n = grid.n
        derivs = tuple(np.zeros(shape + (n,) * k) for k in range(1, 5))
        return cls(grid, np.zeros(shape), ClassDescriptor.zero(n), True, derivs)

    @classmethod
    def constant(cls, grid: LogGrid, c: float) -> "InvariantPotential":
        z = cls.zero(grid)
        return cls(grid, np.full(grid.shape, float(c)), z.descriptor, True, z.derivs)

    @property
    def exact_order(self) -> int:
        return len(self.derivs)

    def on_grid(self, grid: LogGrid, order: int = 4) -> "InvariantPotential":
        if self.source is None:
            raise ValueError("potential has no analytic source to resample")
        return InvariantPotential.from_function(grid, self.source, order)

    def _combine(self, other: "InvariantPotential", a: float, b: float) -> "InvariantPotential":
        _check_grid(self.grid, other.grid)
        k = min(len(self.derivs), len(other.derivs))
        derivs = tuple(a * x + b * y for x, y in zip(self.derivs[:k], other.derivs[:k]))
        desc = None
        if self.descriptor is not None and other.descriptor is not None:
            if b >= 0 and a >= 0:
                desc = self.descriptor.scaled(Fraction(a).limit_denominator(10**9)) + other.descriptor.scaled(
                    Fraction(b).limit_denominator(10**9))
            elif other.descriptor.is_zero() and a >= 0:
                desc = self.descriptor.scaled(Fraction(a).limit_denominator(10**9))
            elif self.descriptor.is_zero() and b >= 0:
                desc = other.descriptor.scaled(Fraction(b).limit_denominator(10**9))
        src = None
        if self.source is not None and other.source is not None:
            src = Combination([(a, self.source), (b, other.source)])
        return InvariantPotential(self.grid, a * self.values + b * other.values, desc,
                                  self.smooth and other.smooth, derivs, src)

    def __add__(self, other):
        return self._combine(other, 1.0, 1.0)

    def __sub__(self, other):
        return self._combine(other, 1.0, -1.0)

    def scaled(self, c: float) -> "InvariantPotential":
        desc = None
        if self.descriptor is not None and (c >= 0 or self.descriptor.is_zero()):
            desc = self.descriptor.scaled(Fraction(max(c, 0.0)).limit_denominator(10**9)) \
                if not self.descriptor.is_zero() else self.descriptor
        src = None if self.source is None else Combination([(c, self.source)])
        return InvariantPotential(self.grid, c * self.values, desc, self.smooth,
                                  tuple(c * d for d in self.derivs), src)

    def asymptotic_defect(self, frac: float = 0.1) -> float:
        """Max of ``|values - h(x)|`` over the outer shell, ``h`` the support function."""
        if self.descriptor is None:
            return math.inf
        mask = self.grid.shell_mask(frac)
        h = self.descriptor.support(self.grid.points)
        return float(np.max(np.abs(self.values - h)[mask]))

    def check_asymptotics(self, tol: float, frac: float = 0.1) -> None:
        d = self.asymptotic_defect(frac)
        if not d <= tol:
            raise ValueError(f"asymptotic defect {d:.3e} exceeds tolerance {tol:.3e}")


@dataclass(frozen=True, eq=False)
class InvariantForm:
    """Closed invariant (1,1)-form stored as its symmetric coefficient field."""

    grid: LogGrid
    hessian: np.ndarray
    descriptor: ClassDescriptor | None = None
    positive: bool = False

    def __post_init__(self):
        H = np.asarray(self.hessian, dtype=float)
        n = self.grid.n
        if H.shape != self.grid.shape + (n, n):
            raise ValueError("hessian shape does not match the grid")
        scale = max(1.0, float(np.max(np.abs(H))) if H.size else 1.0)
        if np.max(np.abs(H - np.swapaxes(H, -1, -2))) > 1e-9 * scale:
            raise ValueError("hessian field is not symmetric")
        H = 0.5 * (H + np.swapaxes(H, -1, -2))
        object.__setattr__(self, "hessian", H)
        if self.positive and not self.min_eigenvalue() > 0:
            raise ValueError("positivity flag set but the form is not positive definite")

    def min_eigenvalue(self) -> float:
        return float(np.min(np.linalg.eigvalsh(self.hessian)))

    def __add__(self, other: "InvariantForm") -> "InvariantForm":
        _check_grid(self.grid, other.grid)
        desc = None
        if self.descriptor is not None and other.descriptor is not None:
            desc = self.descriptor + other.descriptor
        return InvariantForm(self.grid, self.hessian + other.hessian, desc, False)

    def __sub__(self, other: "InvariantForm") -> "InvariantForm":
        _check_grid(self.grid, other.grid)
        desc = self.descriptor if other.descriptor is not None and other.descriptor.is_zero() else None
        return InvariantForm(self.grid, self.hessian - other.hessian, desc, False)

    def scaled(self, c: float) -> "InvariantForm":
        desc = None
        if self.descriptor is not None and c >= 0:
            desc = self.descriptor.scaled(Fraction(c).limit_denominator(10**9))
        return InvariantForm(self.grid, c * self.hessian, desc, self.positive and c > 0)

    @classmethod
    def zero(cls, grid: LogGrid) -> "InvariantForm":
        return cls(grid, np.zeros(grid.shape + (grid.n, grid.n)), ClassDescriptor.zero(grid.n))


# finite differences ---------------------------------------------------------


def _apply_lastaxis(fn, values: np.ndarray, axis: int, h: float) -> np.ndarray:
    moved = np.moveaxis(values, axis, -1)
    shp = moved.shape
    out = fn(np.ascontiguousarray(moved.reshape(-1, shp[-1])), h)
    return np.moveaxis(out.reshape(shp), -1, axis)


def fd_hessian(values: np.ndarray, grid: LogGrid) -> np.ndarray:
    """Order-4 central differences inside, order-2 one-sided in the outer two nodes."""
    if not grid.uniform:
        raise ValueError("finite differences need a uniform grid")
    if min(grid.shape) < 5:
        raise ValueError("grid too small for the stencil")
    n = grid.n
    out = np.empty(grid.shape + (n, n))
    firsts = [_apply_lastaxis(kernels.fd_d1_lastaxis, values, k, grid.h[k]) for k in range(n)]
    for i in range(n):
        out[..., i, i] = _apply_lastaxis(kernels.fd_d2_lastaxis, values, i, grid.h[i])
        for j in range(i + 1, n):
            mixed = _apply_lastaxis(kernels.fd_d1_lastaxis, firsts[i], j, grid.h[j])
            out[..., i, j] = mixed
            out[..., j, i] = mixed
    return out


def hessian_field(p: InvariantPotential) -> InvariantForm:
    """``dd^c p`` as a coefficient field.

    Uses the exact Hessian carried by ``p`` when present, finite differences
    otherwise.
    """
    if p.exact_order >= 2:
        H = p.derivs[1]
    else:
        if not p.smooth:
            raise ValueError("finite differences need a smooth potential")
        H = fd_hessian(p.values, p.grid)
    desc = p.descriptor
    return InvariantForm(p.grid, H, desc, False)


# mixed determinants and quadrature ---------------------------------------------


def _as_matrix(F) -> np.ndarray:
    return F.hessian if isinstance(F, InvariantForm) else np.asarray(F)


def mixed_determinant(*mats) -> np.ndarray:
    """Pointwise mixed determinant, ``MD(A, ..., A) = det A``.

    Uses the polarization identity
    ``MD(A_1..A_m) = (1/m!) sum_S (-1)^(m-|S|) det(sum_{i in S} A_i)``,
    valid for arbitrary (also complex, non-symmetric) square matrices.
    """
    if not mats:
        raise ValueError("need at least one matrix field")
    grids = [F.grid for F in mats if isinstance(F, InvariantForm)]
    if grids:
        _check_grid(*grids)
    A = [_as_matrix(F) for F in mats]
    m = A[0].shape[-1]
    if len(A) != m:
        raise ValueError(f"need {m} matrix fields, got {len(A)}")
    if any(a.shape != A[0].shape for a in A):
        raise ValueError("matrix fields have different shapes")
    if m == 1:
        return A[0][..., 0, 0]
    if m == 2:
        a, b = A
        if a.dtype == np.float64 and b.dtype == np.float64:
            lead = a.shape[:-2]
            out = kernels.mixed_det2(np.ascontiguousarray(a.reshape(-1, 2, 2)),
                                     np.ascontiguousarray(b.reshape(-1, 2, 2)))
            return out.reshape(lead)
        return 0.5 * (a[..., 0, 0] * b[..., 1, 1] + a[..., 1, 1] * b[..., 0, 0]
                      - a[..., 0, 1] * b[..., 1, 0] - a[..., 1, 0] * b[..., 0, 1])
    total = 0.0
    for r in range(1, m + 1):
        for S in combinations(range(m), r):
            total = total + (-1) ** (m - r) * np.linalg.det(sum(A[i] for i in S))
    return total / math.factorial(m)


def quadrature_sum(grid: LogGrid, density: np.ndarray) -> float:
    """``sum density * w`` with the fixed pairwise reduction order."""
    d = np.asarray(density)
    if np.iscomplexobj(d):
        raise ValueError("quadrature of a complex density")
    d = np.broadcast_to(d, grid.shape)
    prod = np.ascontiguousarray((d * grid.weights).ravel(), dtype=np.float64)
    if not np.all(np.isfinite(prod)):
        raise ValueError("NaN or infinity in integrand")
    return kernels.pairwise_sum(prod)


def integrate_top(f, *forms) -> float:
    """``int f F_1 ^ ... ^ F_n = n! pi^n sum f MD(F) w``.

    ``f`` may be a number, an array on the grid or an
    :class:`InvariantPotential`.
    """
    if not forms:
        raise ValueError("need n forms")
    grid = _check_grid(*[F.grid for F in forms])
    n = grid.n
    if len(forms) != n:
        raise ValueError(f"need {n} forms on an n={n} grid")
    if isinstance(f, InvariantPotential):
        _check_grid(grid, f.grid)
        f = f.values
    md = mixed_determinant(*forms)
    return top_degree_constant(n) * quadrature_sum(grid, np.asarray(f) * md)


# Kahler structures --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class KahlerStructure:
    """Reference toric Kahler structure ``(P, grid, psi0, omega0)``.

    ``factors`` lists the one-dimensional factor sources when ``psi0`` is a
    sum of functions of single coordinates (needed by exact piecewise-linear
    rays).
    """

    polytope: DelzantPolytope
    grid: LogGrid
    psi0: InvariantPotential
    omega0: InvariantForm
    source: AnalyticFunction
    factors: tuple[AnalyticFunction, ...] | None = None
    name: str = ""
    ricci_source: AnalyticFunction | None = None

    @classmethod
    def build(cls, polytope, grid, source, factors=None, name="", ricci_source=None) -> "KahlerStructure":
        psi0 = InvariantPotential.from_function(grid, source, 4)
        omega = InvariantForm(grid, psi0.derivs[1], psi0.descriptor, True)
        return cls(polytope, grid, psi0, omega, source, factors, name, ricci_source)

    @property
    def n(self) -> int:
        return self.grid.n

    def on_grid(self, grid: LogGrid) -> "KahlerStructure":
        return KahlerStructure.build(self.polytope, grid, self.source, self.factors, self.name,
                                     self.ricci_source)

    def volume(self) -> float:
        """``int omega^n / n!`` by quadrature."""
        return integrate_top(1.0, *([self.omega0] * self.n)) / math.factorial(self.n)

    def exact_volume(self) -> float:
        """``pi^n |P|`` from the polytope."""
        return math.pi**self.n * float(self.polytope.volume())

    def moment_map(self) -> np.ndarray:
        return self.psi0.derivs[0]

    def moment_defect(self) -> float:
        """Most negative facet function over the moment image (0 if inside)."""
        ell = self.polytope.ell_numeric(self.moment_map())
        return float(min(0.0, np.min(ell)))

    def symplectic_potential(self, mu: np.ndarray) -> np.ndarray:
        """Closed-form Legendre dual of ``psi0`` on the polytope."""
        mu = np.asarray(mu, dtype=float)
        if self.factors is not None:
            out = 0.0
            k = 0
            for f in self.factors:
                out = out + f.legendre_dual(mu[..., k : k + f.n])
                k += f.n
            return out
        if isinstance(self.source, FubiniStudy):
            return self.source.legendre_dual(mu)
        raise ValueError("no closed-form symplectic potential for this structure")


def make_projective_space(n: int, scale: float = 1.0, L=None, N=None) -> KahlerStructure:
    """Fubini-Study structure ``scale * log(1 + sum exp(2 x_j))`` on P^n."""
    if n not in (1, 2):
        raise ValueError(f"unsupported dimension {n}")
    if scale <= 0:
        raise ValueError("scale must be positive")
    grid = LogGrid.make(n, L, N)
    src = FubiniStudy(n, scale)
    poly = DelzantPolytope.simplex(n, POLYTOPE_FACTOR * Fraction(scale).limit_denominator(10**9))
    factors = (src,) if n == 1 else None
    return KahlerStructure.build(poly, grid, src, factors, f"P{n}(scale={scale:g})",
                                 src.ricci_potential())


def make_product(a: KahlerStructure, b: KahlerStructure) -> KahlerStructure:
    """Product structure with summed potentials on the product grid."""
    if a.n + b.n > 2:
        raise ValueError("product dimension exceeds 2")
    grid = a.grid.product(b.grid)
    src = product_potential(a.source, b.source)
    poly = a.polytope.product(b.polytope)
    factors = None
    if a.factors is not None and b.factors is not None:
        factors = a.factors + b.factors
    ric = None
    if a.ricci_source is not None and b.ricci_source is not None:
        ric = product_potential(a.ricci_source, b.ricci_source)
    return KahlerStructure.build(poly, grid, src, factors, f"{a.name} x {b.name}", ric)


def make_quadratic_model(n: int, A=None, L=None, N=None) -> KahlerStructure:
    """Flat model ``x^T A x`` on a truncated box (Ricci-flat, S = 0)."""
    A = 0.5 * np.eye(n) if A is None else np.atleast_2d(np.asarray(A, dtype=float))
    grid = LogGrid.make(n, L, N)
    src = Quadratic(A)
    half = [Fraction(float(2.0 * np.sum(np.abs(A[i])) * grid.L[i])).limit_denominator(1000) for i in range(n)]
    poly = DelzantPolytope.box([-h for h in half], half)
    ric = Constant(n, -float(np.log(np.linalg.det(2.0 * A))))
    return KahlerStructure.build(poly, grid, src, None, f"quadratic(n={n})", ric)


def random_potential(ks: KahlerStructure, rng: np.random.Generator, count: int = 3,
                     margin: float = 0.5, spread: float = 1.5,
                     width: tuple[float, float] = (0.6, 1.2)) -> InvariantPotential:
    """Sum of Gaussian bumps scaled so that ``omega_phi >= (1 - margin) omega``.

    The eigenvalues of ``omega^{-1} dd^c g`` are bounded on the grid for a
    Gaussian ``g``, so rescaling keeps ``omega_phi`` positive while the
    potential stays negligible at the edge of the box.
    """
    if not 0 < margin < 1:
        raise ValueError("margin must lie in (0, 1)")
    terms = []
    for _ in range(count):
        c = rng.uniform(-spread, spread, size=ks.n)
        terms.append((float(rng.uniform(-1.0, 1.0)), GaussianBump(c, float(rng.uniform(*width)), 1.0)))
    src = Combination(terms)
    jet = src.jet(ks.grid.points, 2)
    Li = np.linalg.cholesky(ks.omega0.hessian)
    Linv = np.linalg.inv(Li)
    rel = Linv @ jet[2] @ np.swapaxes(Linv, -1, -2)
    top = float(np.max(np.abs(np.linalg.eigvalsh(rel))))
    src = Combination([(margin / top, src)])
    return InvariantPotential.from_function(ks.grid, src, 4)


# Legendre transform ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LegendreResult:
    """Discrete Legendre dual on a uniform grid of the moment box.

    ``values`` is ``+inf`` where the supremum is not attained inside the
    x-grid (outside the gradient image in the continuum limit).
    """

    mu_axes: tuple[np.ndarray, ...]
    values: np.ndarray
    involution_error: float

    @property
    def finite(self) -> np.ndarray:
        return np.isfinite(self.values)


def legendre_transform(p: InvariantPotential, polytope: DelzantPolytope | None = None,
                       M: int | None = None, convexity_tol: float = 1e-8,
                       check_fraction: float = 0.5) -> LegendreResult:
    """``u(mu) = max_x <mu, x> - p(x)`` over grid nodes.

    The involution error is ``max |p** - p|`` over nodes within
    ``check_fraction * L`` of the center.
    """
    grid = p.grid
    H = hessian_field(p).hessian
    lam = np.linalg.eigvalsh(H)
    scale = max(1.0, float(np.max(np.abs(lam))))
    if np.min(lam[grid.interior_mask(0.1)]) < -convexity_tol * scale:
        raise ValueError("potential is not convex on the grid")
    n = grid.n
    if polytope is not None:
        lo, hi = polytope.bounding_box()
        lo = [float(v) for v in lo]
        hi = [float(v) for v in hi]
    else:
        g = p.derivs[0] if p.exact_order >= 1 else np.stack(
            [_apply_lastaxis(kernels.fd_d1_lastaxis, p.values, k, grid.h[k]) for k in range(n)], axis=-1)
        lo = [float(np.min(g[..., k])) for k in range(n)]
        hi = [float(np.max(g[..., k])) for k in range(n)]
    M = M or grid.N[0]
    mu_axes = []
    for k in range(n):
        if hi[k] - lo[k] < 1e-12:
            mu_axes.append(np.linspace(lo[k] - 1.0, hi[k] + 1.0, M))
        else:
            mu_axes.append(np.linspace(lo[k], hi[k], M))
    mu = np.stack(np.meshgrid(*mu_axes, indexing="ij"), axis=-1).reshape(-1, n)
    xs = grid.points.reshape(-1, n)
    val, arg = kernels.legendre_max(np.ascontiguousarray(mu), np.ascontiguousarray(xs),
                                    np.ascontiguousarray(p.values.ravel()))
    edge = grid.shell_mask(1e-9).ravel()
    val = np.where(edge[arg], np.inf, val)
    u = val.reshape((M,) * n)
    fin = np.isfinite(val)
    back, _ = kernels.legendre_max(np.ascontiguousarray(xs), np.ascontiguousarray(mu[fin]),
                                   np.ascontiguousarray(val[fin]))
    core = np.ones(grid.shape, dtype=bool)
    for k in range(n):
        core &= np.abs(grid.points[..., k] - grid.center[k]) <= check_fraction * grid.L[k]
    err = float(np.max(np.abs(back.reshape(grid.shape) - p.values)[core])) if fin.any() else math.inf
    return LegendreResult(tuple(mu_axes), u, err)
