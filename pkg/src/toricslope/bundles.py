"""Hermitian metrics on split toric bundles: Chern curvature, characteristic
forms, slope, the constant ``z``, the Donaldson functional and ``M'``.

A metric on ``L_1 + ... + L_r`` is stored as ``H = R exp(A) R`` with
``R = diag(exp(-v_i / 2))``, ``v_i`` the reference weight of ``L_i`` and
``A`` a Hermitian matrix potential. All curvature computations run in the
rescaled frame ``f_i = exp(v_i / 2) s_i`` where the metric matrix is
``E = exp(A)``; traces are frame independent, so nothing ever forms
``exp(-v)`` explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .analytic import AnalyticFunction, Combination, Constant, Embedded, FubiniStudy, GaussianBump
from .conventions import LEDGER, Ledger
from .forms import FourFormField
from .geometry import (
    InvariantForm,
    KahlerStructure,
    LogGrid,
    _apply_lastaxis,
    _check_grid,
    integrate_top,
    mixed_determinant,
    quadrature_sum,
)
from . import kernels

__all__ = [
    "ToricBundle",
    "base_line_bundles",
    "line_bundle",
    "split_bundle",
    "trivial_bundle",
    "MatrixPotential",
    "BundleMetric",
    "CurvatureField",
    "EndoField",
    "chern_curvature",
    "trace_R",
    "trace_RR",
    "degree",
    "slope_mu",
    "constant_z",
    "donaldson_functional",
    "m_prime",
    "m_prime_direct",
    "metric_from_endo",
    "log_endo",
    "orthonormality_check",
    "random_endo",
    "dexp",
    "d2exp",
]


# bundles --------------------------------------------------------------------------


def base_line_bundles(ks: KahlerStructure) -> tuple[AnalyticFunction, ...]:
    """Weights ``v`` of the generating line bundles of ``ks``.

    P^n: ``O(1)`` with ``v = log(1 + sum exp(2x))``. Products of P^1:
    ``O(1,0)`` and ``O(0,1)``.
    """
    n = ks.n
    if ks.factors is not None and all(isinstance(f, FubiniStudy) for f in ks.factors):
        out = []
        k = 0
        for f in ks.factors:
            out.append(Embedded(FubiniStudy(f.n, 1.0), range(k, k + f.n), n) if len(ks.factors) > 1
                       else FubiniStudy(f.n, 1.0))
            k += f.n
        return tuple(out)
    if isinstance(ks.source, FubiniStudy):
        return (FubiniStudy(n, 1.0),)
    return ()


@dataclass(frozen=True, eq=False)
class ToricBundle:
    """Direct sum of toric line bundles.

    ``degrees[i]`` lists the integer coefficients of summand ``i`` over the
    base line bundles ``bases``; the reference weight of the summand is
    ``v_i = sum_b degrees[i][b] * bases[b]``.
    """

    n: int
    degrees: tuple[tuple[int, ...], ...]
    bases: tuple[AnalyticFunction, ...]
    label: str = ""

    def __post_init__(self):
        if not self.degrees:
            raise ValueError("rank must be at least 1")
        for d in self.degrees:
            if len(d) != len(self.bases):
                raise ValueError("degree vector does not match the base line bundles")
            if any(int(c) != c for c in d):
                raise ValueError("degrees must be integers")
        object.__setattr__(self, "degrees", tuple(tuple(int(c) for c in d) for d in self.degrees))

    @property
    def rank(self) -> int:
        return len(self.degrees)

    @property
    def is_trivial(self) -> bool:
        return all(c == 0 for d in self.degrees for c in d)

    def reference_weight(self, i: int) -> AnalyticFunction:
        terms = [(float(c), b) for c, b in zip(self.degrees[i], self.bases) if c != 0]
        if not terms:
            return Constant(self.n, 0.0)
        return Combination(terms)

    def total_degrees(self) -> tuple[int, ...]:
        """Class of ``det E`` over the base line bundles."""
        return tuple(sum(d[b] for d in self.degrees) for b in range(len(self.bases)))


def line_bundle(ks: KahlerStructure, degrees: Sequence[int] | int) -> ToricBundle:
    return split_bundle(ks, degrees)


def split_bundle(ks: KahlerStructure, *summands) -> ToricBundle:
    """``split_bundle(ks, (1, 1), (0, -1))`` on P^1 x P^1, or ``(1,), (-1,)`` on P^1."""
    bases = base_line_bundles(ks)
    degs = []
    for s in summands:
        d = (s,) if isinstance(s, (int, np.integer)) else tuple(s)
        degs.append(d)
    label = " + ".join("O(" + ",".join(str(c) for c in d) + ")" for d in degs)
    return ToricBundle(ks.n, tuple(degs), bases, label)


def trivial_bundle(ks: KahlerStructure, rank: int = 1) -> ToricBundle:
    bases = base_line_bundles(ks)
    return ToricBundle(ks.n, tuple((0,) * len(bases) for _ in range(rank)), bases, f"trivial^{rank}")


# matrix exponential derivatives ---------------------------------------------------

_CLUSTER = 1e-3


def _phi1(x: np.ndarray) -> np.ndarray:
    """``expm1(x) / x`` with the removable singularity filled."""
    small = np.abs(x) < 1e-12
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 + 0.5 * x, np.expm1(safe) / safe)


def _dd1(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``exp[a, b]``; exact for ``a = b``."""
    return np.exp(b) * _phi1(a - b)


def _dd2(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``exp[a, b, c]``.

    The widest pair supplies the denominator, so cancellation costs at most
    ``eps / _CLUSTER``; tighter clusters use the Taylor series about the mean
    through fourth order (truncation below ``_CLUSTER^4``).
    """
    pts = np.stack(np.broadcast_arrays(a, b, c), axis=-1)
    srt = np.sort(pts, axis=-1)
    lo, mid, hi = srt[..., 0], srt[..., 1], srt[..., 2]
    span = hi - lo
    wide = span >= _CLUSTER
    den = np.where(wide, span, 1.0)
    split = (_dd1(hi, mid) - _dd1(mid, lo)) / den
    m = pts.mean(axis=-1)
    d = pts - m[..., None]
    p2 = np.sum(d * d, axis=-1)
    p3 = np.sum(d**3, axis=-1)
    p4 = np.sum(d**4, axis=-1)
    # complete homogeneous polynomials of the centred points (power sum p1 = 0)
    h2 = 0.5 * p2
    h3 = p3 / 3.0
    h4 = p2 * p2 / 8.0 + p4 / 4.0
    taylor = np.exp(m) * (0.5 + h2 / 24.0 + h3 / 120.0 + h4 / 720.0)
    return np.where(wide, split, taylor)


def _divided_differences(lam: np.ndarray, second: bool):
    """First and second divided differences of ``exp`` at eigenvalues ``lam``."""
    f1 = _dd1(lam[..., :, None], lam[..., None, :])
    if not second:
        return f1, None
    f2 = _dd2(lam[..., :, None, None], lam[..., None, :, None], lam[..., None, None, :])
    return f1, f2


@dataclass(frozen=True)
class _ExpData:
    Q: np.ndarray
    f1: np.ndarray
    f2: np.ndarray | None

    def rotate(self, B: np.ndarray) -> np.ndarray:
        Qh = np.conj(np.swapaxes(self.Q, -1, -2))
        return Qh @ B @ self.Q

    def back(self, M: np.ndarray) -> np.ndarray:
        Qh = np.conj(np.swapaxes(self.Q, -1, -2))
        return self.Q @ M @ Qh


def _exp_data(A: np.ndarray, second: bool) -> tuple[np.ndarray, _ExpData]:
    lam, Q = np.linalg.eigh(A)
    f1, f2 = _divided_differences(lam, second)
    Qh = np.conj(np.swapaxes(Q, -1, -2))
    E = (Q * np.exp(lam)[..., None, :]) @ Qh
    return E, _ExpData(Q, f1, f2)


def _dexp_rot(d: _ExpData, Bt: np.ndarray) -> np.ndarray:
    return d.back(d.f1 * Bt)


def _d2exp_rot(d: _ExpData, Bt: np.ndarray, Ct: np.ndarray) -> np.ndarray:
    M = np.einsum("...ikj,...ik,...kj->...ij", d.f2, Bt, Ct) + np.einsum(
        "...ikj,...ik,...kj->...ij", d.f2, Ct, Bt)
    return d.back(M)


def dexp(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Frechet derivative of ``exp`` at Hermitian ``A`` in direction ``B``."""
    _, d = _exp_data(A, False)
    return _dexp_rot(d, d.rotate(B))


def d2exp(A: np.ndarray, B: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Second Frechet derivative of ``exp`` at Hermitian ``A``."""
    _, d = _exp_data(A, True)
    return _d2exp_rot(d, d.rotate(B), d.rotate(C))


# matrix potentials ------------------------------------------------------------------


def _herm(M) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("coefficient must be a square matrix")
    if not np.allclose(M, M.conj().T, atol=1e-14):
        raise ValueError("coefficient must be Hermitian")
    return 0.5 * (M + M.conj().T)


@dataclass(frozen=True, eq=False)
class MatrixPotential:
    """Hermitian matrix field ``A(x) = sum_k g_k(x) M_k``."""

    n: int
    r: int
    terms: tuple[tuple[AnalyticFunction, np.ndarray], ...] = ()

    def __post_init__(self):
        terms = []
        for g, M in self.terms:
            M = _herm(M)
            if M.shape != (self.r, self.r):
                raise ValueError("coefficient has the wrong size")
            if g.n != self.n:
                raise ValueError("function has the wrong dimension")
            terms.append((g, M))
        object.__setattr__(self, "terms", tuple(terms))

    @classmethod
    def zero(cls, n: int, r: int) -> "MatrixPotential":
        return cls(n, r, ())

    @classmethod
    def random(cls, rng: np.random.Generator, n: int, r: int, count: int = 2, amplitude: float = 0.3,
               spread: float = 1.5, width: tuple[float, float] = (0.7, 1.3),
               complex_entries: bool = True) -> "MatrixPotential":
        """Gaussian bumps times random Hermitian matrices (off-diagonal parts decay)."""
        terms = []
        for _ in range(count):
            c = rng.uniform(-spread, spread, size=n)
            g = GaussianBump(c, float(rng.uniform(*width)), 1.0)
            X = rng.normal(size=(r, r))
            if complex_entries:
                X = X + 1j * rng.normal(size=(r, r))
            M = 0.5 * (X + X.conj().T)
            M *= amplitude / max(1e-12, np.linalg.norm(M, 2))
            terms.append((g, M))
        return cls(n, r, tuple(terms))

    def scaled(self, c: float) -> "MatrixPotential":
        return MatrixPotential(self.n, self.r, tuple((g, c * M) for g, M in self.terms))

    def __add__(self, other: "MatrixPotential") -> "MatrixPotential":
        if (other.n, other.r) != (self.n, self.r):
            raise ValueError("shape mismatch")
        return MatrixPotential(self.n, self.r, self.terms + other.terms)

    def __sub__(self, other: "MatrixPotential") -> "MatrixPotential":
        return self + other.scaled(-1.0)

    @staticmethod
    def affine(a: "MatrixPotential", b: "MatrixPotential", s: float) -> "MatrixPotential":
        """``(1 - s) a + s b``."""
        return a.scaled(1.0 - s) + b.scaled(s)

    def jet(self, pts: np.ndarray, order: int = 2) -> list[np.ndarray]:
        shape = pts.shape[:-1]
        n, r = self.n, self.r
        out = [np.zeros(shape + (n,) * k + (r, r), dtype=complex) for k in range(order + 1)]
        for g, M in self.terms:
            j = g.jet(pts, order)
            for k in range(order + 1):
                out[k] = out[k] + j[k][..., None, None] * M
        return out


# metrics ------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BundleMetric:
    """``H = R exp(A) R`` (analytic ``A``) or ``H = R E R`` (sampled ``E``).

    Sampled metrics need a uniform grid; their x-derivatives use the
    order-4 finite differences of :mod:`geometry`.
    """

    bundle: ToricBundle
    grid: LogGrid
    A: MatrixPotential | None = None
    E_field: np.ndarray | None = None

    def __post_init__(self):
        if (self.A is None) == (self.E_field is None):
            raise ValueError("give exactly one of A and E_field")
        if self.grid.n != self.bundle.n:
            raise ValueError("grid and bundle dimensions differ")
        if self.A is not None and (self.A.r, self.A.n) != (self.bundle.rank, self.bundle.n):
            raise ValueError("matrix potential does not match the bundle")
        if self.E_field is not None:
            E = np.asarray(self.E_field, dtype=complex)
            if E.shape != self.grid.shape + (self.bundle.rank,) * 2:
                raise ValueError("metric field has the wrong shape")
            if np.max(np.abs(E - np.conj(np.swapaxes(E, -1, -2)))) > 1e-10 * max(1.0, np.max(np.abs(E))):
                raise ValueError("metric field is not Hermitian")
            E = 0.5 * (E + np.conj(np.swapaxes(E, -1, -2)))
            if not np.all(np.linalg.eigvalsh(E) > 0):
                raise ValueError("metric is not positive definite")
            object.__setattr__(self, "E_field", E)

    @classmethod
    def reference(cls, bundle: ToricBundle, grid: LogGrid) -> "BundleMetric":
        return cls(bundle, grid, MatrixPotential.zero(bundle.n, bundle.rank))

    @property
    def rank(self) -> int:
        return self.bundle.rank

    @cached_property
    def weight_jet(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(v, D v, D^2 v)`` of the reference weights, shapes ``(..., r)``, ``(..., n, r)``, ``(..., n, n, r)``."""
        pts = self.grid.points
        js = [self.bundle.reference_weight(i).jet(pts, 2) for i in range(self.rank)]
        return tuple(np.stack([j[k] for j in js], axis=-1) for k in range(3))

    @cached_property
    def frame_jet(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(E, D E, D^2 E)`` in the rescaled frame."""
        n = self.grid.n
        if self.A is not None and not self.A.terms:
            r = self.rank
            E = np.broadcast_to(np.eye(r, dtype=complex), self.grid.shape + (r, r))
            zero = np.zeros(self.grid.shape + (n,) + (r, r), dtype=complex)
            return E.copy(), zero, np.zeros(self.grid.shape + (n, n) + (r, r), dtype=complex)
        if self.A is not None:
            A, A1, A2 = self.A.jet(self.grid.points, 2)
            E, d = _exp_data(A, True)
            rot1 = [d.rotate(A1[..., j, :, :]) for j in range(n)]
            E1 = np.stack([_dexp_rot(d, rot1[j]) for j in range(n)], axis=-3)
            E2 = np.empty(self.grid.shape + (n, n) + (self.rank,) * 2, dtype=complex)
            for j in range(n):
                for k in range(j, n):
                    val = _d2exp_rot(d, rot1[j], rot1[k]) + _dexp_rot(d, d.rotate(A2[..., j, k, :, :]))
                    E2[..., j, k, :, :] = val
                    E2[..., k, j, :, :] = val
            return E, E1, E2
        return (self.E_field,) + _fd_matrix_derivs(self.E_field, self.grid)

    def log_det(self) -> np.ndarray:
        """``log det H`` on the grid."""
        v = self.weight_jet[0]
        E = self.frame_jet[0]
        return -np.sum(v, axis=-1) + np.log(np.real(np.linalg.det(E)))

    def matrix(self) -> np.ndarray:
        """``H`` in the holomorphic frame (may underflow far out)."""
        R = np.exp(-0.5 * self.weight_jet[0])
        return R[..., :, None] * self.frame_jet[0] * R[..., None, :]


def _fd_matrix_derivs(E: np.ndarray, grid: LogGrid) -> tuple[np.ndarray, np.ndarray]:
    if not grid.uniform:
        raise ValueError("sampled metrics need a uniform grid")
    n = grid.n
    shp = grid.shape
    r = E.shape[-1]
    flat = E.reshape(shp + (r * r,))

    def d1(F, axis):
        re = _apply_lastaxis(kernels.fd_d1_lastaxis, np.moveaxis(F.real, -1, 0), axis + 1, grid.h[axis])
        im = _apply_lastaxis(kernels.fd_d1_lastaxis, np.moveaxis(F.imag, -1, 0), axis + 1, grid.h[axis])
        return np.moveaxis(re + 1j * im, 0, -1)

    def d2(F, axis):
        re = _apply_lastaxis(kernels.fd_d2_lastaxis, np.moveaxis(F.real, -1, 0), axis + 1, grid.h[axis])
        im = _apply_lastaxis(kernels.fd_d2_lastaxis, np.moveaxis(F.imag, -1, 0), axis + 1, grid.h[axis])
        return np.moveaxis(re + 1j * im, 0, -1)

    firsts = [d1(flat, j) for j in range(n)]
    E1 = np.stack([f.reshape(shp + (r, r)) for f in firsts], axis=-3)
    E2 = np.empty(shp + (n, n, r, r), dtype=complex)
    for j in range(n):
        E2[..., j, j, :, :] = d2(flat, j).reshape(shp + (r, r))
        for k in range(j + 1, n):
            m = d1(firsts[j], k).reshape(shp + (r, r))
            E2[..., j, k, :, :] = m
            E2[..., k, j, :, :] = m
    return E1, E2


# curvature ------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CurvatureField:
    """Chern curvature ``K[..., j, k, a, b]`` in the rescaled frame.

    ``K_jk = -d_k(H^{-1} d_j H)`` conjugated by ``R``; ``i R_H`` corresponds
    to ``K`` under the form convention of :mod:`conventions`.
    """

    grid: LogGrid
    K: np.ndarray

    @property
    def rank(self) -> int:
        return self.K.shape[-1]

    def entry(self, a: int, b: int) -> np.ndarray:
        return self.K[..., a, b]

    def trace_field(self) -> np.ndarray:
        return np.real(np.einsum("...jkaa->...jk", self.K))

    def contract(self, omega: InvariantForm) -> np.ndarray:
        """``Lambda_omega K`` as an ``(..., r, r)`` matrix field."""
        Gi = np.linalg.inv(omega.hessian)
        return np.einsum("...jk,...jkab->...ab", Gi, self.K)


def _frame_curvature(E, E1, E2, v1, v2) -> np.ndarray:
    n = E1.shape[-3]
    r = E.shape[-1]
    Ei = np.linalg.inv(E)
    D1 = [-0.5 * v1[..., j, :] for j in range(n)]
    eye = np.eye(r)

    def diag(d):
        return d[..., :, None] * eye

    X = []
    for j in range(n):
        X.append(Ei @ (D1[j][..., :, None] * E) + Ei @ E1[..., j, :, :] + diag(D1[j]))
    K = np.empty(E.shape[:-2] + (n, n, r, r), dtype=complex)
    for j in range(n):
        Dj = D1[j]
        for k in range(n):
            Djk = -0.5 * v2[..., j, k, :]
            Ek = E1[..., k, :, :]
            EiEk = Ei @ Ek
            dX = (
                -EiEk @ Ei @ (Dj[..., :, None] * E)
                + Ei @ (Djk[..., :, None] * E)
                + Ei @ (Dj[..., :, None] * Ek)
                - EiEk @ Ei @ E1[..., j, :, :]
                + Ei @ E2[..., j, k, :, :]
                + diag(Djk)
            )
            Dk = D1[k]
            comm = X[j] * Dk[..., None, :] - Dk[..., :, None] * X[j]
            K[..., j, k, :, :] = -(dX + comm)
    return K


def chern_curvature(m: BundleMetric, ks: KahlerStructure | None = None) -> CurvatureField:
    """Chern curvature of ``m`` as a matrix of (1,1)-form coefficient fields."""
    if ks is not None:
        _check_grid(ks.grid, m.grid)
    E, E1, E2 = m.frame_jet
    _, v1, v2 = m.weight_jet
    return CurvatureField(m.grid, _frame_curvature(E, E1, E2, v1, v2))


def trace_R(m: BundleMetric | CurvatureField) -> InvariantForm:
    """``tr(i R_H)`` as a real (1,1)-form field."""
    K = m if isinstance(m, CurvatureField) else chern_curvature(m)
    T = K.trace_field()
    T = 0.5 * (T + np.swapaxes(T, -1, -2))
    return InvariantForm(K.grid, T, None, False)


def trace_RR(m: BundleMetric | CurvatureField) -> FourFormField:
    """``tr(i R ^ i R) = sum_ab K_ab ^ K_ba`` (zero when ``n = 1``)."""
    K = m if isinstance(m, CurvatureField) else chern_curvature(m)
    grid = K.grid
    if grid.n < 2:
        return FourFormField.zero(grid)
    r = K.rank
    tot = np.zeros(grid.shape)
    for a in range(r):
        for b in range(r):
            tot = tot + np.real(mixed_determinant(K.K[..., a, b], K.K[..., b, a]))
    return FourFormField(grid, 2.0 * tot)


# slope and z ---------------------------------------------------------------------------------


def degree(bundle: ToricBundle, ks: KahlerStructure, metric: BundleMetric | None = None,
           ledger: Ledger = LEDGER) -> float:
    """``int c_1(E) ^ omega^{n-1} / (n-1)!`` by quadrature."""
    n = ks.n
    m = metric if metric is not None else BundleMetric.reference(bundle, ks.grid)
    tr = trace_R(m)
    return ledger.chern_factor * integrate_top(1.0, tr, *([ks.omega0] * (n - 1))) / math.factorial(n - 1)


def slope_mu(bundle: ToricBundle, ks: KahlerStructure, metric: BundleMetric | None = None,
             ledger: Ledger = LEDGER) -> float:
    """``mu(E) = deg(E) / rank``."""
    return degree(bundle, ks, metric, ledger) / bundle.rank


def constant_z(bundle: ToricBundle, ks: KahlerStructure, ledger: Ledger = LEDGER,
               mu: float | None = None) -> float:
    """Real scalar ``z = z_factor n pi mu_p / vol_p``.

    ``mu_p`` and ``vol_p`` use the unnormalized integrals ``int c_1 omega^{n-1}``
    and ``int omega^n``.
    """
    n = ks.n
    vol_p = integrate_top(1.0, *([ks.omega0] * n))
    if not vol_p > 0:
        raise ValueError("zero volume")
    mu = slope_mu(bundle, ks, ledger=ledger) if mu is None else mu
    mu_p = math.factorial(n - 1) * mu
    return ledger.z_factor * n * math.pi * mu_p / vol_p


# Donaldson functional --------------------------------------------------------------------------


def _volume_density(omega: InvariantForm) -> np.ndarray:
    """Density of ``omega^n / n!`` against the grid weights."""
    n = omega.grid.n
    return math.pi**n * np.linalg.det(omega.hessian)


def _donaldson_integrand(EinvEdot: np.ndarray, K: CurvatureField, omega: InvariantForm, z: float) -> float:
    LK = K.contract(omega)
    r = LK.shape[-1]
    M = LK - z * np.eye(r)
    val = np.real(np.einsum("...ab,...ba->...", EinvEdot, M))
    return quadrature_sum(omega.grid, val * _volume_density(omega))


def _check_pair(H1: BundleMetric, H0: BundleMetric) -> None:
    if H1.bundle is not H0.bundle and H1.bundle.degrees != H0.bundle.degrees:
        raise ValueError("metrics live on different bundles")
    _check_grid(H1.grid, H0.grid)


def donaldson_functional(H1: BundleMetric, H0: BundleMetric, ks: KahlerStructure,
                         omega: InvariantForm | None = None, nodes: int = 32, path: str = "affine",
                         ledger: Ledger = LEDGER, z: float | None = None) -> float:
    """``int_0^1 int tr(H^{-1} dH/ds (Lambda K - z)) omega^n/n! ds``.

    ``path="affine"`` uses ``A_s = (1-s) A_0 + s A_1`` (analytic
    derivatives, both metrics analytic). ``path="exp"`` uses
    ``H_s = H_0 exp(s log(H_0^{-1} H_1))`` with finite differences in x.
    """
    _check_pair(H1, H0)
    omega = ks.omega0 if omega is None else omega
    _check_grid(omega.grid, H0.grid)
    z = constant_z(H0.bundle, ks, ledger) if z is None else z
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    ss = 0.5 * (gx + 1.0)
    ws = 0.5 * gw
    total = 0.0
    if path == "affine":
        if H0.A is None or H1.A is None:
            raise ValueError("affine path needs analytic metrics")
        dA = (H1.A - H0.A).jet(H0.grid.points, 0)[0]
        for s, w in zip(ss, ws):
            Hs = BundleMetric(H0.bundle, H0.grid, MatrixPotential.affine(H0.A, H1.A, s))
            A = Hs.A.jet(Hs.grid.points, 0)[0]
            E, d = _exp_data(A, False)
            Edot = _dexp_rot(d, d.rotate(dA))
            K = chern_curvature(Hs)
            total += w * _donaldson_integrand(np.linalg.solve(E, Edot), K, omega, z)
        return total
    if path == "exp":
        a = log_endo(H1, H0)
        E0 = H0.frame_jet[0]
        S0 = _sqrtm_h(E0)
        for s, w in zip(ss, ws):
            Hs = metric_from_endo(EndoField(H0.grid, s * a.A), H0)
            K = chern_curvature(Hs)
            Es = Hs.frame_jet[0]
            # H^{-1} dH/ds = S0^{-1} a S0 in the rescaled frame
            L = np.linalg.solve(S0, a.A @ S0)
            total += w * _donaldson_integrand(L, K, omega, z)
        return total
    raise ValueError(f"unknown path {path!r}; use 'affine' or 'exp'")


def m_prime(H1: BundleMetric, H0: BundleMetric, ks: KahlerStructure, omega: InvariantForm | None = None,
            nodes: int = 32, ledger: Ledger = LEDGER, z: float | None = None) -> float:
    """``M' = donaldson_half * Donaldson`` at the form ``omega``."""
    return ledger.donaldson_half * donaldson_functional(H1, H0, ks, omega, nodes, "affine", ledger, z)


def m_prime_direct(H1: BundleMetric, H0: BundleMetric, ks: KahlerStructure,
                   omega: InvariantForm | None = None, panels: int = 64, ds: float = 1e-4,
                   ledger: Ledger = LEDGER, z: float | None = None) -> float:
    """Second quadrature of ``M'``: composite Simpson in s with centered
    differences of the metric matrix for ``dH/ds`` and the factor ``1/2`` of
    the frame identification applied to the ``-1/2 A'`` representative."""
    _check_pair(H1, H0)
    if H0.A is None or H1.A is None:
        raise ValueError("needs analytic metrics")
    if panels % 2:
        raise ValueError("Simpson needs an even number of panels")
    omega = ks.omega0 if omega is None else omega
    z = constant_z(H0.bundle, ks, ledger) if z is None else z
    pts = H0.grid.points

    def E_at(s):
        A = MatrixPotential.affine(H0.A, H1.A, s).jet(pts, 0)[0]
        lam, Q = np.linalg.eigh(A)
        return (Q * np.exp(lam)[..., None, :]) @ np.conj(np.swapaxes(Q, -1, -2))

    ss = np.linspace(0.0, 1.0, panels + 1)
    wts = np.ones(panels + 1)
    wts[1:-1:2] = 4.0
    wts[2:-1:2] = 2.0
    wts *= (ss[1] - ss[0]) / 3.0
    total = 0.0
    for s, w in zip(ss, wts):
        Edot = (E_at(s + ds) - E_at(s - ds)) / (2 * ds)
        E = E_at(s)
        Hs = BundleMetric(H0.bundle, H0.grid, MatrixPotential.affine(H0.A, H1.A, s))
        K = chern_curvature(Hs)
        half = -0.5 * np.linalg.solve(E, Edot)
        # i tr(i(-1/2 A') (Lambda F - z)) reduces to -tr((-1/2 A')(Lambda K - z))
        LK = K.contract(omega)
        M = LK - z * np.eye(E.shape[-1])
        val = -np.real(np.einsum("...ab,...ba->...", half, M))
        total += w * quadrature_sum(omega.grid, val * _volume_density(omega))
    return total


# Hermitian correspondence ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EndoField:
    """Hermitian matrix field: an endomorphism in an ``H``-orthonormal frame."""

    grid: LogGrid
    A: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=complex)
        if A.shape[:-2] != self.grid.shape or A.shape[-1] != A.shape[-2]:
            raise ValueError("endomorphism field has the wrong shape")
        if np.max(np.abs(A - np.conj(np.swapaxes(A, -1, -2)))) > 1e-10 * max(1.0, np.max(np.abs(A))):
            raise ValueError("endomorphism field is not Hermitian")
        object.__setattr__(self, "A", 0.5 * (A + np.conj(np.swapaxes(A, -1, -2))))


def _funm_h(E: np.ndarray, f) -> np.ndarray:
    lam, Q = np.linalg.eigh(E)
    return (Q * f(lam)[..., None, :]) @ np.conj(np.swapaxes(Q, -1, -2))


def _sqrtm_h(E: np.ndarray) -> np.ndarray:
    return _funm_h(E, np.sqrt)


def metric_from_endo(a: EndoField, H0: BundleMetric) -> BundleMetric:
    """``h(a) = H0 exp(a)``, sampled on the grid."""
    _check_grid(a.grid, H0.grid)
    S0 = _sqrtm_h(H0.frame_jet[0])
    E = S0 @ _funm_h(a.A, np.exp) @ S0
    return BundleMetric(H0.bundle, H0.grid, None, E)


def log_endo(H1: BundleMetric, H0: BundleMetric) -> EndoField:
    """The ``a`` with ``H1 = H0 exp(a)`` (principal Hermitian logarithm)."""
    _check_pair(H1, H0)
    E0 = H0.frame_jet[0]
    E1 = H1.frame_jet[0]
    Si = _funm_h(E0, lambda l: 1.0 / np.sqrt(l))
    M = Si @ E1 @ Si
    lam = np.linalg.eigvalsh(M)
    if not np.all(lam > 0):
        raise ValueError("H0^{-1} H1 is not positive")
    return EndoField(H0.grid, _funm_h(M, np.log))


def orthonormality_check(a: EndoField, H0: BundleMetric) -> float:
    """Max over nodes of ``|G - I|`` for the frame ``e exp(-a/2)``.

    ``e`` is the ``H0``-orthonormal frame ``E0^{-1/2}`` of the rescaled
    frame, and ``G`` the Gram matrix of ``e exp(-a/2)`` under ``H0 exp(a)``.
    The endomorphism ``exp(a)`` is applied through its matrix in the
    rescaled frame, ``E0^{-1/2} exp(A) E0^{1/2}``.
    """
    _check_grid(a.grid, H0.grid)
    E0 = H0.frame_jet[0]
    U = _funm_h(E0, lambda l: 1.0 / np.sqrt(l))
    Uinv = _funm_h(E0, np.sqrt)
    exp_a_f = U @ _funm_h(a.A, np.exp) @ Uinv
    Ha = E0 @ exp_a_f
    frame = U @ _funm_h(a.A, lambda l: np.exp(-0.5 * l))
    G = np.conj(np.swapaxes(frame, -1, -2)) @ Ha @ frame
    r = G.shape[-1]
    return float(np.max(np.abs(G - np.eye(r))))


def random_endo(rng: np.random.Generator, grid: LogGrid, r: int = 2, scale: float = 1.0) -> EndoField:
    X = rng.normal(size=grid.shape + (r, r)) + 1j * rng.normal(size=grid.shape + (r, r))
    return EndoField(grid, scale * 0.5 * (X + np.conj(np.swapaxes(X, -1, -2))))
