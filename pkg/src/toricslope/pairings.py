"""Multivariate energy pairings and the functionals built from them:
Monge-Ampere energy, J, entropy and the Mabuchi energy."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .analytic import AnalyticFunction
from .conventions import top_degree_constant
from .forms import FourFormField, mean_scalar_curvature, ricci_form
from .geometry import (
    InvariantForm,
    InvariantPotential,
    KahlerStructure,
    LogGrid,
    _check_grid,
    hessian_field,
    integrate_top,
    mixed_determinant,
    quadrature_sum,
)

__all__ = [
    "deligne_pairing",
    "modified_pairing",
    "ma_energy",
    "j_functional",
    "entropy",
    "EntropyResult",
    "entropy_details",
    "MabuchiTerms",
    "mabuchi",
    "RaySpec",
    "FunctionRay",
    "SlotSpec",
    "DdcSlopeReport",
    "ddc_slope_check",
    "RATIO_FLOOR",
]

RATIO_FLOOR = 1e-300


def _shifted(theta: InvariantForm, phi: InvariantPotential) -> InvariantForm:
    """``theta + dd^c phi`` without positivity checks."""
    return InvariantForm(theta.grid, theta.hessian + hessian_field(phi).hessian, None, False)


def deligne_pairing(phis: Sequence[InvariantPotential], thetas: Sequence[InvariantForm]) -> float:
    """``<phi_0, ..., phi_n>_(theta_0, ..., theta_n)``.

    The telescoping sum: term ``j`` integrates ``phi_j`` against the bare
    forms ``theta_0 .. theta_{j-1}`` and the shifted forms
    ``theta_i + dd^c phi_i`` for ``i > j``.
    """
    if len(phis) != len(thetas):
        raise ValueError("need as many potentials as forms")
    if not phis:
        raise ValueError("empty pairing")
    grid = _check_grid(*[p.grid for p in phis], *[t.grid for t in thetas])
    n = grid.n
    if len(phis) != n + 1:
        raise ValueError(f"need n+1 = {n + 1} entries, got {len(phis)}")
    shifted = [_shifted(t, p) for t, p in zip(thetas, phis)]
    total = 0.0
    for j in range(n + 1):
        if not np.any(phis[j].values):
            continue
        forms = list(thetas[:j]) + shifted[j + 1 :]
        total += integrate_top(phis[j].values, *forms)
    return total


def _integrate_with_B(f: np.ndarray, B: FourFormField, forms: Sequence[InvariantForm]) -> float:
    n = B.grid.n
    if len(forms) != n - 2:
        raise ValueError("wrong number of forms next to B")
    if n == 2:
        return B.integrate(f)
    raise ValueError("B-pairings need n = 2")


def modified_pairing(phis: Sequence[InvariantPotential], thetas: Sequence[InvariantForm],
                     B: FourFormField | float = 1.0, k: int = 0) -> float:
    """``<phi_k, ..., phi_n>_(B)(theta_k, ..., theta_n)``.

    ``k = 0`` with ``B = 1`` is :func:`deligne_pairing`. ``k = 2`` wedges the
    (2,2)-form ``B`` into every term.
    """
    if k == 0:
        if not (isinstance(B, (int, float)) and B == 1):
            raise ValueError("k = 0 needs B = 1")
        return deligne_pairing(phis, thetas)
    if k != 2:
        raise ValueError(f"unsupported k = {k}; use 0 or 2")
    if not isinstance(B, FourFormField):
        raise ValueError("k = 2 needs a FourFormField B")
    if len(phis) != len(thetas) or not phis:
        raise ValueError("need matching non-empty potentials and forms")
    grid = _check_grid(B.grid, *[p.grid for p in phis], *[t.grid for t in thetas])
    n = grid.n
    if len(phis) != n + 1 - k:
        raise ValueError(f"need n+1-k = {n + 1 - k} entries, got {len(phis)}")
    shifted = [_shifted(t, p) for t, p in zip(thetas, phis)]
    total = 0.0
    for j in range(len(phis)):
        forms = list(thetas[:j]) + shifted[j + 1 :]
        total += _integrate_with_B(phis[j].values, B, forms)
    return total


def _omega_phi(phi: InvariantPotential, ks: KahlerStructure) -> InvariantForm:
    _check_grid(phi.grid, ks.grid)
    return _shifted(ks.omega0, phi)


def _check_positive(om: InvariantForm, what: str) -> None:
    lam = float(np.min(np.linalg.eigvalsh(om.hessian)))
    if lam < 0:
        warnings.warn(f"{what}: omega_phi is not semipositive (min eigenvalue {lam:.3e})", RuntimeWarning,
                      stacklevel=3)


def ma_energy(phi: InvariantPotential, ks: KahlerStructure) -> float:
    """``E(phi) = <phi, ..., phi>_(omega, ..., omega) / (n+1)``."""
    n = ks.n
    _check_positive(_omega_phi(phi, ks), "ma_energy")
    return deligne_pairing([phi] * (n + 1), [ks.omega0] * (n + 1)) / (n + 1)


def j_functional(phi: InvariantPotential, ks: KahlerStructure) -> float:
    """``J(phi) = <phi, 0, ..., 0> - E(phi)``."""
    n = ks.n
    zero = InvariantPotential.zero(ks.grid)
    first = deligne_pairing([phi] + [zero] * n, [ks.omega0] * (n + 1))
    return first - ma_energy(phi, ks)


@dataclass(frozen=True)
class EntropyResult:
    """Entropy value and whether the density ratio hit the floor."""

    value: float
    degenerate: bool
    min_ratio: float


def entropy_details(phi: InvariantPotential, ks: KahlerStructure, ratio_tol: float = 1e-10) -> EntropyResult:
    """``int log(omega_phi^n / omega^n) omega_phi^n`` with diagnostics.

    The ratio is clamped below at :data:`RATIO_FLOOR`; ratios more negative
    than ``-ratio_tol`` raise.
    """
    om = _omega_phi(phi, ks)
    n = ks.n
    num = mixed_determinant(*([om] * n))
    # same routine for both so that phi = 0 gives a ratio of exactly 1
    den = mixed_determinant(*([ks.omega0] * n))
    if not np.all(den > 0):
        raise ValueError("degenerate reference form")
    ratio = num / den
    rmin = float(np.min(ratio))
    if rmin < -ratio_tol:
        raise ValueError(f"non-positive density ratio (min {rmin:.3e})")
    degenerate = rmin < RATIO_FLOOR
    r = np.maximum(ratio, RATIO_FLOOR)
    num = np.maximum(num, 0.0)
    val = top_degree_constant(n) * quadrature_sum(ks.grid, np.log(r) * num)
    return EntropyResult(val, degenerate, rmin)


def entropy(phi: InvariantPotential, ks: KahlerStructure) -> float:
    """``int log(omega_phi^n / omega^n) omega_phi^n``."""
    return entropy_details(phi, ks).value


@dataclass(frozen=True)
class MabuchiTerms:
    """The three terms of the Chen-Tian expansion and their sum."""

    energy: float
    ricci: float
    entropy: float
    sbar: float
    degenerate: bool = False

    @property
    def total(self) -> float:
        return self.energy - self.ricci + self.entropy


def mabuchi(phi: InvariantPotential, ks: KahlerStructure, ric: InvariantForm | None = None,
            sbar: float | None = None) -> MabuchiTerms:
    """Mabuchi energy ``(S_bar/(n+1)) <phi..phi> - <0,phi..phi>_(Ric,omega..) + Ent``."""
    n = ks.n
    ric = ric if ric is not None else ricci_form(ks)
    sbar = mean_scalar_curvature(ks, ric) if sbar is None else sbar
    w = [ks.omega0] * (n + 1)
    e_term = sbar / (n + 1) * deligne_pairing([phi] * (n + 1), w)
    zero = InvariantPotential.zero(ks.grid)
    r_term = deligne_pairing([zero] + [phi] * n, [ric] + [ks.omega0] * n)
    ent = entropy_details(phi, ks)
    return MabuchiTerms(e_term, r_term, ent.value, sbar, ent.degenerate)


# fiber integral check ---------------------------------------------------------------


class RaySpec(Protocol):
    """A ray ``t -> phi_t`` on a fixed grid with its first two t-derivatives."""

    grid: LogGrid

    def potential(self, t: float) -> InvariantPotential: ...

    def time_jet(self, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(d_t phi, d_x d_t phi, d_t^2 phi)`` at time ``t``."""
        ...


@dataclass(frozen=True, eq=False)
class FunctionRay:
    """``phi_t = a + t b + t^2 c`` for analytic ``a, b, c`` (any may be ``None``)."""

    grid: LogGrid
    a: AnalyticFunction | None = None
    b: AnalyticFunction | None = None
    c: AnalyticFunction | None = None

    def _jets(self, f):
        if f is None:
            return None
        return f.jet(self.grid.points, 4)

    def potential(self, t: float) -> InvariantPotential:
        parts = [(1.0, self.a), (t, self.b), (t * t, self.c)]
        vals = np.zeros(self.grid.shape)
        derivs = [np.zeros(self.grid.shape + (self.grid.n,) * k) for k in range(1, 5)]
        for s, f in parts:
            j = self._jets(f)
            if j is None:
                continue
            vals = vals + s * j[0]
            derivs = [d + s * x for d, x in zip(derivs, j[1:])]
        return InvariantPotential(self.grid, vals, None, True, tuple(derivs))

    def time_jet(self, t: float):
        shape = self.grid.shape
        n = self.grid.n
        dt = np.zeros(shape)
        dxdt = np.zeros(shape + (n,))
        dtt = np.zeros(shape)
        jb, jc = self._jets(self.b), self._jets(self.c)
        if jb is not None:
            dt = dt + jb[0]
            dxdt = dxdt + jb[1]
        if jc is not None:
            dt = dt + 2 * t * jc[0]
            dxdt = dxdt + 2 * t * jc[1]
            dtt = dtt + 2 * jc[0]
        return dt, dxdt, dtt


@dataclass(frozen=True, eq=False)
class SlotSpec:
    """One slot of a pairing along a ray: a form and a ray (``None`` = zero)."""

    theta: InvariantForm
    ray: RaySpec | None = None


@dataclass(frozen=True)
class DdcSlopeReport:
    """Change of ``d/dt`` of the pairing between ``t1`` and ``t2``.

    ``lhs`` comes from centered differences of the pairing, ``rhs`` from the
    fiber integral over ``X x [t1, t2]``.
    """

    t1: float
    t2: float
    lhs: float
    rhs: float

    @property
    def discrepancy(self) -> float:
        return abs(self.lhs - self.rhs)


def _pairing_at(slots: Sequence[SlotSpec], t: float, B: FourFormField | None) -> float:
    grid = slots[0].theta.grid
    zero = InvariantPotential.zero(grid)
    phis = [s.ray.potential(t) if s.ray is not None else zero for s in slots]
    thetas = [s.theta for s in slots]
    if B is None:
        return deligne_pairing(phis, thetas)
    return modified_pairing(phis, thetas, B, k=2)


def _xt_hessian(slot: SlotSpec, t: float) -> np.ndarray:
    """``(x, t)`` Hessian of ``pr^* theta + dd^c Phi`` as an ``(n+1)``-square field."""
    grid = slot.theta.grid
    n = grid.n
    out = np.zeros(grid.shape + (n + 1, n + 1))
    out[..., :n, :n] = slot.theta.hessian
    if slot.ray is not None:
        p = slot.ray.potential(t)
        dt, dxdt, dtt = slot.ray.time_jet(t)
        out[..., :n, :n] += hessian_field(p).hessian
        out[..., :n, n] = dxdt
        out[..., n, :n] = dxdt
        out[..., n, n] = dtt
    return out


def ddc_slope_check(slots: Sequence[SlotSpec], t1: float, t2: float, dt: float = 1e-3,
                    nodes: int = 16, B: FourFormField | None = None) -> DdcSlopeReport:
    """Compare ``d/dt <phi^t..>`` at ``t2`` minus ``t1`` with the fiber integral.

    With ``B = None`` the right side is
    ``(n+1)! pi^n int_{t1}^{t2} int_X MD_{n+1}(slot Hessians) dx dt``.
    With a (2,2)-form ``B`` (``n = 2``, one slot) it is
    ``2 pi^2 int int (coeff/2) d_t^2 phi dx dt``.
    """
    if t2 <= t1:
        raise ValueError("need t1 < t2")
    grid = _check_grid(*[s.theta.grid for s in slots])
    n = grid.n

    def deriv(t):
        return (_pairing_at(slots, t + dt, B) - _pairing_at(slots, t - dt, B)) / (2 * dt)

    lhs = deriv(t2) - deriv(t1)
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    ts = 0.5 * (t2 - t1) * gx + 0.5 * (t1 + t2)
    ws = 0.5 * (t2 - t1) * gw
    rhs = 0.0
    for t, w in zip(ts, ws):
        if B is None:
            mats = [_xt_hessian(s, t) for s in slots]
            md = mixed_determinant(*mats)
            rhs += w * math.factorial(n + 1) * math.pi**n * quadrature_sum(grid, md)
        else:
            if len(slots) != 1 or slots[0].ray is None:
                raise ValueError("B-check needs exactly one ray slot")
            _, _, dtt = slots[0].ray.time_jet(t)
            rhs += w * math.factorial(n) * math.pi**n * quadrature_sum(grid, B.md() * dtt)
    return DdcSlopeReport(t1, t2, lhs, rhs)
