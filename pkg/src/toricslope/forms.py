"""Curvature and contractions: Ricci form, scalar curvature, ``Lambda_omega``
and degree-(2,2) wedge fields."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conventions import POLYTOPE_FACTOR, top_degree_constant
from .geometry import (
    InvariantForm,
    InvariantPotential,
    KahlerStructure,
    LogGrid,
    _check_grid,
    fd_hessian,
    hessian_field,
    integrate_top,
    mixed_determinant,
    quadrature_sum,
)

__all__ = [
    "FourFormField",
    "ricci_potential",
    "ricci_form",
    "scalar_curvature",
    "mean_scalar_curvature",
    "contract",
    "wedge_22",
]


@dataclass(frozen=True, eq=False)
class FourFormField:
    """Invariant (2,2)-form ``c * (kernel of omega_1 ^ omega_2 with MD = 1)``.

    ``coeff`` is normalized so that ``int f * B`` equals
    ``2! pi^2 sum f * coeff / 2 * w``; for ``B = a ^ b`` the coefficient is
    ``2 MD(a, b)``. Identically zero when ``n = 1``.
    """

    grid: LogGrid
    coeff: np.ndarray

    @classmethod
    def zero(cls, grid: LogGrid) -> "FourFormField":
        return cls(grid, np.zeros(grid.shape))

    @property
    def is_zero(self) -> bool:
        return self.grid.n < 2 or not np.any(self.coeff)

    def md(self) -> np.ndarray:
        """The field ``MD``-equivalent density, ``coeff / 2``."""
        return 0.5 * self.coeff

    def __add__(self, other: "FourFormField") -> "FourFormField":
        _check_grid(self.grid, other.grid)
        return FourFormField(self.grid, self.coeff + other.coeff)

    def scaled(self, c: float) -> "FourFormField":
        return FourFormField(self.grid, c * self.coeff)

    def integrate(self, f=1.0) -> float:
        """``int f B`` (zero when ``n = 1``)."""
        if self.grid.n < 2:
            return 0.0
        if isinstance(f, InvariantPotential):
            f = f.values
        return top_degree_constant(2) * quadrature_sum(self.grid, np.asarray(f) * self.md())


def _logdet_hessian(G: np.ndarray, d3: np.ndarray, d4: np.ndarray) -> np.ndarray:
    """Hessian of ``log det G`` from the derivative tensors of the potential."""
    Gi = np.linalg.inv(G)
    n = G.shape[-1]
    out = np.empty(G.shape)
    dG = [d3[..., i] for i in range(n)]
    GidG = [Gi @ g for g in dG]
    for i in range(n):
        for j in range(i, n):
            t = np.einsum("...ab,...ba->...", Gi, d4[..., i, j]) - np.einsum(
                "...ab,...ba->...", GidG[i], GidG[j])
            out[..., i, j] = t
            out[..., j, i] = t
    return out


def ricci_potential(ks: KahlerStructure) -> np.ndarray:
    """``-log det D^2 psi0`` on the grid."""
    det = np.linalg.det(ks.omega0.hessian)
    if not np.all(det > 0):
        raise ValueError("non-positive det of the reference Hessian")
    return -np.log(det)


def ricci_form(ks: KahlerStructure) -> InvariantForm:
    """Ricci form as the Hessian of ``-log det D^2 psi0``.

    Uses the closed-form Ricci potential when the structure has one, the
    order-4 jets of ``psi0`` next, finite differences last. The class data
    is the anticanonical polytope.
    """
    desc = ks.polytope.anticanonical(POLYTOPE_FACTOR).descriptor()
    if ks.ricci_source is not None:
        rho = InvariantPotential.from_function(ks.grid, ks.ricci_source, 2)
        return InvariantForm(ks.grid, hessian_field(rho).hessian, desc, False)
    rho = ricci_potential(ks)
    p = ks.psi0
    if p.exact_order >= 4:
        H = -_logdet_hessian(p.derivs[1], p.derivs[2], p.derivs[3])
    else:
        H = fd_hessian(rho, ks.grid)
    return InvariantForm(ks.grid, H, desc, False)


def contract(theta: InvariantForm, omega: InvariantForm) -> np.ndarray:
    """``Lambda_omega theta = tr(omega^{-1} theta)`` pointwise."""
    _check_grid(theta.grid, omega.grid)
    det = np.linalg.det(omega.hessian)
    if not np.all(det > 0):
        raise ValueError("degenerate omega")
    n = theta.grid.n
    if n == 1:
        return theta.hessian[..., 0, 0] / omega.hessian[..., 0, 0]
    return n * mixed_determinant(theta, omega) / det


def scalar_curvature(ks: KahlerStructure, ric: InvariantForm | None = None) -> np.ndarray:
    """``S = Lambda_omega Ric(omega)`` (trace of the Ricci form)."""
    return contract(ric if ric is not None else ricci_form(ks), ks.omega0)


def mean_scalar_curvature(ks: KahlerStructure, ric: InvariantForm | None = None) -> float:
    """``S_bar = int S omega^n / int omega^n``."""
    n = ks.n
    w = [ks.omega0] * n
    vol = integrate_top(1.0, *w)
    if not vol > 0:
        raise ValueError("zero volume")
    ric = ric if ric is not None else ricci_form(ks)
    return integrate_top(1.0, ric, *w[1:]) * n / vol


def wedge_22(a: InvariantForm, b: InvariantForm) -> FourFormField:
    """``a ^ b`` as a :class:`FourFormField` (zero when ``n = 1``)."""
    grid = _check_grid(a.grid, b.grid)
    if grid.n < 2:
        return FourFormField.zero(grid)
    return FourFormField(grid, 2.0 * mixed_determinant(a, b))


def total_mass(*forms: InvariantForm) -> float:
    return integrate_top(1.0, *forms)
