"""Convention ledger.

Every normalization constant used by the library lives here, so that factor
checks are mechanical and a single constant can be perturbed on purpose
(see ``testconfig.theorem_check``).

Conventions
-----------
* A torus-invariant function ``u`` on the dense orbit is written in
  logarithmic coordinates ``x``. The operator ``dd^c`` sends ``u`` to the
  (1,1)-form whose coefficient field is the real Hessian ``D^2 u``; every
  invariant (1,1)-form is stored as such a matrix field.
* Top-degree integrals: ``int f F_1 ^ ... ^ F_n = n! pi^n sum f MD(F) h^n``
  where ``MD`` is the mixed determinant normalized by ``MD(A,...,A) = det A``.
  With this choice the Fubini-Study form on P^1 has total mass ``2 pi``.
* The moment polytope of ``scale * log(1 + sum exp(2 x_j))`` is
  ``2 * scale * simplex``; the factor 2 is ``POLYTOPE_FACTOR``.
* A line bundle with reference metric ``exp(-v)`` has curvature field
  ``D^2 v`` and first Chern form ``D^2 v / (2 pi)``.
* ``ch_2`` of a bundle is ``tr(iR ^ iR) / (8 pi^2)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

__all__ = [
    "POLYTOPE_FACTOR",
    "top_degree_constant",
    "Ledger",
    "LEDGER",
]

#: Moment polytope of the scale-s Fubini-Study potential is POLYTOPE_FACTOR*s*simplex.
POLYTOPE_FACTOR = 2


def top_degree_constant(n: int) -> float:
    """Return ``kappa_n = n! pi^n`` used by :func:`geometry.integrate_top`."""
    return math.factorial(n) * math.pi**n


@dataclass(frozen=True)
class Ledger:
    """Signed constants entering the functionals and the slope formula.

    Attributes
    ----------
    chern_factor : float
        First Chern form per unit curvature field, ``1/(2 pi)``.
    ch2_factor : float
        ``ch_2`` per unit ``tr(iR ^ iR)``, ``1/(8 pi^2)``.
    z_factor : float
        ``z = z_factor * n * pi * mu / vol`` with ``mu``, ``vol`` in the
        unnormalized convention (``vol = int omega^n``). Equals 2.
    z_coupling : float
        Coefficient of ``alpha_1 * z * Lambda tr F`` in the coupled
        curvature (4 as displayed in the source formula).
    q1_coupling : float
        Coefficient of ``alpha_1 * Lambda^2 tr(F ^ F)`` in the coupled
        curvature (-1).
    m_coupling : float
        Coefficient of ``alpha_1`` in front of the ``M`` term (4).
    donaldson_half : float
        ``M' = donaldson_half * Donaldson`` (1/2).
    mabuchi_kappa : float
        Slope of the ``1/n!``-normalized Chen-Tian energy per unit of the
        raw Donaldson-Futaki integral, divided by ``pi^n``. Equals 2.
    ch2_rhs : float
        Coefficient of the ``ch_2`` intersection number, divided by
        ``pi^2`` (-8).
    c1_rhs : float
        Coefficient of the ``c_1`` intersection number, divided by
        ``pi^2`` (16).
    """

    chern_factor: float = 1.0 / (2.0 * math.pi)
    ch2_factor: float = 1.0 / (8.0 * math.pi**2)
    z_factor: float = 2.0
    z_coupling: float = 4.0
    q1_coupling: float = -1.0
    m_coupling: float = 4.0
    donaldson_half: float = 0.5
    mabuchi_kappa: float = 2.0
    ch2_rhs: float = -8.0
    c1_rhs: float = 16.0

    def flipped(self, name: str) -> "Ledger":
        """Return a copy with the sign of constant ``name`` reversed."""
        if name not in self.as_dict():
            raise KeyError(f"unknown ledger constant {name!r}")
        return replace(self, **{name: -getattr(self, name)})

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    def report(self) -> dict[str, float]:
        """Constants as embedded in CLI reports, with the derived ones."""
        out = self.as_dict()
        out["polytope_factor"] = float(POLYTOPE_FACTOR)
        out["kappa_1"] = top_degree_constant(1)
        out["kappa_2"] = top_degree_constant(2)
        return out


#: Default ledger instance.
LEDGER = Ledger()
