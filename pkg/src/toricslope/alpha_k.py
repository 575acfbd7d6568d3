"""The alpha-K-energy of a pair (Kahler potential, Hermitian metric).

Two independent evaluations are provided: the defining path integral
(:func:`alpha_k_energy_path`, the oracle) and the closed form assembled from
the Mabuchi energy, ``Q1'``, ``Q2'`` and ``M'``
(:func:`alpha_k_energy_closed`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bundles import (
    BundleMetric,
    CurvatureField,
    MatrixPotential,
    _dexp_rot,
    _exp_data,
    chern_curvature,
    constant_z,
    m_prime,
    trace_R,
    trace_RR,
)
from .conventions import LEDGER, Ledger
from .forms import _logdet_hessian, mean_scalar_curvature, ricci_form
from .geometry import (
    InvariantForm,
    InvariantPotential,
    KahlerStructure,
    _check_grid,
    fd_hessian,
    integrate_top,
    quadrature_sum,
)
from .pairings import _shifted, deligne_pairing, mabuchi, modified_pairing
from .parallel import ordered_sum, pmap

__all__ = [
    "PairState",
    "Leg",
    "PathSpec",
    "straight_path",
    "broken_path",
    "detour_path",
    "coupled_curvature",
    "PathEnergy",
    "alpha_k_energy_path",
    "q1_prime",
    "q2_prime",
    "ClosedTerms",
    "alpha_k_energy_closed",
    "PathIndependenceReport",
    "path_independence_report",
]


@dataclass(frozen=True, eq=False)
class PairState:
    """A Kahler potential ``phi`` (``omega_phi = omega_0 + dd^c phi``) and a metric ``H``."""

    phi: InvariantPotential
    H: BundleMetric

    def __post_init__(self):
        _check_grid(self.phi.grid, self.H.grid)

    @property
    def grid(self):
        return self.phi.grid

    def omega(self, ks: KahlerStructure) -> InvariantForm:
        return _shifted(ks.omega0, self.phi)


def _matrix_potential(H: BundleMetric) -> MatrixPotential:
    if H.A is None:
        raise ValueError("path legs need metrics given by a matrix potential")
    return H.A


@dataclass(frozen=True, eq=False)
class Leg:
    """``phi_s = (1-s) phi_a + s phi_b`` and ``H_s = R exp((1-s) A_a + s A_b) R``."""

    start: PairState
    end: PairState

    def __post_init__(self):
        _check_grid(self.start.grid, self.end.grid)
        _matrix_potential(self.start.H)
        _matrix_potential(self.end.H)
        if self.start.H.bundle.degrees != self.end.H.bundle.degrees:
            raise ValueError("leg joins metrics on different bundles")

    @property
    def moves_phi(self) -> bool:
        return self.start.phi is not self.end.phi and bool(
            np.any(self.start.phi.values != self.end.phi.values))

    @property
    def moves_H(self) -> bool:
        a, b = self.start.H.A, self.end.H.A
        if a is b:
            return False
        d = (b - a).jet(self.start.grid.points, 0)[0]
        return bool(np.any(d != 0))


@dataclass(frozen=True, eq=False)
class PathSpec:
    """Chain of legs with a Gauss-Legendre rule of ``nodes`` points per leg."""

    legs: tuple[Leg, ...]
    nodes: int = 32
    label: str = ""

    def __post_init__(self):
        if not self.legs:
            raise ValueError("empty path")
        if self.nodes < 1:
            raise ValueError("need at least one node")
        for a, b in zip(self.legs[:-1], self.legs[1:]):
            if not _same_state(a.end, b.start):
                raise ValueError("legs do not chain")
        object.__setattr__(self, "legs", tuple(self.legs))

    @property
    def start(self) -> PairState:
        return self.legs[0].start

    @property
    def end(self) -> PairState:
        return self.legs[-1].end

    def with_nodes(self, nodes: int) -> "PathSpec":
        return PathSpec(self.legs, nodes, self.label)


def _same_state(a: PairState, b: PairState, tol: float = 1e-12) -> bool:
    if a is b:
        return True
    if np.max(np.abs(a.phi.values - b.phi.values)) > tol:
        return False
    Ea = a.H.frame_jet[0]
    Eb = b.H.frame_jet[0]
    return bool(np.max(np.abs(Ea - Eb)) <= tol)


def straight_path(b1: PairState, b0: PairState, nodes: int = 32) -> PathSpec:
    """Move ``phi`` and ``H`` simultaneously."""
    return PathSpec((Leg(b0, b1),), nodes, "straight")


def broken_path(b1: PairState, b0: PairState, nodes: int = 32) -> PathSpec:
    """``(phi, H_0)`` first, then ``(phi_1, H)``: the special broken path."""
    mid = PairState(b1.phi, b0.H)
    return PathSpec((Leg(b0, mid), Leg(mid, b1)), nodes, "broken")


def detour_path(b1: PairState, b0: PairState, via: PairState, nodes: int = 32) -> PathSpec:
    """Three legs: ``b0 -> via``, ``via -> (phi_1, H_via)``, then ``-> b1``."""
    mid = PairState(b1.phi, via.H)
    return PathSpec((Leg(b0, via), Leg(via, mid), Leg(mid, b1)), nodes, "detour")


# pointwise fields ---------------------------------------------------------------------


def _ricci_of(phi: InvariantPotential, ks: KahlerStructure, ric0: InvariantForm) -> np.ndarray:
    """``Ric(omega_phi) = Ric(omega_0) - D^2 log(det G_phi / det G_0)``."""
    p0 = ks.psi0
    if phi.exact_order >= 4 and p0.exact_order >= 4:
        G = p0.derivs[1] + phi.derivs[1]
        d3 = p0.derivs[2] + phi.derivs[2]
        d4 = p0.derivs[3] + phi.derivs[3]
        return ric0.hessian - (_logdet_hessian(G, d3, d4)
                               - _logdet_hessian(p0.derivs[1], p0.derivs[2], p0.derivs[3]))
    om = _shifted(ks.omega0, phi)
    ratio = np.log(np.linalg.det(om.hessian) / np.linalg.det(ks.omega0.hessian))
    return ric0.hessian - fd_hessian(ratio, ks.grid)


@dataclass(frozen=True)
class _Fields:
    """Pointwise data of a state needed by both integrands."""

    G: np.ndarray
    det: np.ndarray
    S: np.ndarray
    K: CurvatureField
    LK: np.ndarray
    trLK: np.ndarray
    lam2_trr: np.ndarray


def _fields(phi: InvariantPotential, H: BundleMetric, ks: KahlerStructure, ric0: InvariantForm,
            K: CurvatureField | None = None) -> _Fields:
    om = _shifted(ks.omega0, phi)
    G = om.hessian
    det = np.linalg.det(G)
    if not np.all(det > 0):
        raise ValueError("omega_phi lost positivity along the path")
    Gi = np.linalg.inv(G)
    S = np.einsum("...jk,...kj->...", Gi, _ricci_of(phi, ks, ric0))
    K = chern_curvature(H) if K is None else K
    LK = np.einsum("...jk,...jkab->...ab", Gi, K.K)
    trLK = np.real(np.einsum("...aa->...", LK))
    if ks.n >= 2:
        lam2 = trace_RR(K).coeff / det
    else:
        lam2 = np.zeros(ks.grid.shape)
    return _Fields(G, det, S, K, LK, trLK, lam2)


def coupled_curvature(b: PairState, ks: KahlerStructure, alpha: Sequence[float],
                      ledger: Ledger = LEDGER, z: float | None = None) -> np.ndarray:
    """``S_alpha = -a0 S + q1_coupling a1 Lambda^2 tr(F^F) + z_coupling a1 z Lambda tr F``."""
    a0, a1 = _alpha(alpha)
    z = constant_z(b.H.bundle, ks, ledger) if z is None else z
    f = _fields(b.phi, b.H, ks, ricci_form(ks))
    return -a0 * f.S + ledger.q1_coupling * a1 * f.lam2_trr + ledger.z_coupling * a1 * z * f.trLK


def _alpha(alpha) -> tuple[float, float]:
    a = tuple(float(x) for x in alpha)
    if len(a) != 2:
        raise ValueError("alpha must be a pair (alpha_0, alpha_1)")
    return a


# path integral -----------------------------------------------------------------------


@dataclass(frozen=True)
class PathEnergy:
    """Path integral split into the ``alpha_0`` and ``alpha_1`` parts.

    ``cscK`` is the ``alpha_0``-coefficient, ``coupling`` the
    ``alpha_1``-coefficient; ``value = a0 * cscK + a1 * coupling``.
    ``components`` splits ``coupling`` into the ``M``, ``Q1`` and ``Q2``
    path integrals (ledger coefficients applied). ``refinement`` is the
    change of ``value`` under halving the node count (``None`` if not run).
    """

    alpha: tuple[float, float]
    cscK: float
    coupling: float
    components: dict[str, float]
    refinement: float | None = None

    @property
    def value(self) -> float:
        return self.alpha[0] * self.cscK + self.alpha[1] * self.coupling


def _leg_node_terms(leg: Leg, s: float, ks: KahlerStructure, ric0: InvariantForm, sbar: float,
                    z: float, ledger: Ledger, K_fixed: CurvatureField | None, dphi: np.ndarray,
                    dA: np.ndarray | None) -> np.ndarray:
    """Integrands at one node: ``[cscK, M, Q1, Q2]`` (the last three without ``alpha_1``)."""
    phi = leg.start.phi.scaled(1.0 - s) + leg.end.phi.scaled(s) if leg.moves_phi else leg.start.phi
    if dA is not None:
        A = MatrixPotential.affine(leg.start.H.A, leg.end.H.A, s)
        H = BundleMetric(leg.start.H.bundle, leg.start.H.grid, A)
    else:
        H = leg.start.H
    f = _fields(phi, H, ks, ric0, K_fixed)
    dens = math.pi**ks.n * f.det
    out = np.zeros(4)
    if dphi is not None:
        out[0] = quadrature_sum(ks.grid, dphi * (sbar - f.S) * dens)
        out[2] = quadrature_sum(ks.grid, dphi * f.lam2_trr * dens)
        out[3] = quadrature_sum(ks.grid, dphi * z * f.trLK * dens)
    if dA is not None:
        Avals = H.A.jet(ks.grid.points, 0)[0]
        E, d = _exp_data(Avals, False)
        Edot = _dexp_rot(d, d.rotate(dA))
        L = np.linalg.solve(E, Edot)
        r = E.shape[-1]
        M = f.LK - z * np.eye(r)
        val = np.real(np.einsum("...ab,...ba->...", L, M))
        out[1] = ledger.donaldson_half * quadrature_sum(ks.grid, val * dens)
    return out


def _leg_integral(leg: Leg, nodes: int, ks: KahlerStructure, ric0: InvariantForm, sbar: float,
                  z: float, ledger: Ledger, threads: int) -> np.ndarray:
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    ss = 0.5 * (gx + 1.0)
    ws = 0.5 * gw
    dphi = (leg.end.phi.values - leg.start.phi.values) if leg.moves_phi else None
    dA = None
    K_fixed = None
    if leg.moves_H:
        dA = (leg.end.H.A - leg.start.H.A).jet(ks.grid.points, 0)[0]
    else:
        K_fixed = chern_curvature(leg.start.H)
    if dphi is None and dA is None:
        return np.zeros(4)
    terms = pmap(lambda s: _leg_node_terms(leg, s, ks, ric0, sbar, z, ledger, K_fixed, dphi, dA),
                 ss, threads)
    terms = np.array(terms)
    return np.array([ordered_sum(ws * terms[:, c]) for c in range(4)])


def alpha_k_energy_path(path: PathSpec, ks: KahlerStructure, alpha: Sequence[float],
                        ledger: Ledger = LEDGER, refine: bool = False, threads: int = 0,
                        sbar: float | None = None) -> PathEnergy:
    """Gauss-Legendre evaluation of the defining double integral along ``path``.

    The ``phi``-integrand is ``phi_dot * (S_alpha + alpha_0 S_bar)`` against
    ``omega_s^n / n!``; the ``S_bar`` shift makes the ``alpha_0`` part the
    Mabuchi energy (divided by ``n!``). The ``H``-integrand is
    ``m_coupling * donaldson_half * alpha_1 * Re tr(H^{-1} H_dot (Lambda F - z))``.
    """
    a = _alpha(alpha)
    _check_grid(ks.grid, path.start.grid)
    ric0 = ricci_form(ks)
    sbar = mean_scalar_curvature(ks, ric0) if sbar is None else sbar
    z = constant_z(path.start.H.bundle, ks, ledger)

    def run(nodes):
        parts = [_leg_integral(leg, nodes, ks, ric0, sbar, z, ledger, threads) for leg in path.legs]
        return np.array([ordered_sum([p[c] for p in parts]) for c in range(4)])

    def energy(t):
        comps = {
            "M": ledger.m_coupling * t[1],
            "Q1": ledger.q1_coupling * t[2],
            "Q2": ledger.z_coupling * t[3],
        }
        return PathEnergy(a, t[0], comps["M"] + comps["Q1"] + comps["Q2"], comps)

    tot = run(path.nodes)
    res = energy(tot)
    if refine:
        coarse = energy(run(max(1, path.nodes // 2)))
        res = PathEnergy(a, res.cscK, res.coupling, res.components, abs(res.value - coarse.value))
    return res


# Q1', Q2' -------------------------------------------------------------------------------


def _q_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    gx, gw = np.polynomial.legendre.leggauss(max(2, n + 1))
    return 0.5 * (gx + 1.0), 0.5 * gw


def q1_prime(phi: InvariantPotential, H0: BundleMetric, ks: KahlerStructure, method: str = "pairing",
             base: InvariantPotential | None = None) -> float:
    """``Q1' = int_0^1 int phi tr(iR ^ iR) ^ omega_s^{n-2} / (n-2)! ds`` (zero when ``n < 2``).

    ``omega_s = omega_base + s dd^c (phi - base)`` and ``phi`` is replaced by
    ``phi - base``. ``method="pairing"`` uses the modified pairing identity,
    ``method="direct"`` the s-quadrature.
    """
    n = ks.n
    if n < 2:
        return 0.0
    psi, om = _rebase(phi, base, ks)
    B = trace_RR(chern_curvature(H0))
    if method == "pairing":
        return modified_pairing([psi] * (n - 1), [om] * (n - 1), B, k=2) / (
            (n - 1) * math.factorial(n - 2))
    if method == "direct":
        # omega_s^{n-2} is absent for n = 2; the s-rule still runs for uniformity
        ss, ws = _q_nodes(n)
        vals = [B.integrate(psi.values) for _ in ss]
        return ordered_sum(ws * np.array(vals)) / math.factorial(n - 2)
    raise ValueError(f"unknown method {method!r}; use 'pairing' or 'direct'")


def q2_prime(phi: InvariantPotential, H0: BundleMetric, ks: KahlerStructure, method: str = "pairing",
             base: InvariantPotential | None = None, ledger: Ledger = LEDGER,
             z: float | None = None) -> float:
    """``Q2' = z int_0^1 int phi tr(iR) ^ omega_s^{n-1} / (n-1)! ds``.

    ``method="pairing"`` evaluates ``z / n! * <0, phi, ..., phi>_(tr iR, omega, ..)``.
    """
    n = ks.n
    z = constant_z(H0.bundle, ks, ledger) if z is None else z
    if z == 0.0:
        return 0.0
    psi, om = _rebase(phi, base, ks)
    trF = trace_R(chern_curvature(H0))
    if method == "pairing":
        zero = InvariantPotential.zero(ks.grid)
        return z * deligne_pairing([zero] + [psi] * n, [trF] + [om] * n) / math.factorial(n)
    if method == "direct":
        ss, ws = _q_nodes(n)
        vals = [integrate_top(psi.values, trF, *([_shifted(om, psi.scaled(s))] * (n - 1))) for s in ss]
        return z * ordered_sum(ws * np.array(vals)) / math.factorial(n - 1)
    raise ValueError(f"unknown method {method!r}; use 'pairing' or 'direct'")


def _rebase(phi, base, ks):
    if base is None:
        return phi, ks.omega0
    return phi - base, _shifted(ks.omega0, base)


# closed form ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClosedTerms:
    """Closed-form pieces; ``value`` applies the ledger coefficients and ``alpha``."""

    alpha: tuple[float, float]
    mabuchi: float
    q1: float
    q2: float
    m: float
    ledger: Ledger = field(default=LEDGER, repr=False)

    @property
    def cscK(self) -> float:
        return self.mabuchi

    @property
    def coupling(self) -> float:
        L = self.ledger
        return L.m_coupling * self.m + L.q1_coupling * self.q1 + L.z_coupling * self.q2

    @property
    def value(self) -> float:
        return self.alpha[0] * self.cscK + self.alpha[1] * self.coupling


def alpha_k_energy_closed(b_t: PairState, b_0: PairState, ks: KahlerStructure, alpha: Sequence[float],
                          ledger: Ledger = LEDGER, nodes: int = 32) -> ClosedTerms:
    """``m_coupling a1 M' + a0 Mabuchi / n! + q1_coupling a1 Q1' + z_coupling a1 Q2'``.

    ``Q1'``, ``Q2'`` are taken along ``(phi_0 + s (phi_t - phi_0), H_0)`` and
    ``M'`` at ``omega_{phi_t}`` from ``H_0`` to ``H_t``.
    """
    a = _alpha(alpha)
    n = ks.n
    ric0 = ricci_form(ks)
    sbar = mean_scalar_curvature(ks, ric0)
    mab = (mabuchi(b_t.phi, ks, ric0, sbar).total - mabuchi(b_0.phi, ks, ric0, sbar).total) / math.factorial(n)
    z = constant_z(b_0.H.bundle, ks, ledger)
    q1 = q1_prime(b_t.phi, b_0.H, ks, base=b_0.phi)
    q2 = q2_prime(b_t.phi, b_0.H, ks, base=b_0.phi, ledger=ledger, z=z)
    if b_t.H is b_0.H:
        m = 0.0
    else:
        m = m_prime(b_t.H, b_0.H, ks, b_t.omega(ks), nodes, ledger, z)
    return ClosedTerms(a, mab, q1, q2, m, ledger)


# path independence ---------------------------------------------------------------------


@dataclass(frozen=True)
class PathIndependenceReport:
    """Values per path, their spread and the ``Q1``-alone witness."""

    labels: tuple[str, ...]
    values: tuple[float, ...]
    coupling: tuple[float, ...]
    q1_alone: tuple[float, ...]
    closed: float | None

    @property
    def deviation(self) -> float:
        return float(max(self.values) - min(self.values))

    @property
    def relative_deviation(self) -> float:
        scale = max(abs(v) for v in self.values)
        return self.deviation / scale if scale > 0 else self.deviation

    @property
    def coupling_deviation(self) -> float:
        return float(max(self.coupling) - min(self.coupling))

    @property
    def q1_spread(self) -> float:
        return float(max(self.q1_alone) - min(self.q1_alone))


def path_independence_report(paths: Sequence[PathSpec], ks: KahlerStructure, alpha: Sequence[float],
                             ledger: Ledger = LEDGER, closed: bool = True,
                             threads: int = 0) -> PathIndependenceReport:
    """Evaluate the path integral along every path joining the same endpoints."""
    if not paths:
        raise ValueError("no paths")
    b0, b1 = paths[0].start, paths[0].end
    for p in paths[1:]:
        if not (_same_state(p.start, b0, 1e-10) and _same_state(p.end, b1, 1e-10)):
            raise ValueError("paths do not share endpoints")
    res = [alpha_k_energy_path(p, ks, alpha, ledger, threads=threads) for p in paths]
    cl = alpha_k_energy_closed(b1, b0, ks, alpha, ledger).value if closed else None
    return PathIndependenceReport(
        tuple(p.label or f"path{i}" for i, p in enumerate(paths)),
        tuple(r.value for r in res),
        tuple(r.coupling for r in res),
        tuple(r.components["Q1"] for r in res),
        cl,
    )
