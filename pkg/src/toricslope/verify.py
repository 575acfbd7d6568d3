"""Verification suites behind ``toricslope verify``.

Each suite returns a list of :class:`CheckResult`. A check passes when
``value`` is within ``tol`` of ``reference`` in the sense recorded in
``kind``: ``"abs"`` (``|value - reference| <= tol``), ``"rel"``
(relative to ``|reference|``), ``"min"`` (``value >= reference``) or
``"max"`` (``value <= reference``; ``tol`` unused).
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .alpha_k import (
    PairState,
    alpha_k_energy_closed,
    alpha_k_energy_path,
    broken_path,
    detour_path,
    path_independence_report,
    q1_prime,
    q2_prime,
    straight_path,
)
from .analytic import Constant
from .bundles import (
    BundleMetric,
    MatrixPotential,
    donaldson_functional,
    line_bundle,
    m_prime,
    m_prime_direct,
    orthonormality_check,
    random_endo,
    split_bundle,
    trivial_bundle,
)
from .conventions import LEDGER, Ledger
from .geometry import InvariantPotential, KahlerStructure, make_product, make_projective_space, random_potential
from .pairings import _shifted, deligne_pairing, ma_energy, mabuchi
from .parallel import pmap
from .scenario import Scenario, shipped_scenarios
from .testconfig import (
    GUARDED_CONSTANTS,
    make_ray,
    ray_ddc_check,
    ray_values,
    theorem_check,
)

__all__ = ["SUITES", "CheckResult", "run_suite", "run_suites", "scenario_checks"]

SUITES = ("conventions", "pairings", "bundles", "alpha_k", "slopes")


@dataclass(frozen=True)
class CheckResult:
    """One verification check.

    ``criterion`` is the acceptance id (``A1`` ... ``A10``) or invariant id
    (``P1`` ... ``P5``) the check belongs to, or ``""``.
    """

    suite: str
    name: str
    value: float
    reference: float
    tol: float
    kind: str
    criterion: str = ""
    detail: str = ""

    @property
    def passed(self) -> bool:
        v, r = self.value, self.reference
        if not math.isfinite(v):
            return False
        if self.kind == "abs":
            return abs(v - r) <= self.tol
        if self.kind == "rel":
            return abs(v - r) <= self.tol * abs(r)
        if self.kind == "min":
            return v >= r
        if self.kind == "max":
            return v <= r
        raise ValueError(f"unknown check kind {self.kind!r}")

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["passed"] = self.passed
        return d


def _rel_spread(vals) -> float:
    vals = [float(v) for v in vals]
    scale = max(abs(v) for v in vals)
    spread = max(vals) - min(vals)
    return spread / scale if scale > 0 else spread


def _p1(L=None, N=None) -> KahlerStructure:
    return make_projective_space(1, L=L, N=N)


def _p1p1(N: int = 65) -> KahlerStructure:
    p = make_projective_space(1, L=8, N=N)
    return make_product(p, p)


# conventions ----------------------------------------------------------------------------


def _conventions(threads: int) -> list[CheckResult]:
    S = "conventions"
    out = []
    vol = _p1(10, 129).volume()
    out.append(CheckResult(S, "P1 volume = 2 pi (N=129)", vol, 2 * math.pi, 1e-6, "abs", "A1"))
    # the box tail is below roundoff at L=16, so the error is pure quadrature error
    e65 = abs(_p1(16, 65).volume() - 2 * math.pi)
    e129 = abs(_p1(16, 129).volume() - 2 * math.pi)
    order = math.log2(e65 / e129) if e129 > 0 else math.inf
    order = min(order, 99.0)
    out.append(CheckResult(S, "P1 volume quadrature order (N=65/129, L=16)", order, 3.5, 0.0, "min", "A1",
                           f"errors {e65:.3e} / {e129:.3e}"))
    q = _p1p1(97)
    out.append(CheckResult(S, "P1xP1 volume = (2 pi)^2", q.volume(), 4 * math.pi**2, 1e-6, "rel"))
    p2 = make_projective_space(2)
    out.append(CheckResult(S, "P2 volume = exact polytope volume", p2.volume(), p2.exact_volume(), 1e-5, "rel"))
    L = LEDGER
    out.append(CheckResult(S, "ledger ch2_factor = chern_factor^2 / 2", L.ch2_factor, L.chern_factor**2 / 2,
                           1e-15, "rel"))
    out.append(CheckResult(S, "ledger donaldson_half = 1/2", L.donaldson_half, 0.5, 0.0, "abs"))
    return out


# pairings -------------------------------------------------------------------------------


def _pairings(threads: int, seed: int = 7) -> list[CheckResult]:
    S = "pairings"
    rng = np.random.default_rng(seed)
    out = []
    for ks, label in ((_p1(), "P1"), (_p1p1(), "P1xP1")):
        n = ks.n
        worst = 0.0
        for _ in range(5):
            phis = [random_potential(ks, rng) for _ in range(n + 1)]
            thetas = [_shifted(ks.omega0, random_potential(ks, rng)) for _ in range(n + 1)]
            perms = list(itertools.permutations(range(n + 1)))
            vals = pmap(lambda p: deligne_pairing([phis[i] for i in p], [thetas[i] for i in p]), perms, threads)
            worst = max(worst, _rel_spread(vals))
        nperm = math.factorial(n + 1)
        out.append(CheckResult(S, f"pairing symmetry, {nperm} permutations, {label}", worst, 1e-7, 0.0, "max",
                               "A2", "max relative spread over 5 random inputs"))
    for ks, label in ((_p1(), "P1"), (_p1p1(), "P1xP1")):
        n = ks.n
        E = line_bundle(ks, 1) if n == 1 else split_bundle(ks, (1, 0), (0, 1))
        H = BundleMetric(E, ks.grid, MatrixPotential.random(rng, n, E.rank))
        w1 = w2 = 0.0
        for _ in range(5):
            phi = random_potential(ks, rng)
            a, b = q2_prime(phi, H, ks, "pairing"), q2_prime(phi, H, ks, "direct")
            w2 = max(w2, abs(a - b) / abs(a))
            if n == 2:
                a, b = q1_prime(phi, H, ks, "pairing"), q1_prime(phi, H, ks, "direct")
                w1 = max(w1, abs(a - b) / abs(a))
        out.append(CheckResult(S, f"Q2' pairing vs s-quadrature, {label}", w2, 1e-6, 0.0, "max", "A3"))
        if n == 2:
            out.append(CheckResult(S, f"Q1' pairing vs s-quadrature, {label}", w1, 1e-6, 0.0, "max", "A3"))
    return out


# bundles --------------------------------------------------------------------------------


def _bundles(threads: int, seed: int = 3) -> list[CheckResult]:
    S = "bundles"
    rng = np.random.default_rng(seed)
    ks = _p1p1()
    E = split_bundle(ks, (1, 0), (0, 1))
    H0, H1, H2 = (BundleMetric(E, ks.grid, MatrixPotential.random(rng, 2, 2)) for _ in range(3))
    a = m_prime(H1, H0, ks)
    b = m_prime_direct(H1, H0, ks)
    out = [CheckResult(S, "M' = Donaldson/2 against the direct quadrature", a, b, 1e-6, "rel", "A5")]
    d10 = donaldson_functional(H1, H0, ks)
    d21 = donaldson_functional(H2, H1, ks)
    d20 = donaldson_functional(H2, H0, ks)
    scale = max(1.0, abs(d10), abs(d21), abs(d20))
    out.append(CheckResult(S, "Donaldson cocycle", (d10 + d21 - d20) / scale, 0.0, 1e-8, "abs", "A5"))
    # narrow bumps keep the metric tails inside the box
    Hn = BundleMetric(E, ks.grid, MatrixPotential.random(rng, 2, 2, spread=1.0, width=(0.5, 0.9)))
    Hc = BundleMetric(E, ks.grid, Hn.A + MatrixPotential(2, 2, ((Constant(2, 0.7), np.eye(2)),)))
    dc = donaldson_functional(Hc, Hn, ks)
    out.append(CheckResult(S, "Donaldson vanishes on a constant rescaling", dc / scale, 0.0, 1e-8, "abs", "A5"))
    worst = 0.0
    for _ in range(3):
        H = BundleMetric(E, ks.grid, MatrixPotential.random(rng, 2, 2))
        worst = max(worst, orthonormality_check(random_endo(rng, ks.grid, 2, 1.0), H))
    out.append(CheckResult(S, "endomorphism-to-metric orthonormality defect, rank 2", worst, 1e-10, 0.0, "max",
                           "A9"))
    return out


# alpha_k --------------------------------------------------------------------------------


def _path_states(ks: KahlerStructure, E, rng) -> tuple[PairState, PairState, PairState]:
    zero = InvariantPotential.zero(ks.grid)
    phi1 = random_potential(ks, rng)
    phiv = random_potential(ks, rng)
    H0 = BundleMetric.reference(E, ks.grid)
    H1 = BundleMetric(E, ks.grid, MatrixPotential.random(rng, 2, E.rank, amplitude=0.4))
    Hv = BundleMetric(E, ks.grid, MatrixPotential.random(rng, 2, E.rank, amplitude=0.4))
    return PairState(zero, H0), PairState(phi1, H1), PairState(phiv, Hv)


def _alpha_k(threads: int, seed: int = 3, nodes: int = 16) -> list[CheckResult]:
    S = "alpha_k"
    rng = np.random.default_rng(seed)
    ks = _p1p1()
    alpha = (1.0, 1.0)
    out = []
    cases = (
        ("mu != 0, ledger as shipped", split_bundle(ks, (1, 0), (0, 1)), LEDGER),
        ("mu = 0", split_bundle(ks, (1, 0), (-1, 0)), LEDGER),
        ("mu != 0, z_coupling = 2", split_bundle(ks, (1, 0), (0, 1)), dataclasses.replace(LEDGER, z_coupling=2.0)),
    )
    states = {}
    for label, E, ledger in cases:
        key = E.degrees
        if key not in states:
            states[key] = _path_states(ks, E, rng)
        b0, b1, via = states[key]
        paths = [straight_path(b1, b0, nodes), broken_path(b1, b0, nodes), detour_path(b1, b0, via, nodes)]
        r = path_independence_report(paths, ks, alpha, ledger, threads=threads)
        detail = "straight/broken/detour = " + ", ".join(f"{v:.10g}" for v in r.values)
        out.append(CheckResult(S, f"path independence of M_I, {label}", r.relative_deviation, 1e-5, 0.0, "max",
                               "A4", detail))
        out.append(CheckResult(S, f"closed form vs straight path, {label}", r.closed, r.values[0], 1e-5, "rel",
                               "A4"))
        if label == "mu = 0":
            scale = max(abs(v) for v in r.values)
            out.append(CheckResult(S, "Q1 path integral alone depends on the path", r.q1_spread / scale, 1e-6,
                                   0.0, "min", "A4", "q1 per path = " + ", ".join(f"{v:.6g}" for v in r.q1_alone)))
    # cocycle of the closed form on the mu = 0 bundle
    E = split_bundle(ks, (1, 0), (-1, 0))
    b0, b1, b2 = states[E.degrees]
    m10 = alpha_k_energy_closed(b1, b0, ks, alpha).value
    m21 = alpha_k_energy_path(straight_path(b2, b1, nodes), ks, alpha, threads=threads).value
    m20 = alpha_k_energy_closed(b2, b0, ks, alpha).value
    out.append(CheckResult(S, "cocycle M_I(b2,b0) = M_I(b2,b1) + M_I(b1,b0)", m10 + m21, m20, 1e-5, "rel"))
    # trivial bundle: only the Mabuchi part survives
    T = trivial_bundle(ks)
    H = BundleMetric.reference(T, ks.grid)
    phi = random_potential(ks, rng)
    a = (1.0, 0.7)
    val = alpha_k_energy_path(straight_path(PairState(phi, H), PairState(InvariantPotential.zero(ks.grid), H),
                                            32), ks, a, threads=threads).value
    mab = mabuchi(phi, ks).total / math.factorial(ks.n)
    out.append(CheckResult(S, "trivial bundle reduces to alpha_0 Mabuchi", val, a[0] * mab, 1e-6, "rel"))
    return out


# slopes ---------------------------------------------------------------------------------


def scenario_checks(sc: Scenario, threads: int = 0, resolution: int | None = None,
                    ledger: Ledger = LEDGER, guard: bool = True) -> list[CheckResult]:
    """Slope, ray and ledger-guard checks on one scenario with a test configuration."""
    S = "slopes"
    ks = sc.manifold(resolution)
    tc = sc.test_config(ks)
    E = sc.bundle(ks)
    times = sc.slope_times()
    alpha = sc.alpha
    ray = make_ray(tc, ks, times)
    vals = ray_values(ray, E, times, threads)
    chk = theorem_check(tc, E, ks, alpha, times, ledger, threads, vals)
    name = sc.name
    tol = sc.tol("slope_rel")
    out = []
    if chk.rhs != 0:
        out.append(CheckResult(S, f"{name}: slope of M_I vs intersection numbers", chk.lhs.slope, chk.rhs, tol,
                               "rel", "P5", f"label={ray.label}"))
    else:
        scale = max(1.0, *(abs(q) for q in chk.lhs.quotients))
        out.append(CheckResult(S, f"{name}: slope of M_I vs intersection numbers", chk.lhs.slope / scale, 0.0,
                               0.01, "abs", "P5", f"label={ray.label}"))
    if alpha[0] != 0:
        m = chk.term("mabuchi")
        if m.rhs != 0:
            out.append(CheckResult(S, f"{name}: Mabuchi slope vs DF", m.lhs.slope, m.rhs, tol, "rel", "A6"))
        else:
            out.append(CheckResult(S, f"{name}: Mabuchi slope vs DF = 0", m.lhs.slope, 0.0, 0.01, "abs", "A6"))
    if not E.is_trivial and alpha[1] != 0:
        for term in ("q1", "q2") if ks.n == 2 else ("q2",):
            c = chk.term(term)
            label = {"q1": "Q1'", "q2": "Q2'/z"}[term]
            if abs(c.rhs) >= 0.1 * abs(chk.rhs):
                out.append(CheckResult(S, f"{name}: {label} slope vs exact polytope term", c.lhs.slope, c.rhs, tol,
                                       "rel", "A7"))
            else:
                # a term far below the total is compared on the scale of the total
                scale = max(abs(chk.rhs), 1e-300)
                out.append(CheckResult(S, f"{name}: {label} slope vs exact polytope term (scaled by total)",
                                       (c.lhs.slope - c.rhs) / scale, 0.0, tol, "abs", "A7"))
    out.append(CheckResult(S, f"{name}: difference quotients are Cauchy", float(chk.lhs.cauchy), 1.0, 0.0, "min",
                           "P2"))
    if guard and chk.rhs != 0 and tc.eps == 0:
        for const in GUARDED_CONSTANTS:
            g = theorem_check(tc, E, ks, alpha, times, ledger.flipped(const), threads, vals).rel_gap
            if g is not None and _guard_applies(const, E, alpha, ks.n):
                out.append(CheckResult(S, f"{name}: flipping {const} breaks the slope formula", g, 0.1, 0.0, "min",
                                       "A8"))
    out.extend(_ray_checks(sc, ray, E, ks, times, threads))
    return out


def _guard_applies(const: str, E, alpha, n: int) -> bool:
    """Whether ``const`` enters a nonzero term of the comparison."""
    if const == "mabuchi_kappa":
        return alpha[0] != 0
    if E.is_trivial or alpha[1] == 0:
        return False
    if const in ("q1_coupling", "ch2_rhs"):
        return n == 2
    return True


def _ray_checks(sc: Scenario, ray, E, ks: KahlerStructure, times, threads: int) -> list[CheckResult]:
    S = "slopes"
    name = sc.name
    n = ks.n
    out = []
    eigs = pmap(ray.min_eigenvalue, list(times), threads)
    out.append(CheckResult(S, f"{name}: subgeodesic, min eigenvalue of omega_t", float(min(eigs)),
                           -sc.tol("min_eig"), 0.0, "min", "P1"))
    patterns = [("omega^(n+1)", [("omega", True)] * (n + 1)),
                ("Ricci slot", [("ricci", True)] + [("omega", True)] * n)]
    if not E.is_trivial:
        patterns.append(("c1 slot", [("c1", False)] + [("omega", True)] * n))
    t1, t2 = times[0], times[1]
    for label, slots in patterns:
        r = ray_ddc_check(ray, slots, t1, t2, E, nodes=sc.ddc_nodes)
        out.append(CheckResult(S, f"{name}: dd^c slope identity, {label}", r.discrepancy / r.scale, 0.0,
                               sc.tol("ddc_rel"), "abs", "A10", f"lhs={r.lhs:.10g} rhs={r.rhs:.10g}"))

    def energy(t):
        ks_t, phi = ray.state(t)
        return ma_energy(phi, ks_t)

    e = np.array(pmap(energy, list(times), threads))
    t = np.asarray(times, dtype=float)
    if ray.tc.eps == 0:
        coef = np.polyfit(t, e, 1)
        resid = float(np.max(np.abs(np.polyval(coef, t) - e)))
        scale = max(1.0, float(np.max(np.abs(e))))
        out.append(CheckResult(S, f"{name}: MA energy affine along the PL ray", resid / scale, 0.0,
                               sc.tol("affine_rel"), "abs", "P3"))
    else:
        d2 = np.diff(np.diff(e) / np.diff(t))
        scale = max(1.0, float(np.max(np.abs(e))))
        out.append(CheckResult(S, f"{name}: second divided differences of the MA energy", float(np.min(d2)) / scale,
                               -1e-6, 0.0, "min", "P4"))
    return out


def _slopes(threads: int, resolution: int | None = None) -> list[CheckResult]:
    out = []
    for sc in shipped_scenarios().values():
        if sc.has_test_config and sc.times is not None:
            out.extend(scenario_checks(sc, threads, resolution))
    return out


_RUNNERS: dict[str, Callable[..., list[CheckResult]]] = {
    "conventions": _conventions,
    "pairings": _pairings,
    "bundles": _bundles,
    "alpha_k": _alpha_k,
    "slopes": _slopes,
}


def run_suite(name: str, threads: int = 0, resolution: int | None = None) -> list[CheckResult]:
    """Run one suite; ``resolution`` overrides the grid size of shipped scenarios."""
    if name not in _RUNNERS:
        raise KeyError(f"unknown suite {name!r}; valid suites: {', '.join(SUITES)}")
    if name == "slopes":
        return _slopes(threads, resolution)
    return _RUNNERS[name](threads)


def run_suites(names, threads: int = 0, resolution: int | None = None) -> list[CheckResult]:
    out = []
    for nm in names:
        out.extend(run_suite(nm, threads, resolution))
    return out
