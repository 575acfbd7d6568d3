import dataclasses
import math

import numpy as np
import pytest

from toricslope.alpha_k import (
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
from toricslope.bundles import BundleMetric, MatrixPotential, line_bundle, split_bundle, trivial_bundle
from toricslope.conventions import LEDGER
from toricslope.geometry import InvariantPotential, random_potential
from toricslope.pairings import mabuchi


def _states(ks, E, seed=3):
    rng = np.random.default_rng(seed)
    zero = InvariantPotential.zero(ks.grid)
    H0 = BundleMetric.reference(E, ks.grid)
    H1 = BundleMetric(E, ks.grid, MatrixPotential.random(rng, ks.n, E.rank, amplitude=0.4))
    Hv = BundleMetric(E, ks.grid, MatrixPotential.random(rng, ks.n, E.rank, amplitude=0.4))
    return (PairState(zero, H0), PairState(random_potential(ks, rng), H1),
            PairState(random_potential(ks, rng), Hv))


def _paths(b0, b1, via, nodes=12):
    return [straight_path(b1, b0, nodes), broken_path(b1, b0, nodes), detour_path(b1, b0, via, nodes)]


@pytest.mark.parametrize("method", ["pairing", "direct"])
def test_q_primes_vanish_at_base(p1p1, method):
    E = split_bundle(p1p1, (1, 0), (0, 1))
    H = BundleMetric.reference(E, p1p1.grid)
    z = InvariantPotential.zero(p1p1.grid)
    assert q1_prime(z, H, p1p1, method) == 0.0
    assert q2_prime(z, H, p1p1, method) == 0.0


def test_q_prime_methods_agree(p1, p1p1, rng):
    for ks, E in ((p1, line_bundle(p1, 1)), (p1p1, split_bundle(p1p1, (1, 0), (0, 1)))):
        H = BundleMetric(E, ks.grid, MatrixPotential.random(rng, ks.n, E.rank))
        phi = random_potential(ks, rng)
        assert q2_prime(phi, H, ks, "pairing") == pytest.approx(q2_prime(phi, H, ks, "direct"), rel=1e-10)
        if ks.n == 2:
            assert q1_prime(phi, H, ks, "pairing") == pytest.approx(q1_prime(phi, H, ks, "direct"), rel=1e-10)


def test_q1_zero_on_curves(p1, rng):
    H = BundleMetric.reference(line_bundle(p1, 1), p1.grid)
    assert q1_prime(random_potential(p1, rng), H, p1) == 0.0


def test_path_independent_when_slope_vanishes(p1p1_small):
    E = split_bundle(p1p1_small, (1, 0), (-1, 0))
    b0, b1, via = _states(p1p1_small, E)
    r = path_independence_report(_paths(b0, b1, via), p1p1_small, (1.0, 1.0))
    assert r.relative_deviation < 1e-5
    assert r.closed == pytest.approx(r.values[0], rel=1e-5)
    # Q1 alone is not path independent: the witness that the coupling matters
    assert r.q1_spread > 1e-4 * max(abs(v) for v in r.values)


def test_path_independent_with_z_coupling_two(p1p1_small):
    E = split_bundle(p1p1_small, (1, 0), (0, 1))
    b0, b1, via = _states(p1p1_small, E)
    led = dataclasses.replace(LEDGER, z_coupling=2.0)
    r = path_independence_report(_paths(b0, b1, via), p1p1_small, (1.0, 1.0), led)
    assert r.relative_deviation < 1e-5


def test_shipped_z_coupling_path_dependent_for_nonzero_slope(p1p1_small):
    # with z_coupling = 4 the H-leg and phi-leg integrands are not a closed
    # form once mu(E) != 0; this records the size of the effect
    E = split_bundle(p1p1_small, (1, 0), (0, 1))
    b0, b1, via = _states(p1p1_small, E)
    r = path_independence_report(_paths(b0, b1, via), p1p1_small, (1.0, 1.0))
    assert r.relative_deviation > 1e-4


def test_trivial_bundle_reduces_to_mabuchi(p1p1, rng):
    T = trivial_bundle(p1p1)
    H = BundleMetric.reference(T, p1p1.grid)
    phi = random_potential(p1p1, rng)
    b0 = PairState(InvariantPotential.zero(p1p1.grid), H)
    b1 = PairState(phi, H)
    m = mabuchi(phi, p1p1)
    mab = m.total / math.factorial(2)
    # the three Mabuchi terms nearly cancel; the box tail is measured against their size
    scale = (abs(m.energy) + abs(m.ricci) + abs(m.entropy)) / math.factorial(2)
    for alpha in ((1.0, 0.0), (1.0, 3.0), (2.0, -1.0)):
        path = alpha_k_energy_path(straight_path(b1, b0, 24), p1p1, alpha).value
        closed = alpha_k_energy_closed(b1, b0, p1p1, alpha).value
        assert abs(path - alpha[0] * mab) <= 1e-6 * abs(alpha[0]) * scale
        assert closed == pytest.approx(alpha[0] * mab, rel=1e-12)


def test_closed_form_cocycle(p1p1_small):
    E = split_bundle(p1p1_small, (1, 0), (-1, 0))
    b0, b1, b2 = _states(p1p1_small, E)
    a = (1.0, 1.0)
    m10 = alpha_k_energy_closed(b1, b0, p1p1_small, a).value
    m21 = alpha_k_energy_path(straight_path(b2, b1, 16), p1p1_small, a).value
    m20 = alpha_k_energy_closed(b2, b0, p1p1_small, a).value
    assert m10 + m21 == pytest.approx(m20, rel=1e-5)


def test_path_validation(p1p1_small):
    E = split_bundle(p1p1_small, (1, 0), (0, 1))
    b0, b1, via = _states(p1p1_small, E)
    with pytest.raises(ValueError):
        path_independence_report([straight_path(b1, b0), straight_path(via, b0)], p1p1_small, (1, 1))
    with pytest.raises(ValueError):
        path_independence_report([], p1p1_small, (1, 1))
