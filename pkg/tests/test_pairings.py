import itertools
import math

import numpy as np
import pytest

from toricslope.analytic import Constant, GaussianBump
from toricslope.geometry import InvariantPotential, random_potential
from toricslope.pairings import (
    FunctionRay,
    SlotSpec,
    _shifted,
    ddc_slope_check,
    deligne_pairing,
    entropy,
    j_functional,
    ma_energy,
    mabuchi,
)


@pytest.mark.parametrize("which", ["p1", "p1p1"])
def test_pairing_permutation_symmetry(which, request, rng):
    ks = request.getfixturevalue(which)
    n = ks.n
    phis = [random_potential(ks, rng) for _ in range(n + 1)]
    thetas = [_shifted(ks.omega0, random_potential(ks, rng)) for _ in range(n + 1)]
    vals = [deligne_pairing([phis[i] for i in p], [thetas[i] for i in p])
            for p in itertools.permutations(range(n + 1))]
    assert max(vals) - min(vals) <= 1e-10 * max(abs(v) for v in vals)


def test_pairing_vanishes_with_zero_potentials(p1p1):
    z = InvariantPotential.zero(p1p1.grid)
    assert deligne_pairing([z] * 3, [p1p1.omega0] * 3) == 0.0


def test_energy_of_constant(p1, p1p1):
    # E(c) = c * int omega^n = c * n! * V
    for ks in (p1, p1p1):
        c = InvariantPotential.constant(ks.grid, 0.7)
        assert ma_energy(c, ks) == pytest.approx(0.7 * math.factorial(ks.n) * ks.volume(), rel=1e-12)
        assert j_functional(c, ks) == pytest.approx(0.0, abs=1e-12)


def test_j_functional_nonnegative(p1p1, rng):
    for _ in range(3):
        assert j_functional(random_potential(p1p1, rng), p1p1) >= -1e-12


def test_mabuchi_translation_invariant(p1p1, rng):
    phi = random_potential(p1p1, rng)
    c = InvariantPotential.constant(p1p1.grid, 1.3)
    # the shift cancels between terms of size c * int omega^n; compare on that scale
    scale = 1.3 * 2 * p1p1.volume()
    assert abs(mabuchi(phi + c, p1p1).total - mabuchi(phi, p1p1).total) <= 1e-9 * scale


def test_mabuchi_and_entropy_of_zero(p1, p1p1):
    for ks in (p1, p1p1):
        z = InvariantPotential.zero(ks.grid)
        assert mabuchi(z, ks).total == 0.0
        assert entropy(z, ks) == 0.0


def test_entropy_nonnegative(p1p1, rng):
    assert entropy(random_potential(p1p1, rng), p1p1) >= -1e-12


def test_ddc_slope_check_on_quadratic_ray(p1):
    # phi_t = t b + t^2 c with compactly decaying b, c
    b = GaussianBump(np.array([0.3]), 0.8, 0.05)
    c = GaussianBump(np.array([-0.2]), 1.0, 0.02)
    ray = FunctionRay(p1.grid, None, b, c)
    slots = [SlotSpec(p1.omega0, ray), SlotSpec(p1.omega0, ray)]
    r = ddc_slope_check(slots, 0.5, 1.5)
    assert r.discrepancy <= 1e-6 * max(1.0, abs(r.rhs))
    assert abs(r.rhs) > 1e-4


def test_ddc_constant_shift_ray_is_affine(p1):
    ray = FunctionRay(p1.grid, None, Constant(1, 1.0), None)
    r = ddc_slope_check([SlotSpec(p1.omega0, ray)] * 2, 0.0, 1.0)
    assert abs(r.lhs) < 1e-8 and abs(r.rhs) < 1e-12
