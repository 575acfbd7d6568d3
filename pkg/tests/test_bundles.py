import math

import numpy as np
import pytest
from scipy.linalg import expm

from toricslope.analytic import Constant
from toricslope.bundles import (
    BundleMetric,
    MatrixPotential,
    constant_z,
    d2exp,
    degree,
    dexp,
    donaldson_functional,
    line_bundle,
    log_endo,
    m_prime,
    m_prime_direct,
    metric_from_endo,
    orthonormality_check,
    random_endo,
    split_bundle,
    trace_R,
    trace_RR,
    trivial_bundle,
)
from toricslope.geometry import make_product, make_projective_space


def _herm(rng, r=3):
    X = rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))
    return 0.5 * (X + X.conj().T)


def test_dexp_against_block_exponential(rng):
    A, B = _herm(rng), _herm(rng)
    Z = np.zeros((3, 3))
    ref = expm(np.block([[A, B], [Z, A]]))[:3, 3:]
    assert np.allclose(dexp(A, B), ref, atol=1e-12)


def test_d2exp_against_block_exponential(rng):
    A, B, C = _herm(rng), _herm(rng), _herm(rng)
    Z = np.zeros((3, 3))
    t1 = expm(np.block([[A, B, Z], [Z, A, C], [Z, Z, A]]))[:3, 6:]
    t2 = expm(np.block([[A, C, Z], [Z, A, B], [Z, Z, A]]))[:3, 6:]
    assert np.allclose(d2exp(A, B, C), t1 + t2, atol=1e-11)


def test_dexp_degenerate_spectrum(rng):
    A = np.diag([0.3, 0.3 + 1e-9, 0.3]).astype(complex)
    B = _herm(rng)
    Z = np.zeros((3, 3))
    assert np.allclose(dexp(A, B), expm(np.block([[A, B], [Z, A]]))[:3, 3:], atol=1e-9)


def test_degrees(p1, p1p1):
    # O(1) on P^1 has degree 1; O(1,1) on P^1 x P^1 has degree 4 pi against omega
    assert degree(line_bundle(p1, 1), p1) == pytest.approx(1.0, rel=1e-7)
    assert degree(split_bundle(p1p1, (1, 1)), p1p1) == pytest.approx(4 * math.pi, rel=1e-5)
    assert constant_z(line_bundle(p1, 1), p1) == pytest.approx(1.0, rel=1e-7)
    assert constant_z(split_bundle(p1p1, (1, 1)), p1p1) == pytest.approx(2.0, rel=1e-5)


def test_ch2_integrals(p1p1):
    # int tr(iR ^ iR) / (8 pi^2) = ch_2-type number a*b/... of O(a,b): 2ab/2 = ab
    for (a, b), expect in (((1, 1), 1.0), ((2, -1), -2.0), ((1, 0), 0.0)):
        E = split_bundle(p1p1, (a, b))
        val = trace_RR(BundleMetric.reference(E, p1p1.grid)).integrate() / (8 * math.pi**2)
        assert val == pytest.approx(expect, abs=1e-5)


def test_trivial_bundle_is_flat(p1p1):
    T = trivial_bundle(p1p1, 2)
    assert T.is_trivial and T.rank == 2
    assert np.all(trace_R(BundleMetric.reference(T, p1p1.grid)).hessian == 0)


def test_bundle_validation(p1p1):
    with pytest.raises(ValueError):
        split_bundle(p1p1, (1, 0, 0))
    with pytest.raises(ValueError):
        split_bundle(p1p1, (0.5, 1))


@pytest.fixture(scope="module")
def metrics():
    # the cocycle identity is at roundoff from N = 65 on; N = 33 under-resolves the bumps
    p = make_projective_space(1, L=8, N=65)
    ks = make_product(p, p)
    E = split_bundle(ks, (1, 0), (0, 1))
    rng = np.random.default_rng(3)
    Hs = [BundleMetric(E, ks.grid, MatrixPotential.random(rng, 2, 2)) for _ in range(3)]
    return ks, E, Hs


def test_donaldson_zero_on_diagonal(metrics):
    ks, E, (H0, _, _) = metrics
    assert abs(donaldson_functional(H0, H0, ks)) < 1e-15


def test_donaldson_cocycle(metrics):
    ks, E, (H0, H1, H2) = metrics
    d = donaldson_functional(H1, H0, ks) + donaldson_functional(H2, H1, ks) - donaldson_functional(H2, H0, ks)
    assert abs(d) < 1e-10


def test_donaldson_antisymmetric(metrics):
    ks, E, (H0, H1, _) = metrics
    assert donaldson_functional(H1, H0, ks) == pytest.approx(-donaldson_functional(H0, H1, ks), abs=1e-12)


def test_donaldson_affine_and_exp_paths_agree(metrics):
    ks, E, (H0, H1, _) = metrics
    a = donaldson_functional(H1, H0, ks, path="affine")
    b = donaldson_functional(H1, H0, ks, path="exp")
    # the exp path differentiates in x on the grid; its error at N = 65 is about 1e-3
    assert b == pytest.approx(a, rel=3e-3)


def test_donaldson_constant_rescaling_zero():
    p = make_projective_space(1, L=8, N=33)
    ks = make_product(p, p)
    E = split_bundle(ks, (1, 0), (0, 1))
    rng = np.random.default_rng(5)
    H = BundleMetric(E, ks.grid, MatrixPotential.random(rng, 2, 2, spread=1.0, width=(0.5, 0.9)))
    Hc = BundleMetric(E, ks.grid, H.A + MatrixPotential(2, 2, ((Constant(2, 0.7), np.eye(2)),)))
    assert abs(donaldson_functional(Hc, H, ks)) < 1e-8


def test_m_prime_is_half_donaldson(metrics):
    ks, E, (H0, H1, _) = metrics
    assert m_prime(H1, H0, ks) == pytest.approx(0.5 * donaldson_functional(H1, H0, ks), rel=1e-14)


@pytest.mark.slow
def test_m_prime_direct_quadrature(metrics):
    ks, E, (H0, H1, _) = metrics
    assert m_prime_direct(H1, H0, ks) == pytest.approx(m_prime(H1, H0, ks), rel=1e-6)


def test_endo_roundtrip(metrics, rng):
    ks, E, (H0, _, _) = metrics
    a = random_endo(rng, ks.grid, 2, 1.0)
    assert orthonormality_check(a, H0) < 1e-10
    H = metric_from_endo(a, H0)
    back = log_endo(H, H0)
    assert np.allclose(back.A, a.A, atol=1e-9)
