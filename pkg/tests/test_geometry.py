import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from toricslope.geometry import (
    InvariantPotential,
    LogGrid,
    make_product,
    make_projective_space,
    make_quadratic_model,
    mixed_determinant,
    quadrature_sum,
    random_potential,
)


def test_p1_volume_is_2pi():
    assert make_projective_space(1, L=10, N=129).volume() == pytest.approx(2 * math.pi, abs=1e-6)


def test_p1p1_volume(p1p1):
    assert p1p1.volume() == pytest.approx(4 * math.pi**2, rel=1e-6)


def test_p2_volume_matches_polytope():
    ks = make_projective_space(2)
    assert ks.volume() == pytest.approx(ks.exact_volume(), rel=1e-5)


def test_scaled_p1_volume_scales():
    ks = make_projective_space(1, scale=1.5, L=10, N=129)
    assert ks.volume() == pytest.approx(3 * math.pi, rel=1e-6)


def test_quadratic_model_builds():
    ks = make_quadratic_model(2)
    assert ks.n == 2


def test_grid_validation():
    with pytest.raises(ValueError):
        make_projective_space(3)
    with pytest.raises(ValueError):
        make_projective_space(1, scale=-1.0)
    g = LogGrid.make(1, 5.0, 41)
    assert g.size == 41 and g.shape == (41,)


sym2 = st.tuples(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))


def _mat(t):
    a, b, c = t
    return np.array([[[a, b], [b, c]]])


@given(sym2, sym2, st.floats(-2, 2))
def test_mixed_determinant_symmetric_and_polarizes(a, b, s):
    A, B = _mat(a), _mat(b)
    ab = mixed_determinant(A, B)
    assert np.allclose(ab, mixed_determinant(B, A))
    assert np.allclose(mixed_determinant(A, A), np.linalg.det(A))
    # det(A + sB) = det A + 2 s MD(A, B) + s^2 det B
    lhs = np.linalg.det(A + s * B)
    rhs = np.linalg.det(A) + 2 * s * ab + s * s * np.linalg.det(B)
    assert np.allclose(lhs, rhs, atol=1e-9)


def test_quadrature_sum_integrates_gaussian():
    g = LogGrid.make(1, 10.0, 129)
    x = g.points[..., 0]
    assert quadrature_sum(g, np.exp(-x * x)) == pytest.approx(math.sqrt(math.pi), rel=1e-10)


def test_random_potential_keeps_positivity(p1p1, rng):
    phi = random_potential(p1p1, rng, margin=0.5)
    om = p1p1.omega0.hessian + phi.derivs[1]
    # omega_phi >= (1 - margin) omega: relative eigenvalues at least 1/2
    rel = np.linalg.eigvals(np.linalg.solve(p1p1.omega0.hessian, om)).real
    assert rel.min() >= 0.5 - 1e-9


def test_zero_potential(p1):
    z = InvariantPotential.zero(p1.grid)
    assert np.all(z.values == 0)


def test_product_dimension_guard():
    with pytest.raises(ValueError):
        make_product(make_projective_space(2), make_projective_space(1))
