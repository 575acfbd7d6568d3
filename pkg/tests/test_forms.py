import math

import numpy as np
import pytest

from toricslope.forms import mean_scalar_curvature, ricci_form, scalar_curvature, total_mass


def test_fs_scalar_curvature_constant(p1, p1p1):
    # Fubini-Study on P^1 and the product are Kahler-Einstein: S = 2n
    for ks in (p1, p1p1):
        S = scalar_curvature(ks)
        assert np.allclose(S, 2 * ks.n, atol=1e-8)
        assert mean_scalar_curvature(ks) == pytest.approx(2 * ks.n, rel=1e-8)


def test_ricci_form_is_two_omega_on_p1(p1):
    # Ric(omega_FS) = 2 omega_FS for the scale-1 potential log(1 + e^{2x})
    assert np.allclose(ricci_form(p1).hessian, 2 * p1.omega0.hessian, atol=1e-8)


def test_total_mass_of_omega(p1):
    assert total_mass(p1.omega0) == pytest.approx(2 * math.pi, abs=1e-6)
