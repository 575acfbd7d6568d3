import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from toricslope import _fallback, kernels

compiled = pytest.importorskip("toricslope._kernels")

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@given(arrays(np.float64, st.integers(0, 300), elements=finite))
def test_pairwise_sum_backends_bitwise(a):
    assert compiled.pairwise_sum(a) == _fallback.pairwise_sum(a)


@given(arrays(np.float64, st.integers(1, 300), elements=finite))
def test_pairwise_sum_close_to_fsum(a):
    assert _fallback.pairwise_sum(a) == pytest.approx(math.fsum(a), rel=1e-12, abs=1e-6)


def test_fd_kernels_bitwise():
    f = np.random.default_rng(0).normal(size=(17, 40))
    for name in ("fd_d1_lastaxis", "fd_d2_lastaxis"):
        assert np.array_equal(getattr(compiled, name)(f, 0.1), getattr(_fallback, name)(f, 0.1))


def test_fd_d2_exact_on_quartic():
    x = np.linspace(-1, 1, 41)
    f = (x**4)[None, :]
    d2 = _fallback.fd_d2_lastaxis(f, x[1] - x[0])
    assert np.allclose(d2[0, 2:-2], 12 * x[2:-2] ** 2, atol=1e-10)


def test_mixed_det2_is_det_on_diagonal():
    a = np.random.default_rng(1).normal(size=(50, 2, 2))
    assert np.allclose(_fallback.mixed_det2(a, a), np.linalg.det(a))
    assert np.array_equal(compiled.mixed_det2(a, a), _fallback.mixed_det2(a, a))


def test_legendre_max_backends_agree():
    rng = np.random.default_rng(2)
    mu, x, p = rng.uniform(size=(30, 2)), rng.normal(size=(80, 2)), rng.normal(size=80)
    v1, a1 = compiled.legendre_max(mu, x, p)
    v2, a2 = _fallback.legendre_max(mu, x, p)
    assert np.array_equal(v1, v2) and np.array_equal(a1, a2)


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "python")
