import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from toricslope.bundles import line_bundle, trivial_bundle
from toricslope.conventions import LEDGER
from toricslope.geometry import make_projective_space
from toricslope.testconfig import (
    PLFunction,
    ToricTestConfig,
    bundle_correction_terms,
    df_invariant,
    make_ray,
    ray_ddc_check,
    slope_estimate,
    theorem_check,
)

TIMES = (2.0, 4.0, 6.0, 8.0, 10.0)


@pytest.fixture(scope="module")
def p1_fine():
    return make_projective_space(1, L=12, N=257)


def _tc(ks, pieces, **kw):
    return ToricTestConfig(ks.polytope, PLFunction.from_json(pieces), **kw)


# piecewise-linear data


def test_pl_json_roundtrip():
    f = PLFunction.from_json([[["1/2", 0], "-1/3"], [[0, 2], 1]])
    assert f.pieces[0] == ((Fraction(1, 2), Fraction(0)), Fraction(-1, 3))
    assert PLFunction.from_json(f.to_json()) == f
    assert f.exact((1, 1)) == 3


@pytest.mark.parametrize("bad", [[], [[[1], "1/0"]], [[[1, "x"], 0]], [[[1], 0], [[1, 2], 0]], [[[1, 2, 3], 0]]])
def test_pl_json_rejects(bad):
    with pytest.raises(ValueError):
        PLFunction.from_json(bad)


def test_pl_call_matches_exact():
    f = PLFunction.from_json([[[1, 0], 0], [[0, 1], 0], [[-1, -1], 2]])
    mu = np.array([[0.25, 0.5], [1.5, 0.1], [0.0, 0.0]])
    assert np.allclose(f(mu), [float(f.exact(m)) for m in mu])


@given(st.integers(-5, 5), st.integers(-5, 5), st.integers(-5, 5), st.integers(-5, 5))
def test_pl_integral_of_affine_on_segment(a, b, c, d):
    # max of two affine functions on [0, 2]: compare with a fine Riemann sum
    P = make_projective_space(1, L=4, N=33).polytope
    f = PLFunction((((a,), b), ((c,), d)))
    x = (np.arange(200000) + 0.5) * (2 / 200000)
    ref = float(np.sum(f(x[:, None]))) * (2 / 200000)
    assert float(f.integral(P)) == pytest.approx(ref, abs=1e-8)
    assert f.integral(P) == f.shifted(1).integral(P) - P.volume()


def test_config_validation(p1):
    with pytest.raises(ValueError):
        _tc(p1, [[[1], 0]], normalization="median")
    with pytest.raises(ValueError):
        _tc(p1, [[[1], 0]], eps=-1.0)
    with pytest.raises(ValueError):
        _tc(p1, [[[1, 0], 0]])


def test_normalizations(p1):
    P = p1.polytope
    assert _tc(p1, [[[1], 0]], normalization="max").g.max_on(P) == 0
    assert _tc(p1, [[[1], 0]], normalization="mean").g.integral(P) == 0
    assert _tc(p1, [[[1], 3]]).g.exact((0,)) == 3


# Donaldson-Futaki


@pytest.mark.parametrize("pieces,expected", [
    ([[[1], 0]], Fraction(0)),
    ([[[0], 0], [[1], -1]], Fraction(1, 2)),
    ([[[0], 7]], Fraction(0)),
])
def test_df_p1(p1, pieces, expected):
    for norm in ("none", "max", "mean"):
        assert df_invariant(_tc(p1, pieces, normalization=norm)) == expected


def test_df_product_linear_is_zero(p1p1_small):
    assert df_invariant(_tc(p1p1_small, [[[1, -2], 3]])) == 0


# rays


def test_ray_zero_and_constant(p1_fine):
    r = make_ray(_tc(p1_fine, [[[0], 0]]), p1_fine, TIMES)
    assert np.all(r.state(6.0)[1].values == 0)
    r = make_ray(_tc(p1_fine, [[[0], 2]]), p1_fine, TIMES)
    assert np.allclose(r.state(3.0)[1].values, -6.0)


def test_linear_ray_is_translation(p1_fine):
    # f = mu generates the C* flow: phi_t(x) = psi0(x - t) - psi0(x) on the adapted grid
    r = make_ray(_tc(p1_fine, [[[1], 0]]), p1_fine, TIMES)
    ks, phi = r.state(3.0)
    x = ks.grid.points
    ref = p1_fine.source.jet(x - 3.0, 0)[0] - p1_fine.source.jet(x, 0)[0]
    assert np.ptp(phi.values - ref) < 1e-3


def test_ray_is_subgeodesic(p1_fine):
    r = make_ray(_tc(p1_fine, [[[0], 0], [[1], -1]]), p1_fine, TIMES)
    for t in TIMES:
        assert r.min_eigenvalue(t) >= -1e-8


def test_make_ray_validation(p1, p1p1_small):
    with pytest.raises(ValueError, match="use eps > 0"):
        make_ray(_tc(p1p1_small, [[[1, 1], 0]]), p1p1_small)
    with pytest.raises(ValueError):
        make_ray(_tc(p1, [[[1], 0]]), p1p1_small)
    with pytest.raises(ValueError):
        make_ray(_tc(p1, [[[1], 0]]), p1, (3.0, 2.0))


def test_ray_ddc_check_exact(p1_fine):
    r = make_ray(_tc(p1_fine, [[[0], 0], [[1], -1]]), p1_fine, TIMES)
    rep = ray_ddc_check(r, [("omega", True), ("omega", True)], 2.0, 4.0)
    assert rep.passed(1e-4), rep
    rep = ray_ddc_check(r, [("ricci", False), ("omega", True)], 2.0, 4.0)
    assert rep.passed(1e-4), rep


def test_ray_ddc_check_validation(p1_fine):
    r = make_ray(_tc(p1_fine, [[[1], 0]]), p1_fine, TIMES)
    with pytest.raises(ValueError):
        ray_ddc_check(r, [("omega", True)], 2.0, 4.0)
    with pytest.raises(ValueError):
        ray_ddc_check(r, [("omega", True), ("omega", True)], 4.0, 2.0)


# correction terms


def test_trivial_bundle_corrections_vanish(p1, p1p1_small):
    for ks, pieces in ((p1, [[[1], 0]]), (p1p1_small, [[[1, 0], 0], [[0, 1], 0]])):
        c = bundle_correction_terms(_tc(ks, pieces), trivial_bundle(ks), ks)
        assert (c.c1_reduced, c.ch2_reduced) == (0, 0)


def test_line_bundle_corrections_exact(p1):
    c = bundle_correction_terms(_tc(p1, [[[0], 0], [[1], -1]]), line_bundle(p1, 1), p1)
    assert c.exact
    assert isinstance(c.c1_reduced, Fraction)


# slope estimation


def test_slope_of_affine():
    t = np.arange(2.0, 22.0, 2.0)
    r = slope_estimate(t, 3 * t + 5, oracle=3.0)
    assert r.slope == pytest.approx(3.0, abs=1e-12)
    assert r.rel_gap < 1e-12
    assert r.cauchy


def test_slope_with_log_correction():
    t = np.linspace(5.0, 50.0, 10)
    r = slope_estimate(t, 3 * t + np.log1p(t))
    assert r.slope == pytest.approx(3.0, abs=0.01)


def test_slope_of_constant():
    r = slope_estimate([1, 2, 3, 4], [5, 5, 5, 5], oracle=0.0)
    assert r.slope == 0.0 and r.rel_gap == 0.0


@pytest.mark.parametrize("t,v", [([1, 2, 3], [0, 0, 0]), ([1, 2, 2, 3], [0] * 4), ([1, 2, 3, 4], [0] * 3)])
def test_slope_validation(t, v):
    with pytest.raises(ValueError):
        slope_estimate(t, v)


# theorem check


def test_theorem_check_zero_function(p1_fine):
    res = theorem_check(_tc(p1_fine, [[[0], 0]]), line_bundle(p1_fine, 1), p1_fine, (1.0, 1.0), TIMES)
    assert res.rhs == 0.0
    assert res.abs_gap < 1e-10


def test_theorem_check_trivial_bundle_is_mabuchi_vs_df(p1_fine):
    tc = _tc(p1_fine, [[[0], 0], [[1], -1]])
    res = theorem_check(tc, trivial_bundle(p1_fine), p1_fine, (1.0, 0.0), TIMES)
    assert res.rhs == pytest.approx(LEDGER.mabuchi_kappa * math.pi * 0.5, rel=1e-15)
    assert float(res.df) == 0.5
    assert res.rel_gap < 0.02
    assert res.term("mabuchi").lhs.slope == pytest.approx(res.lhs.slope, rel=1e-12)
