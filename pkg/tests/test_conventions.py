import math

import pytest

from toricslope.conventions import LEDGER, POLYTOPE_FACTOR, Ledger, top_degree_constant


def test_top_degree_constant():
    assert top_degree_constant(1) == pytest.approx(math.pi)
    assert top_degree_constant(2) == pytest.approx(2 * math.pi**2)


def test_ledger_values_frozen():
    # frozen oracle values; a change here is a convention change
    L = LEDGER
    assert L.chern_factor == pytest.approx(1 / (2 * math.pi))
    assert L.ch2_factor == pytest.approx(1 / (8 * math.pi**2))
    assert (L.z_factor, L.z_coupling, L.q1_coupling, L.m_coupling) == (2.0, 4.0, -1.0, 4.0)
    assert (L.donaldson_half, L.mabuchi_kappa, L.ch2_rhs, L.c1_rhs) == (0.5, 2.0, -8.0, 16.0)
    assert POLYTOPE_FACTOR == 2


def test_flipped_changes_one_sign():
    f = LEDGER.flipped("c1_rhs")
    assert f.c1_rhs == -LEDGER.c1_rhs
    others = {k: v for k, v in f.as_dict().items() if k != "c1_rhs"}
    assert others == {k: v for k, v in LEDGER.as_dict().items() if k != "c1_rhs"}
    with pytest.raises(KeyError):
        LEDGER.flipped("nonexistent")


def test_report_contains_derived_constants():
    r = Ledger().report()
    assert r["polytope_factor"] == 2.0
    assert r["kappa_2"] == pytest.approx(2 * math.pi**2)
    assert set(LEDGER.as_dict()) <= set(r)
