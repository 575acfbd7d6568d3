import csv
import io
import json
import pathlib

import pytest

from toricslope.cli import CSV_COLUMNS, main

SCEN = pathlib.Path(__file__).resolve().parents[1] / "src" / "toricslope" / "scenarios"


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_eval_mabuchi_of_zero_potential(tmp_path, capsys):
    code, out, _ = _run(capsys, "eval", "mabuchi", "--scenario", SCEN / "p1_df.json", "--out", tmp_path)
    assert code == 0
    rep = json.loads((tmp_path / "p1_df_eval_mabuchi.json").read_text())
    assert rep["value"] == 0.0
    assert rep["scenario"]["hash"]
    assert "ledger" in rep


def test_eval_alpha_k_reports_paths(tmp_path, capsys):
    code, _, _ = _run(capsys, "eval", "alpha_k", "--scenario", SCEN / "p1p1_split.json", "--out", tmp_path)
    assert code == 0
    rep = json.loads((tmp_path / "p1p1_split_eval_alpha_k.json").read_text())
    d = rep["terms"]
    assert {"closed", "path_straight", "path_broken", "rel_gap"} <= set(d)
    assert rep["value"] == d["closed"]
    assert rep["bundle_convention"] == "z-scalar convention"
    assert d["gap"] == abs(d["closed"] - d["path_straight"])
    assert d["rel_gap"] == pytest.approx(d["gap"] / abs(d["closed"]))


def test_unknown_functional(capsys):
    code, _, err = _run(capsys, "eval", "nonsense", "--scenario", SCEN / "p1_df.json")
    assert code == 2
    assert "mabuchi" in err and "alpha_k" in err


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["eval"],
    ["slope", "--scenario", "/nonexistent.json"],
    ["verify", "--suite", "nope"],
    ["slope", "--scenario", str(SCEN / "p1_df.json"), "--threads", "0"],
    ["verify", "--suite", "conventions", "--scenario", str(SCEN / "p1_df.json")],
])
def test_usage_errors_exit_2(argv, capsys):
    assert _run(capsys, *argv)[0] == 2


def test_slope_missing_times(capsys):
    code, _, err = _run(capsys, "slope", "--scenario", SCEN / "p1p1_split.json")
    assert code == 2
    assert "test_config" in err or "times" in err


def test_slope_zero_function_is_all_zero(tmp_path, capsys):
    code, _, _ = _run(capsys, "slope", "--scenario", SCEN / "p1_trivial.json", "--out", tmp_path)
    assert code == 0
    text = (tmp_path / "p1_trivial_slope.csv").read_bytes()
    assert b"\r" not in text
    rows = list(csv.reader(io.StringIO(text.decode())))
    assert tuple(rows[0]) == CSV_COLUMNS == ("t", "M_I", "Mabuchi", "Q1'", "Q2'", "M'", "quotient")
    for r in rows[1:]:
        assert all(float(x) == 0.0 for x in r[1:])


def test_slope_df_gap(tmp_path, capsys):
    code, out, _ = _run(capsys, "slope", "--scenario", SCEN / "p1_df.json", "--out", tmp_path)
    assert code == 0
    rep = json.loads((tmp_path / "p1_df_slope.json").read_text())
    assert rep["gap"] < 0.02
    assert rep["oracle"]["df"] == "1/2"


def test_slope_csv_to_stdout(capsys):
    code, out, _ = _run(capsys, "slope", "--scenario", SCEN / "p1_product.json")
    assert code == 0
    assert out.startswith("t,M_I,")


def test_reports_byte_stable_across_threads(tmp_path, capsys):
    for th in (1, 3):
        d = tmp_path / f"t{th}"
        assert _run(capsys, "slope", "--scenario", SCEN / "p1_df.json", "--out", d, "--threads", th)[0] == 0
    for name in ("p1_df_slope.json", "p1_df_slope.csv"):
        assert (tmp_path / "t1" / name).read_bytes() == (tmp_path / "t3" / name).read_bytes()


def test_resolution_override_changes_grid(tmp_path, capsys):
    _run(capsys, "eval", "volume", "--scenario", SCEN / "p1_df.json", "--out", tmp_path, "--resolution-override", 65)
    rep = json.loads((tmp_path / "p1_df_eval_volume.json").read_text())
    assert "65" in json.dumps(rep["grid"])


def test_verify_conventions(tmp_path, capsys):
    code, out, _ = _run(capsys, "verify", "--suite", "conventions", "--out", tmp_path)
    assert code == 0
    assert "P1 volume = 2 pi" in out
    rep = json.loads((tmp_path / "verify_conventions.json").read_text())
    assert rep["passed"] and all(c["passed"] for c in rep["checks"])


def test_verify_pairings_lists_permutations(capsys):
    code, out, _ = _run(capsys, "verify", "--suite", "pairings")
    assert code == 0
    assert "permutation" in out


def test_verify_slopes(capsys):
    code, out, _ = _run(capsys, "verify", "--suite", "slopes")
    assert code == 0, out


def test_verify_scenario(capsys):
    code, out, _ = _run(capsys, "verify", "--suite", "slopes", "--scenario", SCEN / "p1_df.json")
    assert code == 0, out
