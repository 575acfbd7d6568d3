import json
import pathlib
import shutil
import subprocess

import pytest

from toricslope.scenario import (
    ScenarioError,
    content_hash,
    load_scenario,
    load_schema,
    parse_scenario,
    shipped_scenarios,
)

ROOT = pathlib.Path(__file__).resolve().parents[1]
PKG_SCHEMA = ROOT / "src" / "toricslope" / "schema" / "scenario.schema.json"
DOC_SCHEMA = ROOT / "docs" / "schema" / "scenario.schema.json"

MINIMAL = {"name": "m", "manifold": {"type": "projective_space", "n": 1}}


def test_schema_copies_identical():
    assert PKG_SCHEMA.read_bytes() == DOC_SCHEMA.read_bytes()
    assert load_schema() == json.loads(DOC_SCHEMA.read_text())


def test_shipped_scenarios_validate():
    sc = shipped_scenarios()
    assert {"p1_df", "p1_trivial", "p1p1_theorem", "p1p1_split"} <= set(sc)
    for s in sc.values():
        ks = s.manifold()
        s.bundle(ks)
        s.potential(ks)


def test_minimal_defaults():
    sc = parse_scenario(json.dumps(MINIMAL))
    assert sc.alpha == (1.0, 1.0)
    assert sc.times is None and not sc.has_test_config
    with pytest.raises(ScenarioError, match="times"):
        sc.slope_times()
    with pytest.raises(ScenarioError, match="test_config"):
        sc.test_config(sc.manifold())


def test_syntax_error_reports_line():
    text = '{\n  "name": "x",\n  "manifold": {"type": "projective_space" "n": 1}\n}\n'
    with pytest.raises(ScenarioError, match=r"^doc\.json:3:\d+:"):
        parse_scenario(text, "doc.json")


@pytest.mark.parametrize("patch,field", [
    ({"grid": {"L": -1}}, "grid.L"),
    ({"grid": {"N": 8}}, "grid.N"),
    ({"manifold": {"type": "projective_space", "n": 4}}, "manifold.n"),
    ({"alpha": [1]}, "alpha"),
    ({"times": [1, 2, 3]}, "times"),
    ({"colour": "red"}, "<root>"),
    ({"test_config": {"pieces": [[[1], "a/b"]]}}, "test_config.pieces[0][1]"),
])
def test_field_errors_name_the_field(patch, field):
    doc = {**MINIMAL, **patch}
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(json.dumps(doc, indent=1), "doc.json")
    assert f"field {field}" in str(exc.value)


@pytest.mark.parametrize("patch,field", [
    ({"times": [1, 2, 4, 3]}, "times"),
    ({"bundle": {"summands": [[1, 0]]}}, "bundle.summands[0]"),
    ({"test_config": {"pieces": [[[1, 0], 0]]}}, "test_config.pieces[0]"),
])
def test_consistency_errors(patch, field):
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(json.dumps({**MINIMAL, **patch}))
    assert f"field {field}" in str(exc.value)


def test_missing_file():
    with pytest.raises(ScenarioError):
        load_scenario("/nonexistent/scenario.json")


def test_hash_is_git_blob_hash(tmp_path):
    data = b'{"name": "h"}\n'
    assert content_hash(b"") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"
    if shutil.which("git"):
        p = tmp_path / "s.json"
        p.write_bytes(data)
        out = subprocess.run(["git", "hash-object", str(p)], capture_output=True, text=True, check=True)
        assert content_hash(data) == out.stdout.strip()


def test_hash_tracks_content():
    a = parse_scenario(json.dumps(MINIMAL))
    b = parse_scenario(json.dumps({**MINIMAL, "name": "n"}))
    assert a.hash != b.hash
    assert a.hash == parse_scenario(json.dumps(MINIMAL)).hash
