"""Scenario documents: parsing, validation and construction of module inputs.

A scenario is one JSON document (see ``schema/scenario.schema.json``). It
names a manifold, a grid, an optional bundle with a random metric, an
optional random potential, a toric test configuration and the slope
experiment settings.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

import jsonschema
import numpy as np

from .bundles import BundleMetric, MatrixPotential, ToricBundle, split_bundle, trivial_bundle
from .geometry import InvariantPotential, KahlerStructure, make_product, make_projective_space, random_potential
from .testconfig import PLFunction, ToricTestConfig

__all__ = [
    "ScenarioError",
    "Scenario",
    "load_schema",
    "parse_scenario",
    "load_scenario",
    "shipped_scenarios",
    "content_hash",
    "scenario_summary",
    "DEFAULT_TOLERANCES",
]

#: Tolerances used when a scenario does not override them.
DEFAULT_TOLERANCES = {
    "slope_rel": 0.02,
    "path_rel": 1e-5,
    "ddc_rel": 1e-4,
    "min_eig": 1e-8,
    "affine_rel": 1e-4,
}


class ScenarioError(ValueError):
    """Invalid scenario; the message carries the line or field location."""


def load_schema() -> dict:
    text = resources.files(__package__).joinpath("schema/scenario.schema.json").read_text("utf-8")
    return json.loads(text)


def content_hash(data: bytes) -> str:
    """Git blob hash (``git hash-object``) of ``data``."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def _field_path(path) -> str:
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def _line_of(text: str, path) -> int | None:
    """Best-effort line of the last key in ``path``."""
    keys = [p for p in path if isinstance(p, str)]
    if not keys:
        return None
    needle = json.dumps(keys[-1]) + ":"
    pos = text.find(needle)
    if pos < 0:
        needle = json.dumps(keys[-1])
        pos = text.find(needle)
    return None if pos < 0 else text.count("\n", 0, pos) + 1


@dataclass(frozen=True)
class Scenario:
    """Validated scenario document plus its content hash."""

    data: dict
    hash: str
    source: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def name(self) -> str:
        return self.data["name"]

    @property
    def alpha(self) -> tuple[float, float]:
        a = self.data.get("alpha", [1.0, 1.0])
        return float(a[0]), float(a[1])

    @property
    def times(self) -> tuple[float, ...] | None:
        t = self.data.get("times")
        return None if t is None else tuple(float(x) for x in t)

    @property
    def s_nodes(self) -> int:
        return int(self.data.get("quadrature", {}).get("s_nodes", 32))

    @property
    def ddc_nodes(self) -> int:
        return int(self.data.get("quadrature", {}).get("ddc_nodes", 8))

    def tol(self, name: str) -> float:
        return float(self.data.get("tolerances", {}).get(name, DEFAULT_TOLERANCES[name]))

    @property
    def has_test_config(self) -> bool:
        return "test_config" in self.data

    def manifold(self, resolution: int | None = None) -> KahlerStructure:
        """Kahler structure on the scenario grid; ``resolution`` overrides ``N``."""
        key = ("ks", resolution)
        if key not in self._cache:
            m = self.data["manifold"]
            g = self.data.get("grid", {})
            L = g.get("L")
            N = resolution if resolution is not None else g.get("N")
            if m["type"] == "projective_space":
                ks = make_projective_space(int(m["n"]), float(m.get("scale", 1.0)), L, N)
            else:
                a, b = (make_projective_space(1, float(f.get("scale", 1.0)), L, N) for f in m["factors"])
                ks = make_product(a, b)
            self._cache[key] = ks
        return self._cache[key]

    def bundle(self, ks: KahlerStructure) -> ToricBundle:
        spec = self.data.get("bundle")
        if spec is None:
            return trivial_bundle(ks)
        try:
            return split_bundle(ks, *[tuple(s) for s in spec["summands"]])
        except ValueError as exc:
            raise ScenarioError(f"field bundle.summands: {exc}") from exc

    def reference_metric(self, ks: KahlerStructure) -> BundleMetric:
        return BundleMetric.reference(self.bundle(ks), ks.grid)

    def metric(self, ks: KahlerStructure) -> BundleMetric:
        """Random metric from ``bundle.seed`` (the reference metric without a seed)."""
        spec = self.data.get("bundle", {})
        E = self.bundle(ks)
        if "seed" not in spec:
            return BundleMetric.reference(E, ks.grid)
        rng = np.random.default_rng(int(spec["seed"]))
        A = MatrixPotential.random(rng, ks.n, E.rank, int(spec.get("count", 2)),
                                   float(spec.get("amplitude", 0.3)))
        return BundleMetric(E, ks.grid, A)

    def potential(self, ks: KahlerStructure) -> InvariantPotential:
        """Random potential from ``potential.seed`` (zero without it)."""
        spec = self.data.get("potential")
        if spec is None:
            return InvariantPotential.zero(ks.grid)
        rng = np.random.default_rng(int(spec["seed"]))
        return random_potential(ks, rng, int(spec.get("count", 3)), float(spec.get("margin", 0.5)))

    def test_config(self, ks: KahlerStructure) -> ToricTestConfig:
        spec = self.data.get("test_config")
        if spec is None:
            raise ScenarioError("field test_config: required for this command")
        try:
            f = PLFunction.from_json(spec["pieces"])
            return ToricTestConfig(ks.polytope, f, spec.get("normalization", "none"),
                                   float(spec.get("eps", 0.0)), self.name)
        except ValueError as exc:
            raise ScenarioError(f"field test_config: {exc}") from exc

    def slope_times(self) -> tuple[float, ...]:
        t = self.times
        if t is None:
            raise ScenarioError("field times: required for slope experiments")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ScenarioError("field times: must be strictly increasing")
        return t


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    """Parse and validate a scenario document.

    Raises
    ------
    ScenarioError
        With ``line:column`` for JSON syntax errors and the field path (and
        its line, when found) for schema violations.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        e = errors[0]
        loc = _field_path(e.absolute_path)
        line = _line_of(text, e.absolute_path)
        where = f"{source}:{line}" if line is not None else source
        raise ScenarioError(f"{where}: field {loc}: {e.message}")
    sc = Scenario(data, content_hash(text.encode("utf-8")), source)
    _check_consistency(sc)
    return sc


def _check_consistency(sc: Scenario) -> None:
    d = sc.data
    m = d["manifold"]
    n = 2 if m["type"] == "product" else int(m["n"])
    if "bundle" in d:
        nb = 2 if m["type"] == "product" else 1
        for i, s in enumerate(d["bundle"]["summands"]):
            if len(s) != nb:
                raise ScenarioError(f"field bundle.summands[{i}]: expected {nb} degree(s), got {len(s)}")
    if "test_config" in d:
        for i, (a, _) in enumerate(d["test_config"]["pieces"]):
            if len(a) != n:
                raise ScenarioError(f"field test_config.pieces[{i}]: slope has {len(a)} entries, need {n}")
    if sc.times is not None and any(b <= a for a, b in zip(sc.times, sc.times[1:])):
        raise ScenarioError("field times: must be strictly increasing")


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from exc
    return parse_scenario(text, path)


def shipped_scenarios() -> dict[str, Scenario]:
    """Scenarios bundled with the package, by name."""
    out = {}
    root = resources.files(__package__).joinpath("scenarios")
    for entry in sorted(root.iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".json"):
            sc = parse_scenario(entry.read_text("utf-8"), entry.name)
            out[sc.name] = sc
    return out


def scenario_summary(sc: Scenario) -> dict[str, Any]:
    """Inputs echo for reports."""
    return {"name": sc.name, "hash": sc.hash, "document": sc.data}

