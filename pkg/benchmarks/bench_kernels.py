"""Time the compiled kernels against the numpy fallback and check they agree.

Usage: ``python3 benchmarks/bench_kernels.py [--repeat R] [--json PATH] [--end-to-end]``.
``--end-to-end`` also times a shipped slope scenario under each backend
(``TORICSLOPE_PURE=1`` selects the fallback) and checks the reports match.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import tempfile
import time
import timeit
from importlib import resources

import numpy as np

from toricslope import _fallback

try:
    from toricslope import _kernels
except ImportError:
    _kernels = None


def cases(rng: np.random.Generator) -> dict:
    f = rng.normal(size=(257, 257))
    a = rng.normal(size=(257 * 257, 2, 2))
    b = rng.normal(size=(257 * 257, 2, 2))
    mu = rng.uniform(0, 2, size=(400, 2))
    x = rng.normal(size=(2000, 2))
    p = rng.normal(size=2000)
    return {
        "pairwise_sum (1e6)": ("pairwise_sum", (rng.normal(size=1_000_000),)),
        "fd_d2_lastaxis (257^2)": ("fd_d2_lastaxis", (f, 0.05)),
        "fd_d1_lastaxis (257^2)": ("fd_d1_lastaxis", (f, 0.05)),
        "mixed_det2 (257^2)": ("mixed_det2", (a, b)),
        "legendre_max (400 x 2000)": ("legendre_max", (mu, x, p)),
    }


def _max_diff(u, v) -> float:
    if isinstance(u, tuple):
        return max(_max_diff(a, b) for a, b in zip(u, v))
    return float(np.max(np.abs(np.asarray(u, dtype=float) - np.asarray(v, dtype=float))))


def run(repeat: int = 5, seed: int = 0) -> list[dict]:
    rng = np.random.default_rng(seed)
    rows = []
    for label, (name, args) in cases(rng).items():
        py = getattr(_fallback, name)
        t_py = min(timeit.repeat(lambda: py(*args), number=1, repeat=repeat))
        row = {"kernel": label, "python_s": t_py, "cython_s": None, "speedup": None, "max_abs_diff": None}
        if _kernels is not None:
            cy = getattr(_kernels, name)
            t_cy = min(timeit.repeat(lambda: cy(*args), number=1, repeat=repeat))
            row.update(cython_s=t_cy, speedup=t_py / t_cy, max_abs_diff=_max_diff(py(*args), cy(*args)))
        rows.append(row)
    return rows


def end_to_end(scenario: str = "p1p1_theorem.json") -> dict:
    path = str(resources.files("toricslope").joinpath("scenarios", scenario))
    out = {}
    texts = {}
    for backend, pure in (("cython", "0"), ("python", "1")):
        env = dict(os.environ, TORICSLOPE_PURE=pure)
        with tempfile.TemporaryDirectory() as d:
            t0 = time.perf_counter()
            subprocess.run([sys.executable, "-m", "toricslope.cli", "slope", "--scenario", path, "--out", d],
                           env=env, check=True, capture_output=True)
            out[backend] = time.perf_counter() - t0
            name = scenario.replace(".json", "_slope.csv")
            with open(os.path.join(d, name), encoding="utf-8") as fh:
                texts[backend] = fh.read()
    out["csv_identical"] = texts["cython"] == texts["python"]
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write the rows to this file")
    ap.add_argument("--end-to-end", action="store_true", help="time a slope scenario under both backends")
    args = ap.parse_args(argv)
    rows = run(args.repeat)
    if _kernels is None:
        print("compiled extension not built; timing the fallback only")
    print(f"{'kernel':28}  {'python [ms]':>12}  {'cython [ms]':>12}  {'speedup':>8}  {'max |diff|':>10}")
    for r in rows:
        cy = "-" if r["cython_s"] is None else f"{1e3 * r['cython_s']:12.3f}"
        sp = "-" if r["speedup"] is None else f"{r['speedup']:8.1f}"
        df = "-" if r["max_abs_diff"] is None else f"{r['max_abs_diff']:10.2e}"
        print(f"{r['kernel']:28}  {1e3 * r['python_s']:12.3f}  {cy:>12}  {sp:>8}  {df:>10}")
    if args.end_to_end:
        e = end_to_end()
        print(f"slope p1p1_theorem: cython {e['cython']:.2f} s, python {e['python']:.2f} s, "
              f"CSV identical: {e['csv_identical']}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
