"""Command-line front end: ``toricslope eval | slope | verify``.

Exit codes: 0 success, 1 verification failure, 2 usage or scenario error.
Reports are JSON with sorted keys; time series are CSV (header row, UTF-8,
LF line endings). Every report embeds the ledger constants and the git
blob hash of the scenario document, and nothing that varies between runs.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Callable, Sequence

from . import __version__
from .alpha_k import (
    PairState,
    alpha_k_energy_closed,
    alpha_k_energy_path,
    broken_path,
    q1_prime,
    q2_prime,
    straight_path,
)
from .bundles import constant_z, degree, donaldson_functional, m_prime, m_prime_direct
from .conventions import LEDGER
from .geometry import InvariantPotential, KahlerStructure, integrate_top
from .kernels import BACKEND
from .pairings import _shifted, entropy_details, j_functional, ma_energy, mabuchi
from .parallel import set_default_threads
from .scenario import Scenario, ScenarioError, load_scenario, scenario_summary
from .testconfig import (
    SlopeReport,
    bundle_correction_terms,
    df_invariant,
    exact_degree_value,
    make_ray,
    ray_values,
    theorem_check,
)
from .verify import SUITES, CheckResult, run_suites, scenario_checks

__all__ = ["main", "FUNCTIONALS", "CSV_COLUMNS"]

CSV_COLUMNS = ("t", "M_I", "Mabuchi", "Q1'", "Q2'", "M'", "quotient")


class UsageError(Exception):
    """Bad command-line input; exit code 2."""


# report plumbing ----------------------------------------------------------------------


def _clean(x):
    """JSON-ready copy: floats stay floats, tuples become lists, non-finite become strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, int):
        return x
    try:
        v = float(x)
    except (TypeError, ValueError):
        return str(x)
    return v if math.isfinite(v) else repr(v)


def dumps_report(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _header(command: str, sc: Scenario | None, ks: KahlerStructure | None = None) -> dict:
    out = {
        "command": command,
        "version": __version__,
        "backend": BACKEND,
        "ledger": LEDGER.report(),
    }
    if sc is not None:
        out["scenario"] = scenario_summary(sc)
        if len(sc.data.get("bundle", {}).get("summands", ())) > 1:
            # split bundles are reducible; z is still taken as the scalar 2 n pi mu / vol
            out["bundle_convention"] = "z-scalar convention"
    if ks is not None:
        out["grid"] = ks.grid.describe()
        out["manifold"] = ks.name
    return out


def _write(out_dir: str | None, name: str, text: str) -> str | None:
    if out_dir is None:
        return None
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _slope_dict(r: SlopeReport) -> dict:
    return {
        "t": r.t,
        "values": r.values,
        "quotients": r.quotients,
        "last": r.last,
        "richardson": r.richardson,
        "slope": r.slope,
        "cauchy": r.cauchy,
        "oracle": r.oracle,
        "abs_gap": r.abs_gap,
        "rel_gap": r.rel_gap,
    }


# eval ----------------------------------------------------------------------------------


def _ev_volume(sc, ks, res):
    phi = sc.potential(ks)
    om = _shifted(ks.omega0, phi)
    val = integrate_top(1.0, *([om] * ks.n))
    exact = ks.exact_volume()
    return val, {"exact": exact}, {"abs_error": abs(val - exact)}


def _ev_ma_energy(sc, ks, res):
    return ma_energy(sc.potential(ks), ks), {}, {}


def _ev_j(sc, ks, res):
    return j_functional(sc.potential(ks), ks), {}, {}


def _ev_entropy(sc, ks, res):
    e = entropy_details(sc.potential(ks), ks)
    return e.value, {}, {"degenerate": e.degenerate, "min_density_ratio": e.min_ratio}


def _ev_mabuchi(sc, ks, res):
    m = mabuchi(sc.potential(ks), ks)
    terms = {"energy": m.energy, "ricci": m.ricci, "entropy": m.entropy, "sbar": m.sbar}
    return m.total, terms, {"degenerate": m.degenerate}


def _ev_donaldson(sc, ks, res):
    H1, H0 = sc.metric(ks), sc.reference_metric(ks)
    nodes = sc.s_nodes
    v = donaldson_functional(H1, H0, ks, nodes=nodes)
    coarse = donaldson_functional(H1, H0, ks, nodes=max(1, nodes // 2))
    return v, {}, {"s_nodes": nodes, "halved_nodes_change": abs(v - coarse)}


def _ev_m_prime(sc, ks, res):
    H1, H0 = sc.metric(ks), sc.reference_metric(ks)
    v = m_prime(H1, H0, ks, nodes=sc.s_nodes)
    d = m_prime_direct(H1, H0, ks)
    return v, {"direct": d}, {"rel_gap": abs(v - d) / abs(v) if v else abs(d)}


def _ev_q(which):
    def run(sc, ks, res):
        fn = q1_prime if which == 1 else q2_prime
        phi, H0 = sc.potential(ks), sc.reference_metric(ks)
        a = fn(phi, H0, ks, "pairing")
        b = fn(phi, H0, ks, "direct")
        return a, {"pairing": a, "direct": b}, {"abs_gap": abs(a - b)}

    return run


def _ev_alpha_k(sc, ks, res):
    zero = InvariantPotential.zero(ks.grid)
    b0 = PairState(zero, sc.reference_metric(ks))
    b1 = PairState(sc.potential(ks), sc.metric(ks))
    alpha = sc.alpha
    closed = alpha_k_energy_closed(b1, b0, ks, alpha, nodes=sc.s_nodes)
    straight = alpha_k_energy_path(straight_path(b1, b0, sc.s_nodes), ks, alpha, refine=True)
    broken = alpha_k_energy_path(broken_path(b1, b0, sc.s_nodes), ks, alpha)
    gap = abs(closed.value - straight.value)
    terms = {
        "closed": closed.value,
        "path_straight": straight.value,
        "path_broken": broken.value,
        "gap": gap,
        "rel_gap": gap / abs(closed.value) if closed.value else gap,
        "closed_terms": {"mabuchi": closed.mabuchi, "q1": closed.q1, "q2": closed.q2, "m": closed.m},
        "path_components": straight.components,
    }
    diag = {"s_nodes": sc.s_nodes, "halved_nodes_change": straight.refinement,
            "z": constant_z(b0.H.bundle, ks), "alpha": alpha}
    return closed.value, terms, diag


def _ev_df(sc, ks, res):
    tc = sc.test_config(ks)
    df = df_invariant(tc)
    kappa = LEDGER.mabuchi_kappa * math.pi**ks.n
    return float(df), {"exact": str(df), "mabuchi_slope": kappa * float(df)}, {}


def _ev_corrections(sc, ks, res):
    tc = sc.test_config(ks)
    E = sc.bundle(ks)
    c = bundle_correction_terms(tc, E, ks)
    terms = {"c1_term": c.c1_term, "ch2_term": c.ch2_term, "c1_reduced": str(c.c1_reduced),
             "ch2_reduced": str(c.ch2_reduced)}
    return c.c1_term, terms, {"exact_degree": exact_degree_value(E, ks.polytope),
                              "numeric_degree": degree(E, ks)}


#: Functional name to evaluator ``(scenario, ks, resolution) -> (value, terms, diagnostics)``.
FUNCTIONALS: dict[str, Callable] = {
    "alpha_k": _ev_alpha_k,
    "corrections": _ev_corrections,
    "df": _ev_df,
    "donaldson": _ev_donaldson,
    "entropy": _ev_entropy,
    "j_functional": _ev_j,
    "m_prime": _ev_m_prime,
    "ma_energy": _ev_ma_energy,
    "mabuchi": _ev_mabuchi,
    "q1_prime": _ev_q(1),
    "q2_prime": _ev_q(2),
    "volume": _ev_volume,
}


def cmd_eval(sc: Scenario, functional: str, out_dir: str | None, resolution: int | None) -> tuple[int, str]:
    if functional not in FUNCTIONALS:
        raise UsageError(f"unknown functional {functional!r}; valid names: {', '.join(sorted(FUNCTIONALS))}")
    ks = sc.manifold(resolution)
    value, terms, diag = FUNCTIONALS[functional](sc, ks, resolution)
    report = _header("eval", sc, ks)
    report.update({"functional": functional, "value": value, "terms": terms, "diagnostics": diag})
    text = dumps_report(report)
    _write(out_dir, f"{sc.name}_eval_{functional}.json", text)
    return 0, f"{functional} = {float(value):.12g}\n"


# slope ---------------------------------------------------------------------------------


def slope_table(sc: Scenario, resolution: int | None = None, threads: int = 0):
    """Rows of the slope CSV and the :class:`TheoremCheck`."""
    ks = sc.manifold(resolution)
    tc = sc.test_config(ks)
    times = sc.slope_times()
    E = sc.bundle(ks)
    ray = make_ray(tc, ks, times)
    vals = ray_values(ray, E, times, threads)
    chk = theorem_check(tc, E, ks, sc.alpha, times, LEDGER, threads, vals)
    a0, a1 = sc.alpha
    z = chk.z
    rows = []
    for t, (mab, q1, q2z) in zip(times, vals):
        q2 = z * q2z
        mp = 0.0
        mi = a0 * mab + a1 * (LEDGER.q1_coupling * q1 + LEDGER.z_coupling * q2 + LEDGER.m_coupling * mp)
        rows.append((t, mi, mab, q1, q2, mp, mi / t))
    return ks, ray, chk, rows


def _csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([repr(float(x)) for x in r])
    return buf.getvalue()


def cmd_slope(sc: Scenario, out_dir: str | None, resolution: int | None, threads: int) -> tuple[int, str]:
    ks, ray, chk, rows = slope_table(sc, resolution, threads)
    report = _header("slope", sc, ks)
    c = chk.corrections
    report.update({
        "ray": ray.label,
        "eps": ray.tc.eps,
        "alpha": chk.alpha,
        "lhs": _slope_dict(chk.lhs),
        "rhs": chk.rhs,
        "gap": chk.rel_gap,
        "abs_gap": chk.abs_gap,
        "terms": {t.name: {"lhs": _slope_dict(t.lhs), "rhs": t.rhs, "gap": t.gap} for t in chk.terms},
        "oracle": {
            "df": str(chk.df) if ray.tc.eps == 0 else chk.df,
            "c1_term": c.c1_term,
            "ch2_term": c.ch2_term,
            "exact": c.exact,
            "mu": chk.mu,
            "vol": chk.vol,
        },
        "z": chk.z,
        "csv_columns": CSV_COLUMNS,
    })
    _write(out_dir, f"{sc.name}_slope.json", dumps_report(report))
    csv_text = _csv_text(rows)
    _write(out_dir, f"{sc.name}_slope.csv", csv_text)
    msg = (f"{sc.name}: slope {chk.lhs.slope:.10g} (last quotient {chk.lhs.last:.10g}), "
           f"rhs {chk.rhs:.10g}, relative gap {chk.rel_gap:.3e}\n")
    return 0, (csv_text if out_dir is None else "") + msg


# verify --------------------------------------------------------------------------------


def format_table(results: Sequence[CheckResult]) -> str:
    lines = []
    w = max([len(r.name) for r in results] + [5])
    lines.append(f"{'status':6}  {'id':4}  {'suite':11}  {'check':{w}}  {'value':>14}  {'reference':>14}")
    for r in results:
        st = "PASS" if r.passed else "FAIL"
        lines.append(f"{st:6}  {r.criterion:4}  {r.suite:11}  {r.name:{w}}  {r.value:14.6e}  {r.reference:14.6e}")
    npass = sum(r.passed for r in results)
    lines.append(f"{npass}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"


def cmd_verify(suite: str, sc: Scenario | None, out_dir: str | None, resolution: int | None,
               threads: int) -> tuple[int, str]:
    if suite != "all" and suite not in SUITES:
        raise UsageError(f"unknown suite {suite!r}; valid suites: {', '.join(SUITES)}, all")
    if sc is not None:
        if suite != "slopes":
            raise UsageError("--scenario with verify needs --suite slopes")
        results = scenario_checks(sc, threads, resolution)
    else:
        results = run_suites(SUITES if suite == "all" else (suite,), threads, resolution)
    report = _header("verify", sc)
    report.update({
        "suite": suite,
        "passed": all(r.passed for r in results),
        "checks": [r.as_dict() for r in results],
    })
    _write(out_dir, f"verify_{suite}.json", dumps_report(report))
    code = 0 if report["passed"] else 1
    return code, format_table(results)


# entry point ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="toricslope", description="Energy functionals and slopes on toric test configurations.")
    p.add_argument("--version", action="version", version=f"toricslope {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, scenario_required: bool):
        sp.add_argument("--scenario", required=scenario_required, help="scenario JSON document")
        sp.add_argument("--out", help="directory for reports")
        sp.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
        sp.add_argument("--resolution-override", type=int, dest="resolution", metavar="N",
                        help="grid points per axis, replacing the scenario value")

    e = sub.add_parser("eval", help="evaluate one functional")
    e.add_argument("functional", help="one of: " + ", ".join(sorted(FUNCTIONALS)))
    common(e, True)
    s = sub.add_parser("slope", help="slope experiment along the scenario's test configuration")
    common(s, True)
    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("--suite", default="all", help="one of: " + ", ".join(SUITES) + ", all")
    common(v, False)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.threads < 1:
            raise UsageError("--threads must be positive")
        if args.resolution is not None and args.resolution < 33:
            raise UsageError("--resolution-override must be at least 33")
        set_default_threads(args.threads)
        sc = load_scenario(args.scenario) if args.scenario else None
        if args.command == "eval":
            code, text = cmd_eval(sc, args.functional, args.out, args.resolution)
        elif args.command == "slope":
            code, text = cmd_slope(sc, args.out, args.resolution, args.threads)
        else:
            code, text = cmd_verify(args.suite, sc, args.out, args.resolution, args.threads)
    except (UsageError, ScenarioError) as exc:
        sys.stderr.write(f"toricslope: error: {exc}\n")
        return 2
    except ValueError as exc:  # inputs the modules reject
        sys.stderr.write(f"toricslope: error: {exc}\n")
        return 2
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
