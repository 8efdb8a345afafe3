"""Command-line entry point: ``ddurobust {repro,solve,region,rfr,export}``.

Exit codes: 0 success, 1 expectation or audit failure, 2 usage or parse error.
Every numeric value written by a command carries 9 significant digits, and
``DDUROBUST_OUT`` overrides ``--out``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import apps, cases
from . import geometry as geo
from . import regions, solvers
from .model import (
    EmptyUncertaintyWarning,
    ModelError,
    ParseError,
    Separable,
    TsroProblem,
    instantiate_ddus,
    problem_from_dict,
    problem_to_dict,
)
from .oracles import crosscheck_theorem1
from .solvers import _round

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE = 0, 1, 2
ENV_OUT = "DDUROBUST_OUT"


class UsageError(Exception):
    pass


def _out_dir(arg: str | None) -> Path:
    d = Path(os.environ.get(ENV_OUT) or arg or "ddurobust-out")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(_round(obj), indent=2, sort_keys=True) + "\n")


def _fmt(v) -> str:
    return f"{float(v):.9g}"


def _write_rows_csv(P: geo.Polyhedron, path: Path) -> None:
    """H-representation as ``a_1..a_n,rel,b`` rows."""
    lines = [",".join([f"a_{i}" for i in range(P.dim)] + ["rel", "b"])]
    for a, e, bb in zip(P.A, P.eq, P.b):
        lines.append(",".join([_fmt(v) for v in a] + ["=" if e else "<=", _fmt(bb)]))
    path.write_text("\n".join(lines) + "\n")


def _write_vertices(P: geo.Polyhedron, path: Path) -> int:
    if isinstance(geo.is_empty(P), geo.Empty):
        V = np.zeros((0, P.dim))
    else:
        V = geo.vertices(P, check_bounded=False).points
    geo.write_points_csv(V, path)
    return len(V)


def load_problem(path) -> TsroProblem:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError("<file>", str(exc)) from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}", exc.msg) from None
    return problem_from_dict(d)


def save_problem(p: TsroProblem, path, app: dict | None = None) -> None:
    d = problem_to_dict(p)
    if app is not None:
        d["app"] = app
    Path(path).write_text(json.dumps(d, indent=1) + "\n")


def _parse_vec(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.replace(" ", "").split(",") if t], dtype=float)
    except ValueError:
        raise UsageError(f"cannot parse vector {text!r}") from None


# ---------------------------------------------------------------------------
# repro


class Checks:
    """Named expectation checks; each prints one line."""

    def __init__(self):
        self.items: list[dict] = []

    def close(self, name, got, want, tol=1e-6):
        ok = got is not None and abs(float(got) - float(want)) <= tol
        self._add(name, ok, got, want)

    def equal(self, name, got, want):
        self._add(name, got == want, got, want)

    def vector(self, name, got, want, tol=1e-6):
        ok = got is not None and len(got) == len(want) and bool(np.allclose(got, want, rtol=0, atol=tol))
        self._add(name, ok, got, list(want))

    def intervals(self, name, got: regions.IntervalUnion, want, tol=1e-6):
        ok = len(got.intervals) == len(want) and all(
            abs(a - c) <= tol and abs(b - d) <= tol for (a, b), (c, d) in zip(got.intervals, want))
        self._add(name, ok, [list(t) for t in got.intervals], [list(t) for t in want])

    def _add(self, name, ok, got, want):
        self.items.append({"check": name, "ok": bool(ok), "got": got, "expected": want})
        print(f"{'PASS' if ok else 'FAIL'} {name}: got {json.dumps(_round(got))} expected {json.dumps(_round(want))}")

    @property
    def ok(self) -> bool:
        return all(c["ok"] for c in self.items)


def _first_record(out: solvers.SolveOutcome):
    return out.trace.records[0] if out.trace.records else None


def _repro_8(out: Path, chk: Checks):
    p = cases.heptagon_case(c=(1.0, 0.0))
    g = np.linspace(0, 1, 10)
    xs = np.array([[a, b] for a in g for b in np.linspace(0, 1, 5)])
    rep = crosscheck_theorem1(p, xs)
    chk.equal("heptagon grid points", rep.n_points, 50)
    chk.equal("membership mismatches", len(rep.membership_mismatches), 0)
    chk.equal("violation mismatches", len(rep.value_mismatches), 0)
    chk.equal("recourse cost mismatches", len(rep.cost_mismatches), 0)
    G, h = regions.dispatch_graph(p).canonical_rows()
    # D = {u1 <= 2, u2 >= -2, u1 <= u2} over the stacked (x, u), independent of x
    Gu = np.array([[0, 0, 1.0, -1.0], [0, 0, 1.0, 0.0], [0, 0, 0.0, -1.0]])
    Ge, he = regions.canonical_rows(Gu, np.array([0.0, 2.0, 2.0]))
    chk.equal("dispatchable region rows", G.shape == Ge.shape and np.allclose(G, Ge, atol=1e-9)
              and np.allclose(h, he, atol=1e-9), True)
    _dump_json({"points": xs.tolist(), "members": rep.members}, out / "grid_membership.json")


def _repro_9(out: Path, chk: Checks):
    x = np.array([1.0, 1.0])
    for narrow, want in ((False, False), (True, True)):
        p = cases.heptagon_case(narrow=narrow)
        tag = "narrow" if narrow else "original"
        res = regions.matching_check(p, x)
        chk.equal(f"matching at x=(1,1), {tag} set", res.matched, want)
        _write_vertices(instantiate_ddus(p.uncertainty, x), out / f"U_{tag}.csv")
    _write_vertices(regions.dispatch_graph(cases.heptagon_case()).slice(x), out / "D.csv")


def _repro_10(out: Path, chk: Checks):
    p = cases.translated_union_case()
    for x, want in (((0.0, 1.0), True), ((0.0, 0.0), False)):
        res = regions.aux_region_check(p, x)
        chk.equal(f"auxiliary region covers the support at x={list(x)}", res.matched, want)
        o = solvers.enhanced_ccg(p.with_X(geo.Polyhedron.box(x, x)))
        chk.equal(f"enhanced C&CG status at x={list(x)}", o.status, "Optimal" if want else "RmpInfeasible")
        o.trace.write(out / f"trace_eccg_{int(x[0])}_{int(x[1])}.jsonl")
    rep = regions.convexity_probe(p, 500, seed=0)
    chk.equal("midpoint failures in 500 tests", len(rep.failures), 0)


def _repro_11(out: Path, chk: Checks):
    p = cases.bowtie_case()
    iu = regions.rfr_scan_1d(p, 0.8, 2.2)
    chk.intervals("robust feasible intervals", iu, [(0.8, 1.0), (2.0, 2.2)])
    (out / "intervals.json").write_text(iu.to_json() + "\n")


def _repro_12(out: Path, chk: Checks):
    p = cases.bowtie_abs_case()
    for algo in ("benders", "ccg"):
        o = solvers.solve(p, algo)
        o.trace.write(out / f"trace_{algo}.jsonl")
        r = _first_record(o)
        chk.equal(f"{algo} status", o.status, "RmpInfeasible")
        chk.equal(f"{algo} iterations", o.iterations, 2)
        chk.close(f"{algo} first x", r.x[0] if r else None, 1.5)
        chk.vector(f"{algo} frozen scenario", r.scenario if r else None, [3.0, 8.0])
    o = solvers.enhanced_benders(p)
    o.trace.write(out / "trace_e-benders.jsonl")
    chk.close("enhanced Benders x*", o.x[0] if o.x is not None else None, 1.0)
    chk.close("enhanced Benders objective", o.objective, 0.5)


def _repro_13(out: Path, chk: Checks):
    p = cases.widening_window_case()
    iu = regions.rfr_scan_1d(p, 0.8, 2.2)
    chk.intervals("robust feasible intervals", iu, [(0.8, 4.0 / 3.0), (1.6, 2.2)])
    (out / "intervals.json").write_text(iu.to_json() + "\n")
    for algo in ("benders", "ccg"):
        o = solvers.solve(p, algo)
        o.trace.write(out / f"trace_{algo}.jsonl")
        chk.close(f"{algo} x", o.x[0] if o.x is not None else None, 2.0)
        chk.close(f"{algo} objective", o.objective, 0.5)
        chk.equal(f"{algo} flagged suboptimal", o.suboptimal, True)
    o = solvers.enhanced_benders(p)
    o.trace.write(out / "trace_e-benders.jsonl")
    chk.close("enhanced Benders x*", o.x[0] if o.x is not None else None, 1.6)
    chk.close("enhanced Benders objective", o.objective, 0.1)


REPRO = {8: _repro_8, 9: _repro_9, 10: _repro_10, 11: _repro_11, 12: _repro_12, 13: _repro_13}


def cmd_repro(args) -> int:
    out = _out_dir(args.out) / f"repro_{args.case}"
    out.mkdir(parents=True, exist_ok=True)
    chk = Checks()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyUncertaintyWarning)
        REPRO[args.case](out, chk)
    _dump_json({"case": cases.REPRO_CASES[args.case], "ok": chk.ok, "checks": chk.items}, out / "summary.json")
    return EXIT_OK if chk.ok else EXIT_MISMATCH


# ---------------------------------------------------------------------------
# solve / region / rfr


def _audit_failed(o: solvers.SolveOutcome) -> bool:
    a = o.trace.audit
    return bool(a.get("suboptimal") or a.get("misdiagnosed_infeasible") or a.get("robust_feasible") is False)


def cmd_solve(args) -> int:
    p = load_problem(args.file)
    out = _out_dir(args.out)
    o = solvers.solve(p, args.algo)
    o.trace.write(out / "trace.jsonl")
    summ = o.summary()
    _dump_json(summ, out / "summary.json")
    print(json.dumps(_round({k: summ[k] for k in ("status", "x", "objective", "iterations")})))
    for line in o.trace.diagnosis:
        print(f"note: {line}")
    return EXIT_MISMATCH if _audit_failed(o) else EXIT_OK


def _check_x(p: TsroProblem, x: np.ndarray) -> None:
    if x.size != p.n_x:
        raise UsageError(f"--at-x needs {p.n_x} values, got {x.size}")
    if not p.X.contains_point(x):
        raise UsageError(f"x={x.tolist()} lies outside X")


def cmd_region(args) -> int:
    p = load_problem(args.file)
    x = _parse_vec(args.at_x)
    _check_x(p, x)
    out = _out_dir(args.out)
    alpha = None if args.no_alpha or args.alpha is None else float(args.alpha)
    U = instantiate_ddus(p.uncertainty, x)
    info = {"x": x.tolist(), "alpha": alpha}
    info["U_vertices"] = _write_vertices(U, out / "U.csv")
    D = regions.dispatch_graph(p).slice(x)
    _write_rows_csv(D, out / "D_rows.csv")
    info["D_vertices"] = _write_vertices(D, out / "D.csv")
    if alpha is not None:
        Dx = regions.dispatch_graph(p, with_alpha=True).slice(x, alpha)
        _write_rows_csv(Dx, out / "Dext_rows.csv")
        info["Dext_vertices"] = _write_vertices(Dx, out / "Dext.csv")
    res = regions.matching_check(p, x, np.inf if alpha is None else alpha)
    info["matched"] = res.matched
    info["witness"] = None if res.witness is None else res.witness.tolist()
    if isinstance(p.uncertainty, Separable):
        geo.write_points_csv(p.uncertainty.xi_vertices(), out / "Xi.csv")
        Q = regions.aux_region_slice(p, x, np.inf if alpha is None else alpha)
        _write_rows_csv(Q, out / "aux_region_rows.csv")
        info["aux_region_vertices"] = _write_vertices(Q, out / "aux_region.csv")
        info["aux_matched"] = regions.aux_region_check(p, x, np.inf if alpha is None else alpha).matched
    _dump_json(info, out / "region.json")
    print(f"verdict: {'Matched' if res.matched else 'Unmatched'}")
    return EXIT_OK


def _parse_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(t) for t in text.split(":"))
    except ValueError:
        raise UsageError(f"--range expects lo:hi, got {text!r}") from None
    if hi < lo:
        raise UsageError("--range needs lo <= hi")
    return lo, hi


def cmd_rfr(args) -> int:
    p = load_problem(args.file)
    lo, hi = _parse_range(args.range)
    if args.step <= 0:
        raise UsageError("--step must be positive")
    if not 0 <= args.axis < p.n_x:
        raise UsageError(f"--axis must lie in [0, {p.n_x})")
    fixed = _parse_vec(args.fixed) if args.fixed else None
    if fixed is not None and fixed.size != p.n_x:
        raise UsageError(f"--fixed needs {p.n_x} values")
    out = _out_dir(args.out)
    iu = regions.rfr_scan_1d(p, lo, hi, args.step, axis=args.axis, fixed=fixed)
    (out / "intervals.json").write_text(iu.to_json() + "\n")
    n = max(1, int(round((hi - lo) / args.step)))
    lines = ["x,member"]
    base = np.zeros(p.n_x) if fixed is None else fixed
    for t in np.linspace(lo, hi, n + 1):
        lines.append(f"{_fmt(t)},{int(regions._member_1d(p, t, args.axis, base))}")
    (out / "membership.csv").write_text("\n".join(lines) + "\n")
    print(iu.to_json())
    return EXIT_OK


# ---------------------------------------------------------------------------
# export


def _export_target(name: str):
    if name.isdigit() and int(name) in cases.REPRO_CASES:
        name = cases.REPRO_CASES[int(name)]
    builders = {
        "heptagon": lambda: cases.heptagon_case(),
        "heptagon-narrow": lambda: cases.heptagon_case(narrow=True),
        "translated-union": cases.translated_union_case,
        "bowtie": cases.bowtie_case,
        "bowtie-abs": cases.bowtie_abs_case,
        "widening-window": cases.widening_window_case,
    }
    if name in builders:
        return builders[name](), None
    app_builders = {
        "wind": (apps.wind_fixture, apps.build_wind_reserve),
        "demand-response": (apps.demand_response_fixture, apps.build_demand_response),
        "vpp": (apps.vpp_fixture, apps.build_vpp),
    }
    if name in app_builders:
        load, build = app_builders[name]
        inst = load()
        return build(inst), {"kind": name, "instance": inst.to_dict()}
    raise UsageError(f"unknown case {name!r}")


def cmd_export(args) -> int:
    p, app = _export_target(args.case)
    save_problem(p, args.dest, app)
    print(f"wrote {args.dest}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ddurobust", description="Two-stage robust optimisation with decision-dependent uncertainty")
    sub = ap.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("repro", help="rerun a built-in case and compare with its known results")
    r.add_argument("case", type=int, choices=sorted(REPRO))
    r.add_argument("--out")
    r.set_defaults(fn=cmd_repro)

    s = sub.add_parser("solve", help="solve a problem file")
    s.add_argument("file")
    s.add_argument("--algo", required=True, choices=sorted(solvers.ALGORITHMS))
    s.add_argument("--out")
    s.set_defaults(fn=cmd_solve)

    g = sub.add_parser("region", help="dump U(x), dispatchable region slices and the matching verdict")
    g.add_argument("file")
    g.add_argument("--at-x", required=True, dest="at_x")
    ga = g.add_mutually_exclusive_group()
    ga.add_argument("--alpha", type=float)
    ga.add_argument("--no-alpha", action="store_true", dest="no_alpha")
    g.add_argument("--out")
    g.set_defaults(fn=cmd_region)

    f = sub.add_parser("rfr", help="scan the robust feasible region along one axis")
    f.add_argument("file")
    f.add_argument("--range", required=True)
    f.add_argument("--step", type=float, default=regions.COARSE_STEP)
    f.add_argument("--axis", type=int, default=0)
    f.add_argument("--fixed", help="comma-separated base point for the other coordinates")
    f.add_argument("--out")
    f.set_defaults(fn=cmd_rfr)

    e = sub.add_parser("export", help="write a built-in case or application fixture as a problem file")
    e.add_argument("case", help="case id (8-13), case name, or wind | demand-response | vpp")
    e.add_argument("dest")
    e.set_defaults(fn=cmd_export)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.fn(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, solvers.IncompatibleAlgo) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelError, geo.GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH


if __name__ == "__main__":
    sys.exit(main())
