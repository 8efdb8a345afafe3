import json

import numpy as np
import pytest

from ddurobust import cases, lp
from ddurobust.geometry import Polyhedron
from ddurobust.model import Fixed, PiecewiseLinearConvexCost, Separable, as_affine_rhs
from ddurobust.oracles import feasibility_oracle, optimality_oracle
from ddurobust.solvers import (
    ALGORITHMS,
    IncompatibleAlgo,
    MasterProblem,
    SolveOptions,
    UNSOUND_BANNER,
    _add_argmax_block,
    alpha_lower_bound,
    enhanced_benders,
    enhanced_ccg,
    solve,
    standard_benders,
    standard_ccg,
)

from conftest import random_fixed_problem


def test_zero_cut_master_sits_at_cost_minimum():
    p = cases.bowtie_abs_case()
    res = MasterProblem(p, alpha_floor=0.0).solve()
    assert res.status == "optimal"
    assert res.z[0] == pytest.approx(1.5)


def test_master_with_both_branches_infeasible():
    p = cases.bowtie_case()
    m = MasterProblem(p, 0.0)
    v = m.add_vars("v", 1, lb=0.0)
    r = m.add_row({v: 1.0}, lp.LE, 1.0)
    m.add_row({v: -1.0}, lp.LE, -0.5)  # v >= 0.5 rules out v = 0
    m.add_row({v: 1.0}, lp.LE, 0.9)  # v <= 0.9 rules out the row being active
    m.add_pair(v, r)
    assert m.solve().status == "infeasible"


def test_one_argmax_cut_keeps_master_feasible():
    p = cases.bowtie_abs_case()
    xi = feasibility_oracle(p, [1.5]).dual_xi
    m = MasterProblem(p, 0.0)
    us = _add_argmax_block(p, p.uncertainty, m, xi, "1")
    coef = {0: -float((xi @ p.A)[0])}
    for j, v in enumerate(xi @ p.C):
        if v:
            coef[us + j] = -float(v)
    m.add_row(coef, lp.LE, -float(xi @ p.b))
    res = m.solve()
    assert res.status == "optimal"
    # the cut removes the bowtie's infeasible middle around 1.5 but keeps a neighbour of X_R
    x = res.z[0]
    assert abs(x - 1.5) > 1e-6 and (x <= 1.0 + 1e-6 or x >= 2.0 - 1e-6 or feasibility_oracle(p, [x]).violation > 0)


@pytest.mark.filterwarnings("ignore::ddurobust.model.EmptyUncertaintyWarning")
def test_alpha_floor_bounds_recourse_cost():
    p = cases.heptagon_case(narrow=True, c=(1.0, 0.0))
    floor = alpha_lower_bound(p)
    assert np.isfinite(floor) and floor > -1.0 - 1e-9  # y1 >= -1
    for x in ([1.0, 1.0], [0.5, 1.0], [1.0, 0.6]):
        if feasibility_oracle(p, x).robust:
            assert floor <= optimality_oracle(p, x).value + 1e-9


def test_standard_solvers_misdiagnose_infeasibility():
    p = cases.bowtie_abs_case()
    for fn in (standard_benders, standard_ccg):
        out = fn(p)
        assert out.status == "RmpInfeasible" and out.iterations == 2
        first = out.trace.records[0]
        assert first.x == pytest.approx([1.5])
        assert first.scenario == pytest.approx([3.0, 8.0])
        assert out.trace.banner == UNSOUND_BANNER
        assert out.trace.audit["misdiagnosed_infeasible"]
        assert out.trace.audit["cuts_excluding_reference"] == [1]


def test_standard_solvers_land_on_suboptimal_point():
    p = cases.widening_window_case()
    for fn in (standard_benders, standard_ccg):
        out = fn(p)
        assert out.status == "Optimal"
        assert out.x == pytest.approx([2.0], abs=1e-6)
        assert out.objective == pytest.approx(0.5, abs=1e-6)
        assert out.suboptimal


def test_enhanced_benders_on_bowtie_cases():
    out = enhanced_benders(cases.bowtie_abs_case())
    assert out.status == "Optimal"
    assert out.x == pytest.approx([1.0], abs=1e-6)
    assert out.objective == pytest.approx(0.5, abs=1e-6)
    assert out.trace.audit["robust_feasible"]
    out = enhanced_benders(cases.widening_window_case())
    assert out.x == pytest.approx([1.6], abs=1e-6)
    assert out.objective == pytest.approx(0.1, abs=1e-6)


def test_enhanced_ccg_certifies_translated_union_points():
    p = cases.translated_union_case()
    ok = enhanced_ccg(p.with_X(Polyhedron.box([0, 1], [0, 1])))
    bad = enhanced_ccg(p.with_X(Polyhedron.box([0, 0], [0, 0])))
    assert ok.status == "Optimal" and bad.status == "RmpInfeasible"


def test_enhanced_ccg_adds_distinct_vertices():
    p = cases.translated_union_case().with_costs(f=PiecewiseLinearConvexCost.abs_dev([0.0, 0.0]))
    out = enhanced_ccg(p)
    assert out.status == "Optimal"
    keys = [tuple(r.scenario) for r in out.trace.records if r.cut_kind]
    assert len(keys) == len(set(keys))
    assert feasibility_oracle(p, out.x).robust


def test_identity_coupling_matches_standard_ccg():
    U0 = cases.instantiate_ddus(cases.bowtie_ddus(), [1.0])
    base = cases.bowtie_abs_case()
    sep = base.with_uncertainty(Separable(U0, np.eye(2), np.zeros((2, 1)), np.zeros(2)))
    a, b = enhanced_ccg(sep), standard_ccg(base.with_uncertainty(Fixed(U0)))
    assert a.status == b.status == "Optimal"
    assert a.objective == pytest.approx(b.objective, abs=1e-6)
    assert a.x == pytest.approx(b.x, abs=1e-6)


@pytest.mark.parametrize("seed", range(4))
def test_four_solvers_agree_on_fixed_sets(seed):
    p = random_fixed_problem(seed)
    objs = [solve(p, algo).objective for algo in sorted(ALGORITHMS)]
    assert max(objs) - min(objs) <= 1e-6


def test_bounds_and_cut_invariants():
    p = random_fixed_problem(11)
    for algo in sorted(ALGORITHMS):
        out = solve(p, algo)
        lbs = [r.lb for r in out.trace.records]
        assert all(b >= a - 1e-9 for a, b in zip(lbs, lbs[1:]))
        assert lbs[-1] <= out.objective + 1e-6
        for r in out.trace.records:
            if r.cut_kind and "fea" in r.cut_kind:
                assert r.violation > 1e-7
            elif r.cut_kind:
                assert r.S > r.alpha + 1e-7


def test_incompatible_algorithms():
    with pytest.raises(IncompatibleAlgo):
        enhanced_ccg(cases.bowtie_case())
    with pytest.raises(IncompatibleAlgo):
        enhanced_benders(cases.translated_union_case())
    with pytest.raises(IncompatibleAlgo):
        solve(cases.bowtie_case(), "simplex")


def test_fixed_specs_convert_for_enhanced_solvers():
    p = random_fixed_problem(2)
    a = enhanced_benders(p)
    b = enhanced_benders(p.with_uncertainty(as_affine_rhs(p.uncertainty, p.n_x)))
    assert a.objective == pytest.approx(b.objective, abs=1e-9)


def test_trace_export(tmp_path):
    out = standard_ccg(cases.widening_window_case())
    path = tmp_path / "t.jsonl"
    out.trace.write(path)
    lines = [json.loads(s) for s in path.read_text().splitlines()]
    for rec in lines[:-1]:
        assert {"iter", "x", "alpha", "violation", "S", "cut_kind", "lb", "ub"} <= set(rec)
    assert lines[-1]["status"] == "Optimal"
    assert lines[-1]["audit"]["suboptimal"] is True
    assert out.summary()["objective"] == pytest.approx(0.5)


def test_iteration_limit_reported():
    out = enhanced_benders(cases.widening_window_case(), SolveOptions(max_iter=1))
    assert out.status == "IterationLimit"
    assert out.trace.diagnosis
