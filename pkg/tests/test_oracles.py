import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog as scipy_linprog

from ddurobust import cases
from ddurobust.model import ddus_vertices
from ddurobust.oracles import (
    crosscheck_theorem1,
    feasibility_oracle,
    optimality_oracle,
    recourse_value,
    slack_value,
)

from conftest import random_fixed_problem


def scipy_slack(p, x, u):
    """``min 1^T s`` st ``B y - s <= b - A x - C u``, ``s >= 0`` with scipy."""
    m, ny = p.m, p.n_y
    c = np.r_[np.zeros(ny), np.ones(m)]
    A = np.hstack([p.B, -np.eye(m)])
    bounds = [(None, None) if f else (0, None) for f in p.y_free] + [(0, None)] * m
    return scipy_linprog(c, A_ub=A, b_ub=p.rhs(x, u), bounds=bounds, method="highs").fun


def test_bowtie_abs_worst_case_at_midpoint():
    p = cases.bowtie_abs_case()
    v = feasibility_oracle(p, [1.5])
    assert v.violation == pytest.approx(1.0)
    assert v.worst_u == pytest.approx([3.0, 8.0])
    assert v.dual_xi == pytest.approx([0, -1, 0, -1, -1, 0])
    assert feasibility_oracle(p, [1.0]).robust
    assert feasibility_oracle(p, [2.0]).robust


def test_slack_matches_scipy_on_random_points():
    rng = np.random.default_rng(5)
    for p in (cases.bowtie_case(), cases.widening_window_case(), cases.heptagon_case()):
        for _ in range(20):
            x = np.array([rng.uniform(lo, hi) for lo, hi in zip(*_box(p))])
            u = rng.uniform(-5, 15, p.n_u)
            assert slack_value(p, x, u)[0] == pytest.approx(scipy_slack(p, x, u), abs=1e-7)


def _box(p):
    from ddurobust import geometry as geo
    V = geo.vertices(p.X).points
    return V.min(axis=0), V.max(axis=0)


def test_worst_case_dominates_interior_samples():
    rng = np.random.default_rng(9)
    p = cases.bowtie_case()
    for x in (0.9, 1.3, 1.7, 2.1):
        verdict = feasibility_oracle(p, [x])
        V = ddus_vertices(p.uncertainty, [x])
        W = rng.dirichlet(np.ones(len(V)), size=30) @ V
        for u in W:
            assert slack_value(p, [x], u)[0] <= verdict.violation + 1e-9


def test_recourse_cost_is_max_over_vertices_on_random_fixed():
    for seed in range(5):
        p = random_fixed_problem(seed)
        x = np.full(p.n_x, 1.0)
        ov = optimality_oracle(p, x)
        vals = [recourse_value(p, x, u)[0] for u in ddus_vertices(p.uncertainty, x)]
        assert ov.value == pytest.approx(max(vals))


def test_vertex_ties_resolve_lexicographically():
    # with zero recourse cost every vertex is equally bad
    p = cases.heptagon_case(narrow=True)
    ov = optimality_oracle(p, [1.0, 1.0])
    V = ddus_vertices(p.uncertainty, [1.0, 1.0])
    assert ov.worst_u == pytest.approx(V[0])


def test_dual_crosscheck_on_bowtie_grid():
    p = cases.bowtie_case()
    rep = crosscheck_theorem1(p, np.linspace(0.8, 2.2, 15)[:, None])
    assert rep.ok and sum(rep.members) > 0


@pytest.mark.filterwarnings("ignore::ddurobust.model.EmptyUncertaintyWarning")
@settings(max_examples=15, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1))
def test_dual_crosscheck_on_heptagon_points(a, b):
    p = cases.heptagon_case(c=(1.0, -0.5))
    assert crosscheck_theorem1(p, [[a, b]]).ok
