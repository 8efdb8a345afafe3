import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ddurobust import apps, lp
from ddurobust import geometry as geo
from ddurobust.cases import frozen
from ddurobust.model import AffineRhs, Fixed, Separable, ddus_vertices, instantiate_ddus, sample_points, validate
from ddurobust.solvers import enhanced_benders, enhanced_ccg, solve


def test_mppt_curve_branches():
    assert apps.mppt_power(3.0) == 0.0
    assert apps.mppt_power(10.0) == pytest.approx(2.0)
    assert apps.mppt_power(23.0) == 0.0
    assert apps.mppt_power(7.0) == pytest.approx(2.0 * 0.343)
    assert apps.mppt_power(15.0) == pytest.approx(2.0)
    assert apps.mppt_power(np.array([3.0, 10.0])).tolist() == pytest.approx([0.0, 2.0])
    with pytest.raises(ValueError):
        apps.mppt_power(-1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 30), st.floats(0, 30))
def test_mppt_monotone_below_cutoff(a, b):
    lo, hi = sorted((a, b))
    if hi <= 22.0:
        assert apps.mppt_power(lo) <= apps.mppt_power(hi) + 1e-12


def _one_farm(gamma):
    return apps.WindReserveInstance(p_rate=[2.0], p_av=[[1.2]], p_h=[[0.3]], gamma_t=[gamma], gamma_s=[gamma],
                                    load=[3.0], thermal_min=0.5, thermal_max=4.0, thermal_ramp=1.0)


def test_zero_budget_wind_is_deterministic_lp():
    p = apps.build_wind_reserve(_one_farm(0.0))
    V = ddus_vertices(p.uncertainty, np.zeros(p.n_x))
    assert V == pytest.approx(np.array([[1.2]]))
    out = enhanced_ccg(p)
    # the same problem as one LP: x, t and y with u = p_av - R written into the rows
    nx, ny = p.n_x, p.n_y
    F = p.uncertainty.F
    A_x = p.A + p.C @ F
    rows = np.vstack([np.hstack([p.X.A, np.zeros((p.X.n_rows, ny))]), np.hstack([A_x, p.B])])
    rhs = np.concatenate([p.X.b, p.b - p.C @ np.array([1.2])])
    rel = [lp.EQ if e else lp.LE for e in p.X.eq] + [lp.LE] * p.m
    c = np.concatenate([p.f.grads[0], p.c])
    lb = np.concatenate([np.full(nx, -np.inf), np.zeros(ny)])
    ref = lp.solve(lp.LpProblem(c=c, A=rows, rel=rel, b=rhs, lb=lb))
    assert out.objective == pytest.approx(ref.objective, abs=1e-6)


def test_wind_toy_converges_and_is_certified():
    p = apps.build_wind_reserve(apps.wind_fixture())
    assert validate(p).ok
    out = enhanced_ccg(p)
    assert out.status == "Optimal"
    last = out.trace.records[-1]
    assert last.ub - last.lb <= 1e-6 or last.S <= last.alpha + 1e-6
    assert out.trace.audit["robust_feasible"]
    assert out.trace.audit["objective_recomputed"] == pytest.approx(out.objective, abs=1e-6)


def test_zero_deloading_collapses_to_fixed_set():
    inst = dataclasses.replace(apps.wind_fixture(), lam_max=0.0)
    p = apps.build_wind_reserve(inst)
    objs = {"e-ccg": enhanced_ccg(p).objective}
    q = frozen(p, np.zeros(p.n_x))
    for algo in ("benders", "ccg", "e-ccg", "e-benders"):
        objs[algo] = solve(q, algo).objective
    vals = list(objs.values())
    assert max(vals) - min(vals) <= 1e-6, objs


def test_deloading_shifts_available_power_down():
    rng = np.random.default_rng(0)
    for _ in range(50):
        J, K = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        pr = rng.uniform(1.5, 3.0, J)
        pav = rng.uniform(0.6, 1.0, (J, K)) * pr[:, None] * 0.8
        ph = rng.uniform(0.1, 0.4, (J, K))
        inst = apps.WindReserveInstance(p_rate=pr.tolist(), p_av=pav.tolist(), p_h=ph.tolist(),
                                        gamma_t=rng.uniform(0, 1.5, J).tolist(), gamma_s=rng.uniform(0, 1.5, K).tolist(),
                                        load=[3.0] * K, lam_max=0.3)
        p = apps.build_wind_reserve(inst)
        lay = apps.WindLayout(J, K)
        x = np.zeros(p.n_x)
        x2 = x.copy()
        for j in range(J):
            for t in range(K):
                x[lay.R(j, t)] = rng.uniform(0, 0.1)
                x2[lay.R(j, t)] = x[lay.R(j, t)] + rng.uniform(0, 0.2)
        V, V2 = ddus_vertices(p.uncertainty, x), ddus_vertices(p.uncertainty, x2)
        assert V.shape == V2.shape
        # each vertex of U(x) has a counterpart in U(x2) that is coordinate-wise no larger
        shift = p.uncertainty.F @ (x2 - x)
        for v in V:
            w = V2[np.argmin(np.linalg.norm(V2 - (v + shift), axis=1))]
            assert w == pytest.approx(v + shift, abs=1e-7)
            assert np.all(w <= v + 1e-9)


def test_wind_precondition_rows_use_support_minimum():
    inst = apps.wind_fixture()
    Xi = apps.wind_support(inst)
    p = apps.build_wind_reserve(inst)
    lay = apps.WindLayout(*inst.shape)
    lo = geo.vertices(Xi).points.min(axis=0)
    # the largest admissible reserve never exceeds the smallest MPPT value
    for j in range(2):
        for t in range(3):
            d = np.zeros(p.n_x)
            d[lay.R(j, t)] = 1.0
            assert geo.support(p.X, d)[0] <= lo[j * 3 + t] + 1e-9


def test_invalid_wind_instances():
    good = dict(p_rate=[2.0], p_av=[[1.0]], p_h=[[0.2]], gamma_t=[1.0], gamma_s=[1.0], load=[1.0])
    for bad in ({"p_h": [[0.0]]}, {"gamma_t": [-1.0]}, {"lam_max": 1.5}, {"p_av": [[3.0]]}, {"load": [1.0, 2.0]}):
        with pytest.raises(apps.InvalidInstance):
            apps.WindReserveInstance(**{**good, **bad})


def test_instance_json_round_trip():
    inst = apps.vpp_fixture()
    assert apps.VppInstance.from_dict(inst.to_dict()) == inst
    with pytest.raises(apps.InvalidInstance):
        apps.VppInstance.from_dict({**inst.to_dict(), "bogus": 1})


# ---------------------------------------------------------------------------
# demand response


def test_demand_response_spec_and_zero_width():
    inst = apps.demand_response_fixture()
    p = apps.build_demand_response(inst)
    assert isinstance(p.uncertainty, AffineRhs) and inst.symmetric
    flat = dataclasses.replace(inst, delta_minus=[0.0, 0.0], delta_plus=[0.0, 0.0])
    q = apps.build_demand_response(flat)
    x = sample_points(q.X, 1, np.random.default_rng(0))[-1]
    V = ddus_vertices(q.uncertainty, x)
    assert len(V) == 1 and V[0] == pytest.approx(x[-2:])


def test_demand_response_half_width_scales_with_setpoint():
    inst = dataclasses.replace(apps.demand_response_fixture(), delta_plus=[0.9, 0.2])
    p = apps.build_demand_response(inst)
    x = np.zeros(p.n_x)
    x[-2:] = [2.0, 1.5]
    for kappa in (0.5, 1.3, 2.0):
        x2 = x.copy()
        x2[-2:] *= kappa
        w1 = np.ptp(ddus_vertices(p.uncertainty, x), axis=0)
        w2 = np.ptp(ddus_vertices(p.uncertainty, x2), axis=0)
        assert w2 == pytest.approx(kappa * w1)


def _face_distance(U: geo.Polyhedron, u) -> float:
    norms = np.linalg.norm(U.A, axis=1)
    return float(np.min((U.b - U.A @ u) / norms))


def test_demand_response_worst_cases_sit_on_the_set_and_diu_overshoots():
    inst = apps.demand_response_fixture()
    p = apps.build_demand_response(inst)
    out = enhanced_benders(p)
    assert out.status == "Optimal"
    x = out.x
    U = instantiate_ddus(p.uncertainty, x)
    for r in out.trace.records:
        if r.scenario is not None and np.allclose(r.x, x):
            assert U.contains_point(r.scenario, tol=1e-6)
            assert _face_distance(U, np.array(r.scenario)) <= 1e-6
    diu = p.with_uncertainty(Fixed(apps.demand_response_diu(inst)))
    o2 = solve(diu, "e-benders")
    assert o2.status == "Optimal"
    U2 = instantiate_ddus(p.uncertainty, o2.x)
    scen = [np.array(r.scenario) for r in o2.trace.records if r.scenario is not None]
    assert any(U2.max_violation(s) > 1e-6 for s in scen)


def test_invalid_demand_response():
    d = apps.demand_response_fixture().to_dict()
    for bad in ({"d_e": [0.0, 2.0]}, {"delta_plus": [-1.0, 0.0]}, {"gen_bus": [0, 9]}):
        with pytest.raises(apps.InvalidInstance):
            apps.DemandResponseInstance.from_dict({**d, **bad})


# ---------------------------------------------------------------------------
# virtual power plant


def test_vpp_zero_signals_or_capacity_pin_u_to_zero():
    inst = apps.vpp_fixture()
    for repl in ({"sig_up": [0.0] * 3, "sig_down": [0.0] * 3}, {"rc_up_max": 0.0, "rc_down_max": 0.0}):
        p = apps.build_vpp(dataclasses.replace(inst, **repl))
        for x in sample_points(p.X, 5, np.random.default_rng(1)):
            V = ddus_vertices(p.uncertainty, x)
            assert len(V) == 1 and np.allclose(V, 0.0)


def test_vpp_set_stays_inside_capacity_box():
    inst = apps.vpp_fixture()
    p = apps.build_vpp(inst)
    K = inst.K
    for x in sample_points(p.X, 20, np.random.default_rng(2)):
        V = ddus_vertices(p.uncertainty, x)
        cap = np.concatenate([x[K:2 * K], x[2 * K:]])
        assert np.all(V >= -1e-9) and np.all(V <= cap + 1e-9)


def test_invalid_vpp():
    d = apps.vpp_fixture().to_dict()
    for bad in ({"sig_up": [0.3, 1.5, 0.2]}, {"rc_up_max": -1.0}, {"storage_eff": 0.0}, {"wind": [1.0, 2.0]}):
        with pytest.raises(apps.InvalidInstance):
            apps.VppInstance.from_dict({**d, **bad})


def test_fixtures_are_labelled_and_separability_classes():
    assert isinstance(apps.build_wind_reserve(apps.wind_fixture()).uncertainty, Separable)
    assert isinstance(apps.build_vpp(apps.vpp_fixture()).uncertainty, AffineRhs)
