import json
import time

import numpy as np
import pytest

from ddurobust import cases
from ddurobust.model import SpecNotSeparable
from ddurobust.regions import (
    aux_region_check,
    aux_region_slice,
    canonical_rows,
    convexity_expected,
    convexity_probe,
    dispatch_graph,
    matching_check,
    membership_raster,
    rfr_scan_1d,
)


def test_dispatch_graph_fixed_window():
    G, h = dispatch_graph(cases.heptagon_case()).canonical_rows()
    Ge, he = canonical_rows(np.array([[0, 0, 1.0, -1.0], [0, 0, 1.0, 0.0], [0, 0, 0.0, -1.0]]),
                            np.array([0.0, 2.0, 2.0]))
    assert G == pytest.approx(Ge, abs=1e-9) and h == pytest.approx(he, abs=1e-9)


def test_dispatch_graph_widening_window():
    # u1 - u2 <= x, u1 <= 2 + x/2, -u2 <= 2 + x/2 over (x, u1, u2)
    G, h = dispatch_graph(cases.widening_window_case()).canonical_rows()
    Ge, he = canonical_rows(np.array([[-1.0, 1.0, -1.0], [-0.5, 1.0, 0.0], [-0.5, 0.0, -1.0]]),
                            np.array([0.0, 2.0, 2.0]))
    assert G == pytest.approx(Ge, abs=1e-9) and h == pytest.approx(he, abs=1e-9)


def test_extended_region_caps_cost():
    p = cases.heptagon_case(c=(1.0, 0.0))
    g = dispatch_graph(p, with_alpha=True)
    D = g.slice([0.5, 0.5], alpha=-0.5)
    # y1 <= -0.5 forces y2 >= u1 + 0.5 and y2 <= 1
    assert D.contains_point([0.5, 0.5])
    assert not D.contains_point([0.6, 0.6])
    with pytest.raises(ValueError):
        g.slice([0.5, 0.5])


def test_matching_verdicts():
    x = [1.0, 1.0]
    res = matching_check(cases.heptagon_case(), x)
    assert not res.matched
    assert not dispatch_graph(cases.heptagon_case()).slice(x).contains_point(res.witness)
    assert matching_check(cases.heptagon_case(narrow=True), x).matched


def test_auxiliary_region():
    p = cases.translated_union_case()
    assert aux_region_check(p, [0.0, 1.0]).matched
    res = aux_region_check(p, [0.0, 0.0])
    assert not res.matched and res.witness is not None
    Q = aux_region_slice(p, [0.0, 1.0])
    for xi in p.uncertainty.xi_vertices():
        assert Q.contains_point(xi)
    with pytest.raises(SpecNotSeparable):
        aux_region_check(cases.bowtie_case(), [1.0])


def test_bowtie_intervals_and_json():
    t = time.perf_counter()
    iu = rfr_scan_1d(cases.bowtie_case(), 0.8, 2.2)
    assert time.perf_counter() - t < 10
    assert len(iu.intervals) == 2
    (a, b), (c, d) = iu.intervals
    assert (a, b, c, d) == pytest.approx((0.8, 1.0, 2.0, 2.2), abs=1e-6)
    assert 0.9 in iu and 1.5 not in iu
    assert json.loads(iu.to_json())["intervals"][1][0] == pytest.approx(2.0, abs=1e-6)


def test_scan_argument_checks():
    with pytest.raises(ValueError):
        rfr_scan_1d(cases.bowtie_case(), 2.0, 1.0)
    with pytest.raises(ValueError):
        rfr_scan_1d(cases.bowtie_case(), 1.0, 2.0, coarse_step=0)


def test_frozen_set_gives_single_interval():
    p = cases.frozen(cases.bowtie_case(), [1.0])
    iu = rfr_scan_1d(p, 0.8, 2.2, 0.05)
    assert iu.is_convex


def test_convexity_probe_finds_bowtie_gap():
    rep = convexity_probe(cases.bowtie_case(), 60, seed=1, pool=60, stop_at_first=True)
    assert not rep.expected_convex
    assert rep.failures
    a, b, mid = rep.failures[0]
    assert 1.0 < mid[0] < 2.0


def test_convexity_expectation_by_class():
    assert convexity_expected(cases.translated_union_case())
    assert convexity_expected(cases.frozen(cases.bowtie_case(), [1.0]))
    assert not convexity_expected(cases.bowtie_case())


def test_membership_raster():
    rows = membership_raster(cases.translated_union_case(), [0.0], [0.0, 1.0])
    assert [m for _, _, m in rows] == [False, True]
