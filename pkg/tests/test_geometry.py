import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

from ddurobust import geometry as geo
from ddurobust.geometry import Polyhedron

from conftest import random_polytope


def test_cube_vertices_and_projection():
    P = Polyhedron.box([0, 0, 0], [1, 2, 3])
    V = geo.vertices(P).points
    assert len(V) == 8
    Q = geo.project(P, [0, 2])
    assert sorted(map(tuple, geo.vertices(Q).points)) == [(0, 0), (0, 3), (1, 0), (1, 3)]


def test_emptiness_certificate():
    P = Polyhedron.from_rows([[1.0, 0.0], [-1.0, 0.0]], [1.0, -2.0])
    res = geo.is_empty(P)
    assert isinstance(res, geo.Empty)
    assert geo.verify_certificate(P, res.certificate)
    assert isinstance(geo.is_empty(Polyhedron.box([0], [1])), geo.NonEmpty)


def test_support_and_lexmin():
    P = Polyhedron.box([0, 0], [1, 1])
    val, z = geo.support(P, [1.0, 0.0], lexmin=True)
    assert val == pytest.approx(1.0)
    assert z == pytest.approx([1.0, 0.0])


def test_unbounded_support_raises():
    P = Polyhedron.from_rows([[-1.0, 0.0], [0.0, -1.0]], [0.0, 0.0])
    with pytest.raises(geo.Unbounded):
        geo.support(P, [1.0, 1.0])
    assert not geo.is_bounded(P)[0]


def test_vertex_budget():
    P = Polyhedron.box(np.zeros(8), np.ones(8))
    with pytest.raises(geo.DimensionTooLarge):
        geo.vertices(P, budget=100)


def test_containment_witness():
    outer = Polyhedron.box([0, 0], [1, 1])
    inner = Polyhedron.box([0.5, 0.5], [1.5, 1.0])
    res = geo.contains(outer, inner)
    assert not res.holds
    assert not outer.contains_point(res.point)
    assert geo.contains(outer, Polyhedron.box([0.2, 0.2], [0.8, 0.8])).holds


def test_nearest_point_matches_projection_formula():
    P = Polyhedron.box([0, 0], [1, 1])
    assert geo.nearest_point(P, [2.0, 0.5]) == pytest.approx([1.0, 0.5])
    assert geo.nearest_point(P, [-1.0, -3.0]) == pytest.approx([0.0, 0.0])


def test_equality_elimination_in_projection():
    # {(a, b, c) : a + b = 1, c = a, 0 <= a, b, c <= 1} onto (b, c)
    P = Polyhedron.from_rows(np.vstack([np.eye(3), -np.eye(3)]), np.r_[np.ones(3), np.zeros(3)],
                             [[1.0, 1.0, 0.0], [1.0, 0.0, -1.0]], [1.0, 0.0])
    Q = geo.project(P, [1, 2])
    V = sorted(map(tuple, np.round(geo.vertices(Q).points, 9)))
    assert V == [(0.0, 1.0), (1.0, 0.0)]


def _fm_matches_vertex_hull(P, keep, directions):
    Q = geo.project(P, keep)
    pts = geo.vertices(P).points[:, keep]
    for d in directions:
        val, _ = geo.support(Q, d)
        assert val == pytest.approx(float(np.max(pts @ d)), abs=1e-7)
    return Q, pts


def test_fm_projection_equals_vertex_hull_on_random_polytopes():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        P, _ = random_polytope(rng, dim=3, n_points=int(rng.integers(4, 10)))
        dirs = rng.normal(size=(12, 2))
        Q, pts = _fm_matches_vertex_hull(P, [0, 1], dirs)
        # independent hull check: every projected vertex satisfies the FM rows,
        # and every vertex of the FM polygon is a vertex of the hull of the projected points
        assert np.all(Q.A @ pts.T - Q.b[:, None] <= 1e-7)
        hull_pts = pts[ConvexHull(pts).vertices]
        for v in geo.vertices(Q).points:
            assert np.min(np.linalg.norm(hull_pts - v, axis=1)) <= 1e-7


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([[0], [1, 2], [0, 2]]))
def test_projection_contains_projected_points(seed, keep):
    rng = np.random.default_rng(seed)
    P, _ = random_polytope(rng, dim=3, n_points=6)
    Q = geo.project(P, keep)
    for v in geo.vertices(P).points:
        assert Q.contains_point(v[keep], tol=1e-7)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_vertices_satisfy_rows_and_span_support(seed):
    rng = np.random.default_rng(seed)
    P, _ = random_polytope(rng, dim=3, n_points=7)
    V = geo.vertices(P).points
    assert np.all(P.A @ V.T - P.b[:, None] <= 1e-7)
    d = rng.normal(size=3)
    assert geo.support(P, d)[0] == pytest.approx(float(np.max(V @ d)), abs=1e-7)


def test_points_csv_header(tmp_path):
    path = tmp_path / "v.csv"
    geo.write_points_csv([[1.0, 2.0]], path)
    assert path.read_text().splitlines()[0] == "dim_0,dim_1"
