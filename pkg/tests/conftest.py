import numpy as np
import pytest

from ddurobust.geometry import Polyhedron
from ddurobust.model import Fixed, PiecewiseLinearConvexCost, TsroProblem


def random_fixed_problem(seed: int) -> TsroProblem:
    """Small decision-independent instance with complete recourse.

    Penalised slack columns keep every ``(x, u)`` recourse-feasible and the
    slack bounds keep the recourse polytope bounded.
    """
    rng = np.random.default_rng(seed)
    nx, nu, ny, m = int(rng.integers(1, 3)), 2, 3, 4
    X = Polyhedron.box(np.zeros(nx), np.full(nx, 3.0))
    f = PiecewiseLinearConvexCost.linear(rng.uniform(0.5, 2, nx))
    Bm = rng.uniform(-1, 1, (m, ny))
    Cm = rng.uniform(-1, 1, (m, nu))
    Am = -rng.uniform(0, 1, (m, nx))
    bm = rng.uniform(0, 2, m)
    B = np.vstack([np.hstack([Bm, -np.eye(m)]),
                   np.hstack([np.eye(ny), np.zeros((ny, m))]),
                   np.hstack([np.zeros((m, ny)), np.eye(m)])])
    A = np.vstack([Am, np.zeros((ny + m, nx))])
    C = np.vstack([Cm, np.zeros((ny + m, nu))])
    b = np.concatenate([bm, np.full(ny, 5.0), np.full(m, 50.0)])
    c = np.concatenate([rng.uniform(-1, 1, ny), rng.uniform(2, 4, m)])
    G = rng.normal(size=(5, nu))
    g = np.abs(rng.normal(size=5)) + 0.5
    U0 = Polyhedron.from_rows(np.vstack([G, np.eye(nu), -np.eye(nu)]), np.concatenate([g, np.full(2 * nu, 2.0)]))
    return TsroProblem(X, f, A, B, C, b, c, Fixed(U0), name=f"random-fixed-{seed}")


def random_polytope(rng, dim=3, n_points=8) -> tuple[Polyhedron, np.ndarray]:
    """Hull of random points, as a bounding box cut by random halfspaces through it."""
    rows = rng.normal(size=(n_points, dim))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    h = rng.uniform(0.5, 1.5, n_points)
    P = Polyhedron.from_rows(np.vstack([rows, np.eye(dim), -np.eye(dim)]),
                             np.concatenate([h, np.full(2 * dim, 2.0)]))
    return P, rows


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        title, ok, detail = RESULTS[n]
        line = f"ACCEPTANCE {n:2d} {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
