"""Small hand-checkable instances used by the CLI ``repro`` command and the tests.

All of them share a two-variable recourse ``y in [-1,1]^2`` that has to route
an interval ``u1 <= y1 + y2 <= u2``; only the uncertainty set, the first-stage
set and the costs change.
"""

from __future__ import annotations

import numpy as np

from .geometry import Polyhedron
from .model import AffineRhs, Fixed, PiecewiseLinearConvexCost, Separable, TsroProblem, instantiate_ddus


def interval_recourse(n_x: int = 1, x_slack: float = 0.0):
    """Rows of ``-1 <= y <= 1``, ``u1 - s x <= y1 + y2 <= u2 + s x`` as ``(A, B, C, b)``.

    With ``x_slack = s > 0`` the routing window widens with every first-stage unit.
    """
    B = np.array([[-1, 0], [1, 0], [0, -1], [0, 1], [-1, -1], [1, 1]], dtype=float)
    C = np.array([[0, 0], [0, 0], [0, 0], [0, 0], [1, 0], [0, -1]], dtype=float)
    b = np.array([1, 1, 1, 1, 0, 0], dtype=float)
    A = np.zeros((6, n_x))
    A[4, :] = -x_slack
    A[5, :] = -x_slack
    return A, B, C, b


def _problem(X, f, spec, *, c=(0.0, 0.0), x_slack=0.0, name=""):
    A, B, C, b = interval_recourse(X.dim, x_slack)
    return TsroProblem(X=X, f=f, A=A, B=B, C=C, b=b, c=np.asarray(c, dtype=float),
                       uncertainty=spec, y_free=np.array([True, True]), name=name)


def heptagon_ddus(narrow: bool = False) -> AffineRhs:
    """Six-row polytope in ``u`` whose right-hand side is affine in ``x in R^2``.

    ``narrow`` replaces the first row ``u1 <= 7 x1 + 8 x2`` by ``u1 <= x1 + x2``.
    """
    G = np.array([[1, 0], [0, 1], [-1, 2], [1, 1], [4, -7], [-8, -3]], dtype=float)
    g0 = np.array([0, 0, 8, 13, -25, -40], dtype=float)
    H = np.array([[7, 8], [0, 13], [0, 15], [7, 2], [21, 11], [0, 0]], dtype=float)
    if narrow:
        H[0] = [1, 1]
    return AffineRhs(G, g0, H)


def heptagon_case(narrow: bool = False, c=(0.0, 0.0)) -> TsroProblem:
    X = Polyhedron.box([0, 0], [1, 1], names=["x1", "x2"])
    name = "heptagon-narrow" if narrow else "heptagon"
    return _problem(X, PiecewiseLinearConvexCost.zero(2), heptagon_ddus(narrow), c=c, name=name)


def translated_union_case(half_width: float = 3.0) -> TsroProblem:
    """``U(x) = x + Xi`` with ``Xi = [0,1]^2 U [-1,0]^2`` (nonconvex support)."""
    X = Polyhedron.box([-half_width] * 2, [half_width] * 2, names=["x1", "x2"])
    Xi = (Polyhedron.box([0, 0], [1, 1], names=["xi1", "xi2"]),
          Polyhedron.box([-1, -1], [0, 0], names=["xi1", "xi2"]))
    spec = Separable(Xi, np.eye(2), np.eye(2), np.zeros(2))
    return _problem(X, PiecewiseLinearConvexCost.zero(2), spec, name="translated-union")


def bowtie_ddus() -> AffineRhs:
    """Polytope in ``u`` driven by a scalar ``x``; it pokes out of the routing window for ``1 < x < 2``."""
    G = np.array([[1, 0], [1, 0], [0, 1], [-1, 2], [1, 1], [4, -7], [-8, -3],
                  [1, 0], [-1, 0], [0, 1], [0, -1]], dtype=float)
    g0 = np.array([6, 0, 0, 8, 31, -25, -20, 3, 0, 13, -8], dtype=float)
    H = np.array([[-2], [2], [13], [15], [-9], [32], [0], [0], [0], [0], [0]], dtype=float)
    return AffineRhs(G, g0, H)


def bowtie_case(cost_center: float | None = None) -> TsroProblem:
    X = Polyhedron.box([0.8], [2.2], names=["x"])
    f = PiecewiseLinearConvexCost.zero(1) if cost_center is None else PiecewiseLinearConvexCost.abs_dev([cost_center])
    return _problem(X, f, bowtie_ddus(), name="bowtie" if cost_center is None else "bowtie-abs")


def bowtie_abs_case() -> TsroProblem:
    """Minimise ``|x - 1.5|`` over the robust feasible part of ``[0.8, 2.2]``."""
    return bowtie_case(1.5)


def widening_window_case() -> TsroProblem:
    """As ``bowtie_abs_case`` but the routing window widens by ``0.5 x`` on both sides."""
    X = Polyhedron.box([0.8], [2.2], names=["x"])
    return _problem(X, PiecewiseLinearConvexCost.abs_dev([1.5]), bowtie_ddus(), x_slack=0.5, name="widening-window")


def frozen(p: TsroProblem, x) -> TsroProblem:
    """Same problem with ``U`` frozen to its instance at ``x`` (decision independent)."""
    U0 = instantiate_ddus(p.uncertainty, x)
    return p.with_uncertainty(Fixed(U0))


# identifiers accepted by ``ddurobust repro``
REPRO_CASES = {
    8: "heptagon",
    9: "heptagon-narrow",
    10: "translated-union",
    11: "bowtie",
    12: "bowtie-abs",
    13: "widening-window",
}
