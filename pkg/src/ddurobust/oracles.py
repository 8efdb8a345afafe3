"""Exact worst-case subproblems by vertex enumeration of ``U(x)``.

Both the slack value ``R(x,u)`` and the inner recourse cost are convex in
``u``, so their maxima over the polytope ``U(x)`` sit at vertices. Vertices are
visited in lexicographic order and a later vertex only replaces the incumbent
when it is strictly worse, which makes the reported scenario the lexicographic
minimum among ties.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from . import lp
from .model import (
    TsroProblem,
    coupling_argmax,
    ddus_vertices,
    pi_support,
    xi_support,
)

VIOLATION_TOL = 1e-7
TIE_TOL = 1e-9


class InnerInfeasible(Exception):
    def __init__(self, u: np.ndarray):
        super().__init__(f"recourse infeasible at vertex u={np.asarray(u).tolist()}")
        self.u = u


@dataclass
class FeasibilityVerdict:
    violation: float
    worst_u: np.ndarray | None
    dual_xi: np.ndarray
    vacuous: bool = False  # U(x) empty

    @property
    def robust(self) -> bool:
        return self.violation <= VIOLATION_TOL


@dataclass
class OptimalityVerdict:
    value: float
    worst_u: np.ndarray | None
    dual_pi: np.ndarray
    inner_y: np.ndarray | None
    vacuous: bool = False


def slack_value(p: TsroProblem, x, u) -> tuple[float, np.ndarray]:
    """``R(x,u)`` and its dual multiplier (a point of Xi)."""
    out = lp.solve(p.slack_lp(x, u))
    if not isinstance(out, lp.Optimal):  # pragma: no cover - slack LP is always feasible and bounded
        raise RuntimeError(f"slack LP returned {out.status}")
    return max(out.objective, 0.0), out.duals


def recourse_value(p: TsroProblem, x, u) -> tuple[float, np.ndarray, np.ndarray]:
    """``min c^T y`` over ``Y(x,u)`` with its primal and dual solutions."""
    out = lp.solve(p.inner_lp(x, u))
    if isinstance(out, lp.Infeasible):
        raise InnerInfeasible(np.asarray(u, dtype=float))
    if isinstance(out, lp.Unbounded):
        raise RuntimeError("recourse LP unbounded; Y(x,u) must be bounded")
    return out.objective, out.x, out.duals


def feasibility_oracle(p: TsroProblem, x) -> FeasibilityVerdict:
    x = np.asarray(x, dtype=float).ravel()
    V = ddus_vertices(p.uncertainty, x)
    if len(V) == 0:
        return FeasibilityVerdict(0.0, None, np.zeros(p.m), vacuous=True)
    best = None
    for u in V:
        val, xi = slack_value(p, x, u)
        if best is None or val > best[0] + TIE_TOL:
            best = (val, u, xi)
    val, u, xi = best
    return FeasibilityVerdict(val, u.copy(), xi)


def optimality_oracle(p: TsroProblem, x) -> OptimalityVerdict:
    x = np.asarray(x, dtype=float).ravel()
    V = ddus_vertices(p.uncertainty, x)
    if len(V) == 0:
        return OptimalityVerdict(0.0, None, np.zeros(p.m), None, vacuous=True)
    best = None
    for u in V:
        val, y, pi = recourse_value(p, x, u)
        if best is None or val > best[0] + TIE_TOL:
            best = (val, u, pi, y)
    val, u, pi, y = best
    return OptimalityVerdict(val, u.copy(), pi, y)


# ---------------------------------------------------------------------------
# dual-side sweeps (independent path)


def surrogate_violation(p: TsroProblem, x, xi_vertices: np.ndarray | None = None) -> tuple[float, np.ndarray | None]:
    """``max over vertices xi of Xi of xi^T (b - A x - C C_fea(xi, x))``."""
    x = np.asarray(x, dtype=float).ravel()
    if xi_vertices is None:
        xi_vertices = geo.vertices(xi_support(p)).points
    best, arg = -np.inf, None
    for xi in xi_vertices:
        u = coupling_argmax(p, xi, x)
        if u is None:
            return 0.0, None
        v = float(xi @ p.rhs(x, u))
        if v > best + TIE_TOL:
            best, arg = v, xi
    return max(best, 0.0), arg


def surrogate_cost(p: TsroProblem, x, pi_vertices: np.ndarray | None = None) -> tuple[float, np.ndarray | None]:
    """``max over vertices pi of Pi of pi^T (b - A x - C C_opt(pi, x))``.

    Valid for robust-feasible ``x`` even when Pi is unbounded: Pi is pointed
    and every recession direction is non-improving there.
    """
    x = np.asarray(x, dtype=float).ravel()
    if pi_vertices is None:
        pi_vertices = geo.vertices(pi_support(p).polyhedron, check_bounded=False).points
    best, arg = -np.inf, None
    for pi in pi_vertices:
        u = coupling_argmax(p, pi, x)
        if u is None:
            return 0.0, None
        v = float(pi @ p.rhs(x, u))
        if v > best + TIE_TOL:
            best, arg = v, pi
    return best, arg


@dataclass
class CrosscheckReport:
    n_points: int = 0
    membership_mismatches: list = field(default_factory=list)
    value_mismatches: list = field(default_factory=list)
    cost_mismatches: list = field(default_factory=list)
    members: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.membership_mismatches or self.value_mismatches or self.cost_mismatches)


def crosscheck_theorem1(p: TsroProblem, xs, tol: float = 1e-6, *, check_cost: bool = True) -> CrosscheckReport:
    """Compare the direct ``U(x)`` sweep with the dual-support surrogate sweep at each ``x``."""
    rep = CrosscheckReport()
    xi_v = geo.vertices(xi_support(p)).points
    pi_v = geo.vertices(pi_support(p).polyhedron, check_bounded=False).points if check_cost else None
    for x in np.atleast_2d(np.asarray(xs, dtype=float)):
        rep.n_points += 1
        fv = feasibility_oracle(p, x)
        sv, _ = surrogate_violation(p, x, xi_v)
        m1, m2 = fv.robust, sv <= VIOLATION_TOL
        rep.members.append(m1)
        if m1 != m2:
            rep.membership_mismatches.append((x.tolist(), fv.violation, sv))
        if abs(fv.violation - sv) > tol:
            rep.value_mismatches.append((x.tolist(), fv.violation, sv))
        if check_cost and m1 and not fv.vacuous:
            ov = optimality_oracle(p, x)
            sc, _ = surrogate_cost(p, x, pi_v)
            if abs(ov.value - sc) > tol * (1 + abs(ov.value)):
                rep.cost_mismatches.append((x.tolist(), ov.value, sc))
    return rep
