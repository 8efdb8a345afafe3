"""Cutting-plane solvers: standard Benders / C&CG and their decision-aware variants.

Every solver alternates a master problem over ``(x, t, alpha, ...)`` (``t`` is the
epigraph of ``f``) with the exact oracles. The standard variants freeze the
worst-case scenario ``u*`` found at the current ``x`` into the cut, which is
only valid when ``U`` does not depend on ``x``. The enhanced variants keep
the scenario as a function of ``x``: through the affine coupling for separable
sets, and through an optimality-condition embedding of the coupling argmax for
sets with affine right-hand sides.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import geometry as geo
from . import lp
from .model import (
    AffineRhs,
    EmptyUncertaintyWarning,
    Fixed,
    Separable,
    TsroProblem,
    as_affine_rhs,
    as_separable,
    instantiate_ddus,
)
from .oracles import (
    InnerInfeasible,
    VIOLATION_TOL,
    feasibility_oracle,
    optimality_oracle,
    recourse_value,
    slack_value,
)

ALPHA_FALLBACK = -1e6
UNSOUND_BANNER = ("frozen-scenario cuts are not valid when the uncertainty set depends on x; "
                  "termination status and objective are audited against an enhanced solver")


class NodeBudgetExceeded(RuntimeError):
    pass


class EmbeddingInfeasible(RuntimeError):
    pass


class IncompatibleAlgo(ValueError):
    pass


@dataclass
class SolveOptions:
    max_iter: int = 100
    gap: float = 1e-6
    tol: float = VIOLATION_TOL
    alpha_floor: float | None = None
    node_budget: int = 200_000
    audit: bool = True


# ---------------------------------------------------------------------------
# master problem


@dataclass
class MasterResult:
    status: str  # "optimal" | "infeasible"
    z: np.ndarray | None = None
    objective: float = np.nan
    nodes: int = 0


class MasterProblem:
    """LP rows over a growing variable vector plus complementarity pairs.

    The base variables are ``x`` (indices ``0..n_x-1``), ``t`` and ``alpha``.
    A pair ``(j, r)`` requires ``z_j * (rhs_r - row_r . z) = 0`` for the
    inequality row ``r``.
    """

    def __init__(self, p: TsroProblem, alpha_floor: float):
        self.n_x = p.n_x
        self.t = p.n_x
        self.alpha = p.n_x + 1
        self.n = p.n_x + 2
        self.lb = [-np.inf] * p.n_x + [-np.inf, alpha_floor]
        self.ub = [np.inf] * self.n
        self.rows: list[tuple[dict[int, float], str, float]] = []
        self.pairs: list[tuple[int, int]] = []
        self.blocks: list[tuple[str, int, int]] = []
        for a, e, b in zip(p.X.A, p.X.eq, p.X.b):
            self.add_row({i: v for i, v in enumerate(a) if v != 0.0}, lp.EQ if e else lp.LE, float(b))
        for g, o in zip(p.f.grads, p.f.offsets):
            coef = {i: v for i, v in enumerate(g) if v != 0.0}
            coef[self.t] = -1.0
            self.add_row(coef, lp.LE, -float(o))

    def add_vars(self, name: str, count: int, lb: float = -np.inf, ub: float = np.inf) -> int:
        start = self.n
        self.n += count
        self.lb += [lb] * count
        self.ub += [ub] * count
        self.blocks.append((name, start, count))
        return start

    def add_row(self, coef: dict[int, float], rel: str, rhs: float) -> int:
        self.rows.append((dict(coef), rel, float(rhs)))
        return len(self.rows) - 1

    def add_pair(self, var: int, row: int):
        if self.rows[row][1] != lp.LE:
            raise ValueError("complementarity needs an inequality row")
        self.pairs.append((var, row))

    def _dense(self):
        A = np.zeros((len(self.rows), self.n))
        rel, b = [], np.zeros(len(self.rows))
        for i, (coef, r, rhs) in enumerate(self.rows):
            for j, v in coef.items():
                A[i, j] = v
            rel.append(r)
            b[i] = rhs
        c = np.zeros(self.n)
        c[self.t] = 1.0
        c[self.alpha] = 1.0
        return c, A, rel, b

    def solve(self, node_budget: int = 200_000) -> MasterResult:
        c, A, rel, b = self._dense()
        lb = np.array(self.lb, dtype=float)
        ub = np.array(self.ub, dtype=float)
        if not self.pairs:
            z, obj = _solve_leaf(c, A, rel, b, lb, ub, self.n_x)
            if z is None:
                return MasterResult("infeasible", nodes=1)
            return MasterResult("optimal", z, obj, 1)
        return _branch_and_bound(c, A, rel, b, lb, ub, self.pairs, self.n_x, node_budget)


def _solve_lp(c, A, rel, b, lb, ub):
    return lp.solve(lp.LpProblem(c=c, A=A, rel=rel, b=b, lb=lb, ub=ub))


def _lexmin_on_face(c, A, rel, b, lb, ub, obj, n_x):
    """Among points with objective <= obj (+tol), minimise x_1, then x_2, ..."""
    A2 = np.vstack([A, c])
    rel2 = list(rel) + [lp.LE]
    b2 = np.concatenate([b, [obj + 1e-11 * (1 + abs(obj))]])
    z = None
    for i in range(n_x):
        e = np.zeros(c.size)
        e[i] = 1.0
        out = _solve_lp(e, A2, rel2, b2, lb, ub)
        if not isinstance(out, lp.Optimal):
            break
        z = out.x
        A2 = np.vstack([A2, e])
        rel2.append(lp.LE)
        b2 = np.concatenate([b2, [out.objective + 1e-11 * (1 + abs(out.objective))]])
    if z is not None:
        z = _snap(z, A, rel, b, lb, ub)
    return z


def _snap(z, A, rel, b, lb, ub, tol=1e-8):
    """Resolve the rows and bounds active at ``z`` exactly, undoing the
    small relaxations introduced by the lexicographic pass."""
    n = z.size
    r = A @ z - b
    act = np.array([rl == lp.EQ or abs(ri) <= tol * (1 + abs(bi)) for rl, ri, bi in zip(rel, r, b)], dtype=bool)
    M = [A[act]]
    t = [b[act]]
    for j in range(n):
        for bound in (lb[j], ub[j]):
            if np.isfinite(bound) and abs(z[j] - bound) <= tol * (1 + abs(bound)):
                e = np.zeros(n)
                e[j] = 1.0
                M.append(e[None, :])
                t.append(np.array([bound]))
    M = np.vstack(M)
    t = np.concatenate(t)
    if M.shape[0] == 0 or np.linalg.matrix_rank(M) < n:
        return z
    w = np.linalg.lstsq(M, t, rcond=None)[0]
    if np.max(np.abs(w - z)) > 1e-6:
        return z
    viol = A @ w - b
    ok = all((abs(v) if rl == lp.EQ else v) <= 1e-9 * (1 + abs(bi)) for rl, v, bi in zip(rel, viol, b))
    ok = ok and np.all(w >= lb - 1e-9) and np.all(w <= ub + 1e-9)
    return w + 0.0 if ok else z


def _solve_leaf(c, A, rel, b, lb, ub, n_x):
    out = _solve_lp(c, A, rel, b, lb, ub)
    if isinstance(out, lp.Infeasible):
        return None, np.inf
    if isinstance(out, lp.Unbounded):
        raise RuntimeError("master LP unbounded; check the alpha floor and X")
    z = _lexmin_on_face(c, A, rel, b, lb, ub, out.objective, n_x)
    if z is None:
        z = out.x
    return z, float(c @ z)


def _lex_less(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    for u, v in zip(a, b):
        if u < v - tol:
            return True
        if u > v + tol:
            return False
    return False


def _branch_and_bound(c, A, rel, b, lb, ub, pairs, n_x, node_budget) -> MasterResult:
    """Depth-first search over ``mu_j = 0`` / ``row active`` with LP bounds.

    Equal-objective optima are resolved toward the lexicographically smallest ``x``.
    """
    best_z, best_obj = None, np.inf
    stack = [((), ())]  # (vars fixed to zero, rows forced active)
    nodes = 0
    obj_tol = 1e-7
    while stack:
        zero_vars, active_rows = stack.pop()
        nodes += 1
        if nodes > node_budget:
            raise NodeBudgetExceeded(f"more than {node_budget} branch-and-bound nodes")
        lbn, ubn = lb.copy(), ub.copy()
        for j in zero_vars:
            lbn[j] = max(lbn[j], 0.0)
            ubn[j] = 0.0
        reln = list(rel)
        for r in active_rows:
            reln[r] = lp.EQ
        if np.any(lbn > ubn):
            continue
        out = _solve_lp(c, A, reln, b, lbn, ubn)
        if isinstance(out, lp.Infeasible):
            continue
        if isinstance(out, lp.Unbounded):
            raise RuntimeError("master relaxation unbounded")
        bound = out.objective
        if bound > best_obj + obj_tol * (1 + abs(best_obj)):
            continue
        z = out.x
        worst, which = 0.0, None
        for j, r in pairs:
            if j in zero_vars or r in active_rows:
                continue
            slack = b[r] - A[r] @ z
            v = min(abs(z[j]), abs(slack))
            if v > worst:
                worst, which = v, (j, r)
        if which is None or worst <= 1e-8:
            zl = _lexmin_on_face(c, A, reln, b, lbn, ubn, bound, n_x)
            if zl is not None and _complementary(zl, A, b, pairs):
                z = zl
            obj = float(c @ z)
            if best_z is None or obj < best_obj - obj_tol * (1 + abs(best_obj)) or (
                abs(obj - best_obj) <= obj_tol * (1 + abs(best_obj)) and _lex_less(z[:n_x], best_z[:n_x])
            ):
                best_z, best_obj = z, obj
            continue
        j, r = which
        # pushed last = explored first
        stack.append((zero_vars, active_rows + (r,)))
        stack.append((zero_vars + (j,), active_rows))
    if best_z is None:
        return MasterResult("infeasible", nodes=nodes)
    return MasterResult("optimal", best_z, best_obj, nodes)


def _complementary(z, A, b, pairs, tol=1e-7) -> bool:
    for j, r in pairs:
        if min(abs(z[j]), abs(b[r] - A[r] @ z)) > tol:
            return False
    return True


# ---------------------------------------------------------------------------
# traces


@dataclass
class IterationRecord:
    iter: int
    x: list
    alpha: float
    violation: float | None
    S: float | None
    cut_kind: str | None
    lb: float
    ub: float
    scenario: list | None = None
    multiplier: list | None = None

    def as_dict(self) -> dict:
        return {
            "iter": self.iter,
            "x": self.x,
            "alpha": self.alpha,
            "violation": self.violation,
            "S": self.S,
            "cut_kind": self.cut_kind,
            "lb": self.lb,
            "ub": self.ub,
            "scenario": self.scenario,
            "multiplier": self.multiplier,
        }


@dataclass
class SolveTrace:
    algo: str
    records: list[IterationRecord] = field(default_factory=list)
    status: str = ""
    diagnosis: list[str] = field(default_factory=list)
    banner: str | None = None
    audit: dict = field(default_factory=dict)

    def to_jsonl(self) -> str:
        lines = [json.dumps(_round(r.as_dict())) for r in self.records]
        term = {"status": self.status, "diagnosis": self.diagnosis}
        if self.banner:
            term["banner"] = self.banner
        if self.audit:
            term["audit"] = self.audit
        lines.append(json.dumps(_round(term)))
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_jsonl())


def _round(obj):
    """Round floats to 9 significant digits for stable text output."""
    if isinstance(obj, float):
        if not np.isfinite(obj):
            return None if np.isnan(obj) else ("inf" if obj > 0 else "-inf")
        return float(f"{obj:.9g}")
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.generic):
        return _round(obj.item())
    return obj


@dataclass
class SolveOutcome:
    status: str  # Optimal | RmpInfeasible | Stalled | IterationLimit
    x: np.ndarray | None
    objective: float | None
    iterations: int
    trace: SolveTrace

    @property
    def suboptimal(self) -> bool:
        return bool(self.trace.audit.get("suboptimal"))

    def summary(self) -> dict:
        return _round({
            "algo": self.trace.algo,
            "status": self.status,
            "x": None if self.x is None else [float(v) for v in self.x],
            "objective": self.objective,
            "iterations": self.iterations,
            "audit": self.trace.audit,
        })


# ---------------------------------------------------------------------------
# shared pieces


def alpha_lower_bound(p: TsroProblem) -> float:
    """A value no larger than ``S(x)`` anywhere on ``X``.

    ``S(x) >= min c^T y`` over all ``(x, u, y)`` with ``x in X``, ``u`` in the
    graph of ``U`` and ``y`` recourse-feasible; that LP is solved directly and
    the fallback is used when it is unbounded or infeasible.
    """
    nx, nu, ny = p.n_x, p.n_u, p.n_y
    spec = p.uncertainty
    # variables (x, u, y [, xi])
    extra = 0
    if isinstance(spec, Separable) and len(spec.pieces) == 1:
        extra = spec.E.shape[1]
    elif isinstance(spec, Separable):
        extra = spec.E.shape[1]
    n = nx + nu + ny + extra
    rows, rel, rhs = [], [], []

    def add(a, r, v):
        rows.append(a)
        rel.append(r)
        rhs.append(v)

    for a, e, bb in zip(p.X.A, p.X.eq, p.X.b):
        add(np.concatenate([a, np.zeros(n - nx)]), lp.EQ if e else lp.LE, bb)
    for i in range(p.m):
        add(np.concatenate([p.A[i], p.C[i], p.B[i], np.zeros(extra)]), lp.LE, p.b[i])
    if isinstance(spec, Fixed):
        for a, e, bb in zip(spec.U0.A, spec.U0.eq, spec.U0.b):
            add(np.concatenate([np.zeros(nx), a, np.zeros(ny + extra)]), lp.EQ if e else lp.LE, bb)
    elif isinstance(spec, AffineRhs):
        for i in range(spec.G.shape[0]):
            add(np.concatenate([-spec.H[i], spec.G[i], np.zeros(ny + extra)]), lp.LE, spec.g0[i])
    else:
        hull = spec.hull()
        for a, e, bb in zip(hull.A, hull.eq, hull.b):
            add(np.concatenate([np.zeros(nx + nu + ny), a]), lp.EQ if e else lp.LE, bb)
        for i in range(nu):
            add(np.concatenate([-spec.F[i], np.eye(nu)[i], np.zeros(ny), -spec.E[i]]), lp.EQ, spec.h[i])
    lb = np.concatenate([np.full(nx + nu, -np.inf), np.where(p.y_free, -np.inf, 0.0), np.full(extra, -np.inf)])
    c = np.concatenate([np.zeros(nx + nu), p.c, np.zeros(extra)])
    out = lp.solve(lp.LpProblem(c=c, A=np.array(rows), rel=rel, b=np.array(rhs), lb=lb, ub=np.full(n, np.inf)))
    if isinstance(out, lp.Optimal):
        return float(out.objective)
    return ALPHA_FALLBACK


def _cut_rhs_row(p: TsroProblem, w: np.ndarray, u: np.ndarray, master: MasterProblem, with_alpha: bool):
    """Row ``w^T (b - A x - C u) <= alpha`` (or ``<= 0``) with a frozen ``u``."""
    coef = {i: -float(v) for i, v in enumerate(w @ p.A) if v != 0.0}
    if with_alpha:
        coef[master.alpha] = -1.0
    master.add_row(coef, lp.LE, -float(w @ (p.b - p.C @ u)))


def _add_recourse_block(p: TsroProblem, master: MasterProblem, tag: str,
                        x_coef: np.ndarray, rhs: np.ndarray, u_start: int | None = None,
                        u_coef: np.ndarray | None = None):
    """Rows ``x_coef x + B y + u_coef u <= rhs`` and ``c^T y <= alpha`` for a fresh ``y``."""
    ystart = master.add_vars(tag, p.n_y, lb=0.0)
    for k in range(p.n_y):
        if p.y_free[k]:
            master.lb[ystart + k] = -np.inf
    for i in range(p.m):
        coef = {j: float(v) for j, v in enumerate(x_coef[i]) if v != 0.0}
        for k in range(p.n_y):
            if p.B[i, k] != 0.0:
                coef[ystart + k] = float(p.B[i, k])
        if u_start is not None:
            for k in range(u_coef.shape[1]):
                if u_coef[i, k] != 0.0:
                    coef[u_start + k] = float(u_coef[i, k])
        master.add_row(coef, lp.LE, float(rhs[i]))
    coef = {ystart + k: float(p.c[k]) for k in range(p.n_y) if p.c[k] != 0.0}
    coef[master.alpha] = -1.0
    master.add_row(coef, lp.LE, 0.0)
    return ystart


def _add_argmax_block(p: TsroProblem, spec: AffineRhs, master: MasterProblem, w: np.ndarray, tag: str) -> int:
    """Fresh ``u`` constrained to the maximisers of ``-w^T C u`` over ``U(x)`` (KKT form)."""
    G, g0, H = spec.G, spec.g0, spec.H
    k, nu = G.shape
    us = master.add_vars(f"u_{tag}", nu)
    ms = master.add_vars(f"mu_{tag}", k, lb=0.0)
    prim_rows = []
    for i in range(k):
        coef = {us + j: float(G[i, j]) for j in range(nu) if G[i, j] != 0.0}
        for j in range(p.n_x):
            if H[i, j] != 0.0:
                coef[j] = -float(H[i, j])
        prim_rows.append(master.add_row(coef, lp.LE, float(g0[i])))
    d = -(p.C.T @ w)  # maximise d^T u
    for j in range(nu):
        coef = {ms + i: float(G[i, j]) for i in range(k) if G[i, j] != 0.0}
        master.add_row(coef, lp.EQ, float(d[j]))
    for i in range(k):
        master.add_pair(ms + i, prim_rows[i])
    return us


def _fmt(v):
    return None if v is None else [float(t) for t in np.asarray(v).ravel()]


def _objective(p: TsroProblem, x, S):
    return float(p.f(x) + S)


def _incumbent_value(p: TsroProblem, x) -> tuple[bool, float | None]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyUncertaintyWarning)
        fv = feasibility_oracle(p, x)
        if not fv.robust:
            return False, None
        return True, _objective(p, x, optimality_oracle(p, x).value)


# ---------------------------------------------------------------------------
# main loop


def _loop(p: TsroProblem, opts: SolveOptions, algo: str,
          add_fea: Callable, add_opt: Callable, oracle: Callable) -> SolveOutcome:
    floor = opts.alpha_floor if opts.alpha_floor is not None else alpha_lower_bound(p)
    master = MasterProblem(p, floor)
    trace = SolveTrace(algo)
    lb_val, ub_val = -np.inf, np.inf
    best_x = None
    seen_keys: set = set()
    status = "IterationLimit"
    it = 0
    for it in range(1, opts.max_iter + 1):
        res = master.solve(opts.node_budget)
        if res.status != "optimal":
            status = "RmpInfeasible"
            trace.diagnosis.append(f"master problem infeasible at iteration {it}")
            trace.records.append(IterationRecord(it, [], float("nan"), None, None, None, lb_val, ub_val))
            break
        z = res.z
        x = z[: p.n_x].copy()
        alpha = float(z[master.alpha])
        lb_val = max(lb_val, res.objective)
        kind, violation, S, scen, mult, key = oracle(x, alpha)
        rec = IterationRecord(it, _fmt(x), alpha, violation, S, None, lb_val, ub_val, _fmt(scen), _fmt(mult))
        if S is not None and violation is not None and violation <= opts.tol:
            val = _objective(p, x, S)
            if val < ub_val - 1e-12:
                ub_val, best_x = val, x
            rec.ub = ub_val
            if S <= alpha + opts.gap or ub_val - lb_val <= opts.gap:
                trace.records.append(rec)
                status = "Optimal"
                break
        if key in seen_keys:
            trace.records.append(rec)
            status = "Stalled"
            trace.diagnosis.append(f"iteration {it} re-identified an already added scenario")
            break
        seen_keys.add(key)
        if kind == "fea":
            rec.cut_kind = add_fea(master, x, scen, mult)
        else:
            rec.cut_kind = add_opt(master, x, scen, mult)
        trace.records.append(rec)
    trace.status = status
    x_out = best_x if status == "Optimal" else None
    obj = ub_val if status == "Optimal" else None
    if status == "IterationLimit":
        trace.diagnosis.append(f"no convergence within {opts.max_iter} iterations")
        x_out = best_x
        obj = None if best_x is None else ub_val
    return SolveOutcome(status, x_out, obj, it, trace)


def _u_oracle(p: TsroProblem):
    """Standard and argmax-embedding oracle: scenario ``u`` plus dual multiplier."""

    def oracle(x, alpha):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", EmptyUncertaintyWarning)
            fv = feasibility_oracle(p, x)
            if not fv.robust:
                key = ("fea", tuple(np.round(fv.worst_u, 7)), tuple(np.round(x, 7)))
                return "fea", fv.violation, None, fv.worst_u, fv.dual_xi, key
            ov = optimality_oracle(p, x)
        u = ov.worst_u if ov.worst_u is not None else np.zeros(p.n_u)
        key = ("opt", tuple(np.round(u, 7)), tuple(np.round(x, 7)))
        return "opt", fv.violation, ov.value, u, ov.dual_pi, key

    return oracle


def standard_benders(p: TsroProblem, opts: SolveOptions | None = None) -> SolveOutcome:
    opts = opts or SolveOptions()

    def add_fea(master, x, u, xi):
        _cut_rhs_row(p, xi, u, master, with_alpha=False)
        return "benders_fea"

    def add_opt(master, x, u, pi):
        _cut_rhs_row(p, pi, u, master, with_alpha=True)
        return "benders_opt"

    out = _loop(p, opts, "benders", add_fea, add_opt, _u_oracle(p))
    return _finish_standard(p, out, opts)


def standard_ccg(p: TsroProblem, opts: SolveOptions | None = None) -> SolveOutcome:
    opts = opts or SolveOptions()
    counter = [0]

    def add_block(master, x, u, _mult):
        counter[0] += 1
        _add_recourse_block(p, master, f"y{counter[0]}", p.A, p.b - p.C @ u)
        return "ccg"

    out = _loop(p, opts, "ccg", add_block, add_block, _u_oracle(p))
    return _finish_standard(p, out, opts)


def enhanced_ccg(p: TsroProblem, opts: SolveOptions | None = None) -> SolveOutcome:
    spec = p.uncertainty
    if isinstance(spec, Fixed):
        spec = as_separable(spec, p.n_x)
        p = p.with_uncertainty(spec)
    if not isinstance(spec, Separable):
        raise IncompatibleAlgo("enhanced C&CG needs a separable uncertainty spec")
    opts = opts or SolveOptions()
    XiV = spec.xi_vertices()
    counter = [0]

    def oracle(x, alpha):
        # worst support vertex through the coupling; feasibility first
        best = None
        for idx, xi in enumerate(XiV):
            val, _ = slack_value(p, x, spec(xi, x))
            if best is None or val > best[0] + 1e-9:
                best = (val, idx)
        if best[0] > opts.tol:
            idx = best[1]
            return "fea", best[0], None, XiV[idx], None, idx
        best = None
        for idx, xi in enumerate(XiV):
            val, _, _ = recourse_value(p, x, spec(xi, x))
            if best is None or val > best[0] + 1e-9:
                best = (val, idx)
        idx = best[1]
        return "opt", 0.0, best[0], XiV[idx], None, idx

    def add_block(master, x, xi, _mult):
        counter[0] += 1
        # A x + B y + C (E xi + F x + h) <= b
        _add_recourse_block(p, master, f"y{counter[0]}", p.A + p.C @ spec.F,
                            p.b - p.C @ (spec.E @ xi + spec.h))
        return "enhanced_ccg"

    out = _loop(p, opts, "e-ccg", add_block, add_block, oracle)
    _certify(p, out)
    return out


def enhanced_benders(p: TsroProblem, opts: SolveOptions | None = None) -> SolveOutcome:
    spec = p.uncertainty
    if isinstance(spec, Fixed):
        spec = as_affine_rhs(spec, p.n_x)
        p = p.with_uncertainty(spec)
    if not isinstance(spec, AffineRhs):
        raise IncompatibleAlgo("enhanced Benders needs an affine right-hand-side uncertainty spec")
    opts = opts or SolveOptions()
    counter = [0]

    def oracle(x, alpha):
        kind, viol, S, u, mult, _ = _u_oracle(p)(x, alpha)
        # the cut depends on the multiplier only; u is re-optimised inside the master
        key = (kind, tuple(np.round(mult, 7)))
        return kind, viol, S, u, mult, key

    # with H = 0 the set does not move, every maximiser gives the same cut and
    # the argmax can be computed once instead of embedded
    static = not spec.H.any()

    def add(master, x, u, w, with_alpha):
        counter[0] += 1
        if static:
            _, u_star = geo.support(instantiate_ddus(spec, x), -(p.C.T @ w), lexmin=True)
            _cut_rhs_row(p, w, u_star, master, with_alpha)
            return
        us = _add_argmax_block(p, spec, master, w, str(counter[0]))
        # w^T (b - A x - C u_j) <= alpha (or 0)
        coef = {i: -float(v) for i, v in enumerate(w @ p.A) if v != 0.0}
        wc = w @ p.C
        for j in range(p.n_u):
            if wc[j] != 0.0:
                coef[us + j] = -float(wc[j])
        if with_alpha:
            coef[master.alpha] = -1.0
        master.add_row(coef, lp.LE, -float(w @ p.b))

    def add_fea(master, x, u, xi):
        add(master, x, u, xi, False)
        return "enhanced_benders_fea"

    def add_opt(master, x, u, pi):
        add(master, x, u, pi, True)
        return "enhanced_benders_opt"

    out = _loop(p, opts, "e-benders", add_fea, add_opt, oracle)
    _certify(p, out)
    return out


def _certify(p: TsroProblem, out: SolveOutcome):
    if out.status != "Optimal":
        return
    ok, val = _incumbent_value(p, out.x)
    out.trace.audit = {"robust_feasible": ok, "objective_recomputed": val}
    if not ok:
        out.trace.diagnosis.append("incumbent failed the feasibility oracle")


def _finish_standard(p: TsroProblem, out: SolveOutcome, opts: SolveOptions) -> SolveOutcome:
    if isinstance(p.uncertainty, Fixed):
        _certify(p, out)
        return out
    out.trace.banner = UNSOUND_BANNER
    if not opts.audit:
        return out
    audit: dict = {}
    if out.status == "Optimal":
        ok, val = _incumbent_value(p, out.x)
        audit["robust_feasible"] = ok
        audit["objective_recomputed"] = val
    ref = reference_solve(p)
    if ref is not None:
        audit["reference_algo"] = ref.trace.algo
        audit["reference_status"] = ref.status
        audit["reference_objective"] = ref.objective
        audit["reference_x"] = None if ref.x is None else [float(v) for v in ref.x]
        if out.status == "RmpInfeasible" and ref.status == "Optimal":
            audit["misdiagnosed_infeasible"] = True
            out.trace.diagnosis.append(
                "reported infeasible, but a robust-feasible solution exists "
                f"(x={audit['reference_x']}, objective {ref.objective:.9g})")
        if out.status == "Optimal" and ref.status == "Optimal" and out.objective > ref.objective + opts.gap:
            audit["suboptimal"] = True
            out.trace.diagnosis.append(
                f"suboptimal: objective {out.objective:.9g} vs {ref.objective:.9g} at x={_round(audit['reference_x'])}")
        if ref.x is not None:
            audit["cuts_excluding_reference"] = _cuts_cutting_off(p, out, ref.x)
    out.trace.audit = audit
    return out


def _cuts_cutting_off(p: TsroProblem, out: SolveOutcome, x_ref) -> list[int]:
    """Iterations whose frozen-scenario cut removes the robust-feasible point ``x_ref``
    (with ``alpha`` at its true value ``S(x_ref)``)."""
    ok, val = _incumbent_value(p, x_ref)
    if not ok:
        return []
    S_ref = val - p.f(x_ref)
    bad = []
    for rec in out.trace.records:
        if rec.cut_kind is None or rec.scenario is None:
            continue
        u = np.asarray(rec.scenario)
        r = p.rhs(x_ref, u)
        if rec.cut_kind == "benders_fea":
            cut_off = float(np.asarray(rec.multiplier) @ r) > VIOLATION_TOL
        elif rec.cut_kind == "benders_opt":
            cut_off = float(np.asarray(rec.multiplier) @ r) > S_ref + VIOLATION_TOL
        else:
            try:
                cut_off = recourse_value(p, x_ref, u)[0] > S_ref + VIOLATION_TOL
            except InnerInfeasible:
                cut_off = True
        if cut_off:
            bad.append(rec.iter)
    return bad


def reference_solve(p: TsroProblem) -> SolveOutcome | None:
    """Sound solver for the problem's uncertainty class, used to audit the standard ones."""
    spec = p.uncertainty
    opts = SolveOptions(audit=False)
    if isinstance(spec, Separable):
        return enhanced_ccg(p, opts)
    if isinstance(spec, AffineRhs):
        return enhanced_benders(p, opts)
    return None


ALGORITHMS = {
    "benders": standard_benders,
    "ccg": standard_ccg,
    "e-ccg": enhanced_ccg,
    "e-benders": enhanced_benders,
}


def solve(p: TsroProblem, algo: str, opts: SolveOptions | None = None) -> SolveOutcome:
    try:
        fn = ALGORITHMS[algo]
    except KeyError:
        raise IncompatibleAlgo(f"unknown algorithm {algo!r}") from None
    return fn(p, opts)
