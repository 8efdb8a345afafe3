"""Dense two-phase simplex with Bland's rule.

The solver works on a full tableau. Variables with general bounds are
shifted/split into nonnegative standard-form columns, every row gets a slack
(if it is an inequality) and an artificial, and phase one drives the
artificials to zero. Dual multipliers are recovered from the final basis by a
fresh linear solve so they do not inherit tableau round-off.

Sign conventions for the reported multipliers ``duals``: they satisfy
``c - A^T y = d`` where ``d`` are the reduced costs of the original
variables, and ``objective == b^T y + sum_j d_j * (bound active at j)``.
For a minimisation a ``<=`` row has ``y <= 0`` and a ``>=`` row ``y >= 0``;
for a maximisation the signs flip.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

LE, EQ, GE = "<=", "=", ">="
_RELATIONS = (LE, EQ, GE)

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
DEFAULT_ITER_BUDGET = 50_000


class CycleBudgetExceeded(RuntimeError):
    """Raised when the pivot count exceeds the configured budget."""


@dataclass
class LpProblem:
    """``min|max c^T x`` s.t. ``A x (rel) b``, ``lb <= x <= ub``.

    Omitted bounds default to ``x >= 0``.
    """

    c: np.ndarray
    A: np.ndarray
    rel: list[str]
    b: np.ndarray
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None
    sense: str = "min"

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float).ravel()
        m = self.A.shape[0]
        if isinstance(self.rel, str):
            self.rel = [self.rel] * m
        self.rel = list(self.rel)
        if len(self.rel) != m or self.b.size != m:
            raise ValueError(f"row count mismatch: A has {m}, rel {len(self.rel)}, b {self.b.size}")
        for r in self.rel:
            if r not in _RELATIONS:
                raise ValueError(f"unknown relation {r!r}")
        self.lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float).ravel()
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).ravel()
        if self.lb.size != n or self.ub.size != n:
            raise ValueError("bound vectors must match the objective length")
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))):
            raise ValueError("coefficients must be finite")
        if np.any(self.lb > self.ub):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def m(self) -> int:
        return self.A.shape[0]


@dataclass
class Optimal:
    x: np.ndarray
    objective: float
    duals: np.ndarray  # one per row, see module docstring
    reduced_costs: np.ndarray
    status: str = field(default="optimal", init=False)

    def dual_objective(self, p: LpProblem) -> float:
        """Objective of the dual built from ``duals`` and the bound terms."""
        val = float(p.b @ self.duals)
        for j, d in enumerate(self.reduced_costs):
            if abs(d) <= 1e-12:
                continue
            # the bound that carries the reduced cost; min: d>0 -> lower, max: flipped
            use_lb = (d > 0) == (p.sense == "min")
            bound = p.lb[j] if use_lb else p.ub[j]
            if np.isfinite(bound):
                val += d * bound
        return val


@dataclass
class Infeasible:
    """Farkas certificate in ``<=`` orientation.

    ``row_mult`` has ``>= 0`` entries on ``<=`` rows, ``<= 0`` on ``>=`` rows
    and free entries on equalities, and with ``lower_mult, upper_mult >= 0``:
    ``A^T row_mult + upper_mult - lower_mult = 0`` and
    ``b^T row_mult + ub^T upper_mult - lb^T lower_mult < 0``.
    """

    row_mult: np.ndarray
    lower_mult: np.ndarray
    upper_mult: np.ndarray
    status: str = field(default="infeasible", init=False)


@dataclass
class Unbounded:
    """Feasible point plus a ray that keeps feasibility and improves the objective."""

    x: np.ndarray
    ray: np.ndarray
    status: str = field(default="unbounded", init=False)


LpOutcome = Optimal | Infeasible | Unbounded


# ---------------------------------------------------------------------------
# standard form


@dataclass
class _StdForm:
    G: np.ndarray  # rows in terms of the nonnegative z
    h: np.ndarray
    rel: list[str]
    cz: np.ndarray
    const: float
    # x = shift + T z
    shift: np.ndarray
    T: np.ndarray
    n_user_rows: int
    ub_row_var: list[int]  # original variable for each appended upper-bound row


def _to_standard(p: LpProblem) -> _StdForm:
    n = p.n
    cols: list[tuple[int, float]] = []  # (orig var, sign)
    shift = np.zeros(n)
    ub_rows: list[tuple[int, int, float]] = []  # (z col, orig var, rhs)
    for j in range(n):
        lo, hi = p.lb[j], p.ub[j]
        if np.isfinite(lo):
            shift[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                ub_rows.append((len(cols) - 1, j, hi - lo))
        elif np.isfinite(hi):
            shift[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    nz = len(cols)
    T = np.zeros((n, nz))
    for k, (j, s) in enumerate(cols):
        T[j, k] = s
    c = p.c if p.sense == "min" else -p.c
    G_user = p.A @ T
    h_user = p.b - p.A @ shift
    G_ub = np.zeros((len(ub_rows), nz))
    h_ub = np.zeros(len(ub_rows))
    for i, (k, _j, r) in enumerate(ub_rows):
        G_ub[i, k] = 1.0
        h_ub[i] = r
    return _StdForm(
        G=np.vstack([G_user, G_ub]),
        h=np.concatenate([h_user, h_ub]),
        rel=list(p.rel) + [LE] * len(ub_rows),
        cz=c @ T,
        const=float(c @ shift),
        shift=shift,
        T=T,
        n_user_rows=p.m,
        ub_row_var=[j for (_k, j, _r) in ub_rows],
    )


# ---------------------------------------------------------------------------
# tableau simplex


class _Tableau:
    def __init__(self, M: np.ndarray, rhs: np.ndarray, basis: list[int], budget: int, verbose: bool):
        self.M = M
        self.rhs = rhs
        self.basis = basis
        self.budget = budget
        self.iters = 0
        self.verbose = verbose

    def pivot(self, r: int, q: int):
        self.iters += 1
        if self.iters > self.budget:
            raise CycleBudgetExceeded(f"simplex exceeded {self.budget} pivots")
        piv = self.M[r, q]
        self.M[r] /= piv
        self.rhs[r] /= piv
        col = self.M[:, q].copy()
        col[r] = 0.0
        nz = np.nonzero(np.abs(col) > 0)[0]
        if nz.size:
            self.M[nz] -= np.outer(col[nz], self.M[r])
            self.rhs[nz] -= col[nz] * self.rhs[r]
        self.M[:, q] = 0.0
        self.M[r, q] = 1.0
        self.basis[r] = q
        if self.verbose:
            print(f"pivot {self.iters}: row {r} col {q}")

    def run(self, cost: np.ndarray, allowed: np.ndarray) -> int | None:
        """Minimise ``cost`` over allowed columns. Returns an unbounded column or None."""
        while True:
            cb = cost[self.basis]
            red = cost - cb @ self.M
            cand = np.nonzero((red < -PIVOT_TOL) & allowed)[0]
            if cand.size == 0:
                return None
            q = int(cand[0])  # Bland: lowest index
            colq = self.M[:, q]
            pos = np.nonzero(colq > PIVOT_TOL)[0]
            if pos.size == 0:
                return q
            ratios = self.rhs[pos] / colq[pos]
            best = ratios.min()
            ties = pos[ratios <= best + 1e-12 * max(1.0, abs(best))]
            r = int(min(ties, key=lambda i: self.basis[i]))  # Bland: lowest basic index
            self.pivot(r, q)


def solve(p: LpProblem, *, budget: int = DEFAULT_ITER_BUDGET, verbose: bool = False) -> LpOutcome:
    """Solve ``p`` deterministically; see the module docstring for sign conventions."""
    sf = _to_standard(p)
    m, nz = sf.G.shape
    # slack columns
    slack_sign = []
    slack_rows = []
    for i, r in enumerate(sf.rel):
        if r == LE:
            slack_rows.append(i)
            slack_sign.append(1.0)
        elif r == GE:
            slack_rows.append(i)
            slack_sign.append(-1.0)
    ns = len(slack_rows)
    S = np.zeros((m, ns))
    for k, (i, s) in enumerate(zip(slack_rows, slack_sign)):
        S[i, k] = s
    tau = np.where(sf.h >= 0, 1.0, -1.0)
    Aw = np.hstack([sf.G, S])  # working columns (z then slacks)
    nw = nz + ns
    full = np.hstack([Aw, np.diag(tau)])
    n_all = nw + m

    # canonical start: divide each row by tau so the artificial is +1
    M = full * tau[:, None]
    rhs = sf.h * tau
    basis = [nw + i for i in range(m)]
    tab = _Tableau(M, rhs, basis, budget, verbose)

    cost1 = np.concatenate([np.zeros(nw), np.ones(m)])
    allowed = np.ones(n_all, dtype=bool)
    tab.run(cost1, allowed)
    phase1 = float(tab.rhs @ cost1[tab.basis])

    if phase1 > FEAS_TOL * max(1.0, np.abs(sf.h).max(initial=0.0)):
        y = _basis_duals(full, tab.basis, cost1)
        return _farkas(p, sf, y)

    # drive zero-level artificials out of the basis where possible
    for r in range(m):
        if tab.basis[r] >= nw:
            row = tab.M[r, :nw]
            nzc = np.nonzero(np.abs(row) > PIVOT_TOL)[0]
            if nzc.size:
                tab.pivot(r, int(nzc[0]))
    allowed = np.concatenate([np.ones(nw, dtype=bool), np.zeros(m, dtype=bool)])
    cost2 = np.concatenate([sf.cz, np.zeros(ns + m)])
    unb = tab.run(cost2, allowed)

    zB = _basic_solution(full, tab.basis, sf.h)
    z_all = np.zeros(n_all)
    z_all[tab.basis] = zB
    z = z_all[:nz]
    x = sf.shift + sf.T @ z

    if unb is not None:
        d_all = np.zeros(n_all)
        d_all[unb] = 1.0
        d_all[tab.basis] = -tab.M[:, unb]
        ray = sf.T @ d_all[:nz]
        return Unbounded(x=x, ray=ray)

    y = _basis_duals(full, tab.basis, cost2)
    y_user = y[: sf.n_user_rows]
    sgn = 1.0 if p.sense == "min" else -1.0
    duals = sgn * y_user
    reduced = p.c - p.A.T @ duals
    obj = float(p.c @ x)
    return Optimal(x=x, objective=obj, duals=duals, reduced_costs=reduced)


def _basic_solution(full: np.ndarray, basis: list[int], h: np.ndarray) -> np.ndarray:
    Bm = full[:, basis]
    try:
        zB = np.linalg.solve(Bm, h)
    except np.linalg.LinAlgError:
        zB = np.linalg.lstsq(Bm, h, rcond=None)[0]
    zB[np.abs(zB) < 1e-12] = 0.0
    return np.maximum(zB, 0.0)


def _basis_duals(full: np.ndarray, basis: list[int], cost: np.ndarray) -> np.ndarray:
    Bm = full[:, basis]
    try:
        return np.linalg.solve(Bm.T, cost[basis])
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(Bm.T, cost[basis], rcond=None)[0]


def _farkas(p: LpProblem, sf: _StdForm, y: np.ndarray) -> Infeasible:
    # y is the phase-one dual: G^T y <= 0, slack-sign rules, h^T y > 0.
    # In <= orientation the multipliers are -y.
    w = -y
    row_mult = w[: sf.n_user_rows].copy()
    upper = np.zeros(p.n)
    for k, j in enumerate(sf.ub_row_var):
        upper[j] += max(w[sf.n_user_rows + k], 0.0)
    # clean sign noise according to relation
    for i, r in enumerate(p.rel):
        if r == LE and row_mult[i] < 0:
            row_mult[i] = 0.0
        elif r == GE and row_mult[i] > 0:
            row_mult[i] = 0.0
    resid = p.A.T @ row_mult + upper
    lower = np.zeros(p.n)
    for j in range(p.n):
        if resid[j] > 0 and np.isfinite(p.lb[j]):
            lower[j] = resid[j]
        elif resid[j] < 0 and np.isfinite(p.ub[j]):
            upper[j] += -resid[j]
    return Infeasible(row_mult=row_mult, lower_mult=lower, upper_mult=upper)


def verify_farkas(p: LpProblem, cert: Infeasible, tol: float = 1e-7) -> bool:
    """Check that ``cert`` proves ``p`` has no feasible point."""
    w = cert.row_mult
    for i, r in enumerate(p.rel):
        if r == LE and w[i] < -tol:
            return False
        if r == GE and w[i] > tol:
            return False
    if np.any(cert.lower_mult < -tol) or np.any(cert.upper_mult < -tol):
        return False
    if np.any((cert.lower_mult > tol) & ~np.isfinite(p.lb)):
        return False
    if np.any((cert.upper_mult > tol) & ~np.isfinite(p.ub)):
        return False
    combo = p.A.T @ w + cert.upper_mult - cert.lower_mult
    scale = 1.0 + np.abs(w).sum() + cert.upper_mult.sum() + cert.lower_mult.sum()
    if np.abs(combo).max(initial=0.0) > tol * scale:
        return False
    lbf = np.where(np.isfinite(p.lb), p.lb, 0.0)
    ubf = np.where(np.isfinite(p.ub), p.ub, 0.0)
    rhs = p.b @ w + ubf @ cert.upper_mult - lbf @ cert.lower_mult
    return rhs < -tol


def is_feasible_point(p: LpProblem, x: np.ndarray, tol: float = FEAS_TOL) -> bool:
    x = np.asarray(x, dtype=float)
    if np.any(x < p.lb - tol) or np.any(x > p.ub + tol):
        return False
    lhs = p.A @ x
    for i, r in enumerate(p.rel):
        s = tol * (1.0 + abs(p.b[i]))
        if r == LE and lhs[i] > p.b[i] + s:
            return False
        if r == GE and lhs[i] < p.b[i] - s:
            return False
        if r == EQ and abs(lhs[i] - p.b[i]) > s:
            return False
    return True


def linprog(
    c: Sequence[float],
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    lb=None,
    ub=None,
    sense: str = "min",
) -> LpOutcome:
    """Convenience wrapper stacking ``<=`` and ``=`` blocks into one problem."""
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    blocks, rels, rhs = [], [], []
    if A_ub is not None and len(A_ub):
        A_ub = np.asarray(A_ub, dtype=float).reshape(-1, n)
        blocks.append(A_ub)
        rels += [LE] * A_ub.shape[0]
        rhs.append(np.asarray(b_ub, dtype=float).ravel())
    if A_eq is not None and len(A_eq):
        A_eq = np.asarray(A_eq, dtype=float).reshape(-1, n)
        blocks.append(A_eq)
        rels += [EQ] * A_eq.shape[0]
        rhs.append(np.asarray(b_eq, dtype=float).ravel())
    A = np.vstack(blocks) if blocks else np.zeros((0, n))
    b = np.concatenate(rhs) if rhs else np.zeros(0)
    return solve(LpProblem(c=c, A=A, rel=rels, b=b, lb=lb, ub=ub, sense=sense))
