"""H-polyhedra: emptiness, vertices, Fourier-Motzkin projection, containment, support."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import lp

FEAS_TOL = 1e-7
DEDUP_TOL = 1e-6
PRUNE_ABOVE = 5000  # basis count above which redundant rows are dropped first
BASIS_BUDGET = 10**6
ROW_BUDGET = 5000


class GeometryError(Exception):
    pass


class Unbounded(GeometryError):
    def __init__(self, direction, msg: str = "polyhedron is unbounded"):
        super().__init__(msg)
        self.direction = np.asarray(direction, dtype=float)


class EmptySet(GeometryError):
    pass


class DimensionTooLarge(GeometryError):
    pass


class EliminationBlowup(GeometryError):
    pass


@dataclass(frozen=True)
class Polyhedron:
    """``{z : A[i] z <= b[i] (or == when eq[i])}`` in ``dim`` coordinates."""

    A: np.ndarray
    b: np.ndarray
    eq: np.ndarray
    names: tuple[str, ...] = ()

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float).ravel()
        if A.ndim != 2:
            raise ValueError("A must be a matrix")
        if A.shape[0] != b.size:
            raise ValueError(f"A has {A.shape[0]} rows but b has {b.size} entries")
        eq = np.zeros(b.size, dtype=bool) if self.eq is None else np.asarray(self.eq, dtype=bool).ravel()
        if eq.size != b.size:
            raise ValueError("eq mask must have one entry per row")
        names = tuple(self.names) if self.names else tuple(f"z{i}" for i in range(A.shape[1]))
        if len(names) != A.shape[1]:
            raise ValueError(f"{len(names)} names for {A.shape[1]} dimensions")
        if A.shape[1] < 1:
            raise ValueError("dim must be positive")
        A.setflags(write=False)
        b.setflags(write=False)
        eq.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "eq", eq)
        object.__setattr__(self, "names", names)

    # constructors ---------------------------------------------------------

    @classmethod
    def from_rows(cls, A_ub=None, b_ub=None, A_eq=None, b_eq=None, *, dim: int | None = None,
                  names: Sequence[str] = ()) -> "Polyhedron":
        if dim is None:
            for M in (A_ub, A_eq):
                if M is not None and len(M):
                    dim = np.asarray(M, dtype=float).reshape(len(M), -1).shape[1]
                    break
            else:
                dim = len(names)
        parts, rhs, eqs = [], [], []
        if A_ub is not None and len(A_ub):
            M = np.asarray(A_ub, dtype=float).reshape(-1, dim)
            parts.append(M)
            rhs.append(np.asarray(b_ub, dtype=float).ravel())
            eqs.append(np.zeros(M.shape[0], dtype=bool))
        if A_eq is not None and len(A_eq):
            M = np.asarray(A_eq, dtype=float).reshape(-1, dim)
            parts.append(M)
            rhs.append(np.asarray(b_eq, dtype=float).ravel())
            eqs.append(np.ones(M.shape[0], dtype=bool))
        if not parts:
            return cls(np.zeros((0, dim)), np.zeros(0), np.zeros(0, dtype=bool), tuple(names))
        return cls(np.vstack(parts), np.concatenate(rhs), np.concatenate(eqs), tuple(names))

    @classmethod
    def box(cls, lo, hi, names: Sequence[str] = ()) -> "Polyhedron":
        lo = np.asarray(lo, dtype=float).ravel()
        hi = np.asarray(hi, dtype=float).ravel()
        d = lo.size
        I = np.eye(d)
        return cls.from_rows(np.vstack([I, -I]), np.concatenate([hi, -lo]), names=names)

    @classmethod
    def universe(cls, dim: int, names: Sequence[str] = ()) -> "Polyhedron":
        return cls(np.zeros((0, dim)), np.zeros(0), np.zeros(0, dtype=bool), tuple(names))

    # basic properties ------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def rows(self) -> list[tuple[np.ndarray, str, float]]:
        return [(self.A[i].copy(), "=" if self.eq[i] else "<=", float(self.b[i])) for i in range(self.n_rows)]

    def inequalities(self) -> tuple[np.ndarray, np.ndarray]:
        """Canonical ``G z <= h`` with every equality split into two rows."""
        E = self.eq
        G = np.vstack([self.A[~E], self.A[E], -self.A[E]])
        h = np.concatenate([self.b[~E], self.b[E], -self.b[E]])
        return G, h

    def canonical(self) -> "Polyhedron":
        G, h = self.inequalities()
        return Polyhedron(G, h, np.zeros(h.size, dtype=bool), self.names)

    def intersect(self, other: "Polyhedron") -> "Polyhedron":
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        return Polyhedron(np.vstack([self.A, other.A]), np.concatenate([self.b, other.b]),
                          np.concatenate([self.eq, other.eq]), self.names)

    def add_rows(self, A, b, eq: bool = False) -> "Polyhedron":
        A = np.asarray(A, dtype=float).reshape(-1, self.dim)
        b = np.asarray(b, dtype=float).ravel()
        return Polyhedron(np.vstack([self.A, A]), np.concatenate([self.b, b]),
                          np.concatenate([self.eq, np.full(b.size, eq)]), self.names)

    def contains_point(self, z, tol: float = FEAS_TOL) -> bool:
        return self.max_violation(z) <= tol

    def max_violation(self, z) -> float:
        z = np.asarray(z, dtype=float).ravel()
        if self.n_rows == 0:
            return 0.0
        r = self.A @ z - self.b
        r = np.where(self.eq, np.abs(r), r)
        return float(max(r.max(), 0.0))

    def affine_image_pre(self, M: np.ndarray, t: np.ndarray) -> "Polyhedron":
        """Preimage under ``z = M w + t``: ``{w : M w + t in self}``."""
        M = np.asarray(M, dtype=float)
        return Polyhedron(self.A @ M, self.b - self.A @ np.asarray(t, dtype=float), self.eq,
                          tuple(f"w{i}" for i in range(M.shape[1])))

    def fix(self, index: Sequence[int], values) -> "Polyhedron":
        """Substitute fixed values for the listed coordinates and drop them."""
        index = list(index)
        values = np.asarray(values, dtype=float).ravel()
        keep = [i for i in range(self.dim) if i not in index]
        b = self.b - self.A[:, index] @ values
        return Polyhedron(self.A[:, keep], b, self.eq, tuple(self.names[i] for i in keep))

    def _lp(self, c, sense="min") -> lp.LpProblem:
        rel = [lp.EQ if e else lp.LE for e in self.eq]
        d = self.dim
        return lp.LpProblem(c=c, A=self.A, rel=rel, b=self.b, lb=np.full(d, -np.inf),
                            ub=np.full(d, np.inf), sense=sense)


# ---------------------------------------------------------------------------
# emptiness


@dataclass
class NonEmpty:
    witness: np.ndarray
    empty: bool = field(default=False, init=False)


@dataclass
class Empty:
    """Multipliers on the canonical ``<=`` rows (see ``Polyhedron.inequalities``)."""

    certificate: np.ndarray
    empty: bool = field(default=True, init=False)


def is_empty(P: Polyhedron) -> NonEmpty | Empty:
    if P.n_rows == 0:
        return NonEmpty(np.zeros(P.dim))
    out = lp.solve(P._lp(np.zeros(P.dim)))
    if isinstance(out, lp.Infeasible):
        w = out.row_mult
        E = P.eq
        cert = np.concatenate([np.maximum(w[~E], 0.0), np.maximum(w[E], 0.0), np.maximum(-w[E], 0.0)])
        return Empty(cert)
    return NonEmpty(out.x)


def verify_certificate(P: Polyhedron, cert: np.ndarray, tol: float = 1e-7) -> bool:
    G, h = P.inequalities()
    cert = np.asarray(cert, dtype=float)
    if cert.size != h.size or np.any(cert < -tol):
        return False
    scale = 1.0 + np.abs(cert).sum()
    return bool(np.abs(cert @ G).max(initial=0.0) <= tol * scale and cert @ h < -tol)


# ---------------------------------------------------------------------------
# support


def support(P: Polyhedron, direction, *, lexmin: bool = False) -> tuple[float, np.ndarray]:
    """``max d^T z`` over ``P``. With ``lexmin`` the lexicographically smallest maximiser is returned."""
    d = np.asarray(direction, dtype=float).ravel()
    if d.size != P.dim:
        raise ValueError("direction has wrong length")
    out = lp.solve(P._lp(d, sense="max"))
    if isinstance(out, lp.Infeasible):
        raise EmptySet("support of an empty polyhedron")
    if isinstance(out, lp.Unbounded):
        raise Unbounded(out.ray)
    val, z = float(out.objective), out.x
    if lexmin:
        z = lexmin_point(P.add_rows(-d, -(val - FEAS_TOL * (1 + abs(val)))), start=z)
        z = snap_to_vertex(P, z)
        val = float(d @ z)
    return val, z


def snap_to_vertex(P: Polyhedron, z, tol: float = 1e-6) -> np.ndarray:
    """Re-solve the rows active at ``z`` exactly when they pin down a single point."""
    z = np.asarray(z, dtype=float)
    r = P.A @ z - P.b
    act = np.abs(r) <= tol * (1 + np.abs(P.b))
    if not act.any():
        return z
    M = P.A[act]
    if np.linalg.matrix_rank(M, tol=1e-10) < P.dim:
        return z
    w = np.linalg.lstsq(M, P.b[act], rcond=None)[0]
    if P.contains_point(w, tol=1e-9) and np.max(np.abs(w - z)) <= 1e-5:
        return w + 0.0
    return z


def lexmin_point(P: Polyhedron, start=None) -> np.ndarray:
    """Lexicographically smallest point of ``P`` (coordinates fixed one at a time)."""
    Q = P
    z = start
    for i in range(P.dim):
        e = np.zeros(P.dim)
        e[i] = 1.0
        out = lp.solve(Q._lp(e, sense="min"))
        if isinstance(out, lp.Unbounded):
            raise Unbounded(out.ray, "lexicographic minimum does not exist")
        if isinstance(out, lp.Infeasible):
            if z is None:
                raise EmptySet("lexmin of an empty polyhedron")
            return z
        z = out.x
        Q = Q.add_rows(e, out.objective + 1e-9 * (1 + abs(out.objective)))
    return z


def is_bounded(P: Polyhedron) -> tuple[bool, np.ndarray | None]:
    """Bounded test by support in every signed axis direction."""
    for i in range(P.dim):
        for s in (1.0, -1.0):
            d = np.zeros(P.dim)
            d[i] = s
            out = lp.solve(P._lp(d, sense="max"))
            if isinstance(out, lp.Unbounded):
                return False, out.ray
            if isinstance(out, lp.Infeasible):
                return True, None
    return True, None


# ---------------------------------------------------------------------------
# vertices


@dataclass
class VertexSet:
    points: np.ndarray  # (k, dim)
    tol: float = DEDUP_TOL

    def __len__(self):
        return self.points.shape[0]

    def __iter__(self):
        return iter(self.points)


def _dedup(pts: np.ndarray, tol: float) -> np.ndarray:
    if pts.shape[0] == 0:
        return pts
    # collapse exact repeats on a grid first, degenerate vertices produce many
    _, first = np.unique(np.round(pts / tol), axis=0, return_index=True)
    pts = pts[np.sort(first)]
    kept = np.empty((0, pts.shape[1]))
    for p in pts:
        if not kept.shape[0] or np.abs(kept - p).max(axis=1).min() > tol:
            kept = np.vstack([kept, p])
    order = np.lexsort(kept.T[::-1])
    return kept[order]


def vertices(P: Polyhedron, *, budget: int = BASIS_BUDGET, tol: float = DEDUP_TOL,
             check_bounded: bool = True) -> VertexSet:
    """All basic feasible solutions of the row system, deduplicated and sorted."""
    d = P.dim
    if check_bounded:
        ok, ray = is_bounded(P)
        if not ok:
            raise Unbounded(ray)
    E = P.A[P.eq]
    e = P.b[P.eq]
    Gi = P.A[~P.eq]
    hi = P.b[~P.eq]
    if E.shape[0]:
        # keep an independent subset of equalities
        _, _, piv = _row_basis(E)
        E, e = E[piv], e[piv]
    k = d - E.shape[0]
    if k < 0:
        raise GeometryError("more independent equalities than dimensions")
    m = Gi.shape[0]
    if k > m:
        return VertexSet(np.zeros((0, d)), tol)
    if math.comb(m, k) > PRUNE_ABOVE:
        # redundant rows only add bases at the same points
        Gi, hi = remove_redundant(Gi, hi, E, e)
        m = Gi.shape[0]
        if k > m:
            return VertexSet(np.zeros((0, d)), tol)
    n_comb = math.comb(m, k)
    if n_comb > budget:
        raise DimensionTooLarge(f"{n_comb} bases exceed budget {budget}")
    if E.shape[0]:
        en = np.linalg.norm(E, axis=1)
        E, e = E / en[:, None], e / en
    det_sure = 1e-8 * d ** (d / 2)
    norms = np.linalg.norm(Gi, axis=1)
    norms[norms == 0] = 1.0
    Gn = Gi / norms[:, None]
    hn = hi / norms
    found = []
    combos = itertools.combinations(range(m), k)
    chunk = 20000
    while True:
        batch = list(itertools.islice(combos, chunk))
        if not batch:
            break
        idx = np.array(batch, dtype=int).reshape(len(batch), k)
        M = np.concatenate([np.broadcast_to(E, (len(batch),) + E.shape), Gn[idx]], axis=1)
        r = np.concatenate([np.broadcast_to(e, (len(batch), e.size)), hn[idx]], axis=1)
        # unit rows bound the top singular value by sqrt(d), so a large determinant
        # certifies the rank test and only the doubtful bases need an SVD
        det = np.abs(np.linalg.det(M))
        ok = det > det_sure
        doubt = np.flatnonzero(~ok & (det > 1e-9 ** d))
        if doubt.size:
            sv = np.linalg.svd(M[doubt], compute_uv=False)
            ok[doubt] = sv[:, -1] > 1e-9 * np.maximum(sv[:, 0], 1.0)
        if not ok.any():
            continue
        z = np.linalg.solve(M[ok], r[ok][..., None])[..., 0]
        viol = Gn @ z.T - hn[:, None]
        feas = (viol <= FEAS_TOL * (1 + np.abs(hn)[:, None])).all(axis=0)
        if E.shape[0]:
            feas &= (np.abs(E @ z.T - e[:, None]) <= FEAS_TOL * (1 + np.abs(e)[:, None])).all(axis=0)
        if feas.any():
            found.append(z[feas])
    pts = np.vstack(found) if found else np.zeros((0, d))
    return VertexSet(_dedup(pts, tol) + 0.0, tol)


def _row_basis(M: np.ndarray, tol: float = 1e-10):
    """Greedy choice of linearly independent rows."""
    chosen: list[int] = []
    for i in range(M.shape[0]):
        trial = M[chosen + [i]]
        if np.linalg.matrix_rank(trial, tol=tol) == len(chosen) + 1:
            chosen.append(i)
    return M[chosen], len(chosen), chosen


# ---------------------------------------------------------------------------
# projection


def _normalize_rows(G: np.ndarray, h: np.ndarray):
    """Scale rows to unit max-norm and drop exact duplicates and trivial rows."""
    scale = np.abs(G).max(axis=1)
    trivial = scale <= 1e-12
    if np.any(trivial & (h < -FEAS_TOL)):
        # 0 <= negative: infeasible; keep a single contradictory row
        return np.zeros((1, G.shape[1])), np.array([-1.0])
    G, h, scale = G[~trivial], h[~trivial], scale[~trivial]
    G = G / scale[:, None]
    h = h / scale
    if G.shape[0] == 0:
        return G, h
    key = np.round(G, 9)
    uniq: dict[bytes, int] = {}
    keep_idx = []
    for i in range(G.shape[0]):
        kb = key[i].tobytes()
        j = uniq.get(kb)
        if j is None:
            uniq[kb] = len(keep_idx)
            keep_idx.append(i)
        elif h[i] < h[keep_idx[j]]:
            keep_idx[j] = i
    return G[keep_idx], h[keep_idx]


def remove_redundant(G: np.ndarray, h: np.ndarray, E: np.ndarray | None = None,
                     e: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Drop each ``<=`` row whose removal leaves the set unchanged (one LP per row)."""
    G, h = _normalize_rows(G, h)
    d = G.shape[1]
    E = np.zeros((0, d)) if E is None else E
    e = np.zeros(0) if e is None else e
    keep = np.ones(G.shape[0], dtype=bool)
    for i in range(G.shape[0]):
        others = keep.copy()
        others[i] = False
        A = np.vstack([G[others], E])
        b = np.concatenate([h[others], e])
        rel = [lp.LE] * int(others.sum()) + [lp.EQ] * E.shape[0]
        out = lp.solve(lp.LpProblem(c=G[i], A=A, rel=rel, b=b, lb=np.full(d, -np.inf),
                                    ub=np.full(d, np.inf), sense="max"))
        if isinstance(out, lp.Optimal) and out.objective <= h[i] + FEAS_TOL * (1 + abs(h[i])):
            keep[i] = False
        elif isinstance(out, lp.Infeasible):
            # the rest is already empty; this row adds nothing
            keep[i] = False
    if not keep.any() and G.shape[0]:
        # everything redundant only happens for an empty set; keep a contradiction
        rest = lp.solve(lp.LpProblem(c=np.zeros(d), A=np.vstack([G, E]),
                                     rel=[lp.LE] * G.shape[0] + [lp.EQ] * E.shape[0],
                                     b=np.concatenate([h, e]), lb=np.full(d, -np.inf),
                                     ub=np.full(d, np.inf)))
        if isinstance(rest, lp.Infeasible):
            return np.zeros((1, d)), np.array([-1.0])
    return G[keep], h[keep]


def project(P: Polyhedron, keep: Sequence[int], *, row_budget: int = ROW_BUDGET) -> Polyhedron:
    """Fourier-Motzkin shadow of ``P`` on the coordinates ``keep`` (in that order)."""
    keep = list(keep)
    if not keep:
        raise ValueError("keep must be nonempty")
    if any(k < 0 or k >= P.dim for k in keep) or len(set(keep)) != len(keep):
        raise ValueError("keep must be distinct valid coordinates")
    names = tuple(P.names[k] for k in keep)
    if isinstance(is_empty(P), Empty):
        A = np.zeros((1, len(keep)))
        return Polyhedron(A, np.array([-1.0]), np.zeros(1, dtype=bool), names)

    drop = [i for i in range(P.dim) if i not in keep]
    order = keep + drop
    A = P.A[:, order]
    nk = len(keep)
    E = A[P.eq].copy()
    e = P.b[P.eq].copy()
    G = A[~P.eq].copy()
    h = P.b[~P.eq].copy()

    # eliminate dropped coordinates through equalities first (Gaussian substitution)
    col = A.shape[1] - 1
    while col >= nk:
        if E.shape[0]:
            piv = int(np.argmax(np.abs(E[:, col])))
            if abs(E[piv, col]) > 1e-10:
                row, rv = E[piv] / E[piv, col], e[piv] / E[piv, col]
                E = np.delete(E, piv, axis=0)
                e = np.delete(e, piv)
                e = e - E[:, col] * rv
                E = E - np.outer(E[:, col], row)
                h = h - G[:, col] * rv
                G = G - np.outer(G[:, col], row)
                E = np.delete(E, col, axis=1)
                G = np.delete(G, col, axis=1)
                col -= 1
                continue
        # FM on inequalities
        a = G[:, col]
        pos = np.nonzero(a > 1e-12)[0]
        neg = np.nonzero(a < -1e-12)[0]
        zer = np.nonzero(np.abs(a) <= 1e-12)[0]
        new_G = [G[zer]]
        new_h = [h[zer]]
        if pos.size and neg.size:
            if pos.size * neg.size + zer.size > row_budget:
                raise EliminationBlowup(f"{pos.size * neg.size + zer.size} rows exceed budget {row_budget}")
            P_rows = G[pos] / a[pos][:, None]
            P_rhs = h[pos] / a[pos]
            N_rows = G[neg] / (-a[neg])[:, None]
            N_rhs = h[neg] / (-a[neg])
            comb = (P_rows[:, None, :] + N_rows[None, :, :]).reshape(-1, G.shape[1])
            crhs = (P_rhs[:, None] + N_rhs[None, :]).ravel()
            new_G.append(comb)
            new_h.append(crhs)
        G = np.delete(np.vstack(new_G), col, axis=1)
        h = np.concatenate(new_h)
        E = np.delete(E, col, axis=1)
        if G.shape[0]:
            G, h = remove_redundant(G, h, E, e)
        col -= 1

    # clean leftover trivial equalities
    if E.shape[0]:
        nzr = np.abs(E).max(axis=1) > 1e-12
        E, e = E[nzr], e[nzr]
    if G.shape[0]:
        G, h = remove_redundant(G, h, E, e)
    return Polyhedron.from_rows(G + 0.0, h + 0.0, E + 0.0, e + 0.0, dim=nk, names=names)


# ---------------------------------------------------------------------------
# containment


@dataclass
class Containment:
    holds: bool
    point: np.ndarray | None = None
    row: int | None = None  # index into outer.rows()

    def __bool__(self):
        return self.holds


def contains(outer: Polyhedron, inner: Polyhedron, tol: float = FEAS_TOL) -> Containment:
    """``inner`` is a subset of ``outer``, decided on the vertices of ``inner``."""
    if outer.dim != inner.dim:
        raise ValueError("dimension mismatch")
    V = vertices(inner)
    for v in V:
        r = outer.A @ v - outer.b
        r = np.where(outer.eq, np.abs(r), r)
        bad = np.nonzero(r > tol * (1 + np.abs(outer.b)))[0]
        if bad.size:
            return Containment(False, v.copy(), int(bad[0]))
    return Containment(True)


def hull_contains_point(points: np.ndarray, z, tol: float = 1e-7) -> bool:
    """Membership of ``z`` in the convex hull of ``points`` (one LP)."""
    points = np.asarray(points, dtype=float)
    k, d = points.shape
    A = np.vstack([points.T, np.ones((1, k))])
    b = np.concatenate([np.asarray(z, dtype=float), [1.0]])
    # minimise total deviation |A lam - b|
    Adev = np.hstack([A, -np.eye(d + 1), np.eye(d + 1)])
    c = np.concatenate([np.zeros(k), np.ones(2 * (d + 1))])
    out = lp.solve(lp.LpProblem(c=c, A=Adev, rel=[lp.EQ] * (d + 1), b=b))
    return isinstance(out, lp.Optimal) and out.objective <= tol * (1 + np.abs(b).sum())


def write_points_csv(points: Iterable[Sequence[float]], path) -> None:
    pts = [list(map(float, p)) for p in points]
    d = len(pts[0]) if pts else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"dim_{i}" for i in range(d)])
        for p in pts:
            w.writerow([f"{v:.9g}" for v in p])


def nearest_point(P: Polyhedron, z, *, budget: int = BASIS_BUDGET) -> np.ndarray:
    """Euclidean projection of ``z`` onto ``P`` by active-set enumeration.

    Each candidate active set ``S`` gives the projection onto ``{A_S w = b_S}``;
    the first one that is feasible with nonnegative multipliers satisfies the
    KKT conditions of the (strictly convex) problem and is the answer.
    """
    z = np.asarray(z, dtype=float).ravel()
    if P.contains_point(z):
        return z.copy()
    E = P.A[P.eq]
    e = P.b[P.eq]
    G = P.A[~P.eq]
    h = P.b[~P.eq]
    viol = G @ z - h
    order = np.argsort(-viol, kind="stable")  # try the most violated rows first
    count = 0
    for k in range(0, P.dim + 1):
        for S in itertools.combinations(order, k):
            count += 1
            if count > budget:
                raise DimensionTooLarge("active-set budget exhausted")
            S = list(S)
            M = np.vstack([E, G[S]])
            r = np.concatenate([e, h[S]])
            if M.shape[0] == 0:
                continue
            if np.linalg.matrix_rank(M, tol=1e-10) < M.shape[0]:
                continue
            mult = np.linalg.solve(M @ M.T, M @ z - r)
            w = z - M.T @ mult
            if np.any(mult[E.shape[0]:] < -1e-10):
                continue
            if P.contains_point(w, tol=1e-9):
                return w
    raise EmptySet("no projection found; the polyhedron may be empty")
