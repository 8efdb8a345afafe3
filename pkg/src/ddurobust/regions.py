"""Dispatchable regions, set matching, and robust feasible region scans."""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .geometry import Polyhedron
from .model import (
    EmptyUncertaintyWarning,
    Fixed,
    Separable,
    SpecNotSeparable,
    TsroProblem,
    anchor_points,
    instantiate_ddus,
    sample_points,
)
from .oracles import feasibility_oracle

REFINE_TOL = 1e-6
COARSE_STEP = 0.01


@dataclass(frozen=True)
class RegionGraph:
    """Polyhedron over the stacked block ``(x, alpha, u)`` (``alpha`` omitted when absent)."""

    carrier: Polyhedron
    n_x: int
    n_u: int
    with_alpha: bool

    @property
    def blocks(self) -> dict[str, slice]:
        a = 1 if self.with_alpha else 0
        out = {"x": slice(0, self.n_x), "u": slice(self.n_x + a, self.n_x + a + self.n_u)}
        if self.with_alpha:
            out["alpha"] = slice(self.n_x, self.n_x + 1)
        return out

    def slice(self, x, alpha: float | None = None) -> Polyhedron:
        """The set of ``u`` in the graph at fixed ``x`` (and ``alpha``)."""
        x = np.asarray(x, dtype=float).ravel()
        idx = list(range(self.n_x))
        vals = list(x)
        if self.with_alpha:
            if alpha is None or not np.isfinite(alpha):
                raise ValueError("a finite alpha is required for the extended region")
            idx.append(self.n_x)
            vals.append(float(alpha))
        return self.carrier.fix(idx, vals)

    def canonical_rows(self) -> tuple[np.ndarray, np.ndarray]:
        return canonical_rows(*self.carrier.inequalities())


def canonical_rows(G: np.ndarray, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scale each ``<=`` row to unit max-abs coefficient and sort lexicographically."""
    s = np.abs(G).max(axis=1)
    s[s == 0] = 1.0
    G = G / s[:, None]
    h = h / s
    M = np.hstack([G, h[:, None]])
    order = np.lexsort(np.round(M, 9).T[::-1])
    return G[order] + 0.0, h[order] + 0.0


def dispatch_graph(p: TsroProblem, with_alpha: bool = False) -> RegionGraph:
    """Project ``{(x, alpha, u, y) : A x + B y + C u <= b, y >= 0, c^T y <= alpha}`` onto ``(x, alpha, u)``."""
    nx, nu, ny, m = p.n_x, p.n_u, p.n_y, p.m
    a = 1 if with_alpha else 0
    nv = nx + a + nu + ny
    rows = [np.hstack([p.A, np.zeros((m, a)), p.C, p.B])]
    rhs = [p.b]
    nn = np.nonzero(~p.y_free)[0]
    if nn.size:
        S = np.zeros((nn.size, nv))
        S[np.arange(nn.size), nx + a + nu + nn] = -1.0
        rows.append(S)
        rhs.append(np.zeros(nn.size))
    if with_alpha:
        r = np.zeros((1, nv))
        r[0, nx] = -1.0
        r[0, nx + a + nu:] = p.c
        rows.append(r)
        rhs.append(np.zeros(1))
    names = ([f"x{i + 1}" for i in range(nx)] + (["alpha"] if with_alpha else [])
             + [f"u{i + 1}" for i in range(nu)] + [f"y{i + 1}" for i in range(ny)])
    lifted = Polyhedron.from_rows(np.vstack(rows), np.concatenate(rhs), dim=nv, names=names)
    carrier = geo.project(lifted, list(range(nx + a + nu)))
    return RegionGraph(carrier, nx, nu, with_alpha)


# ---------------------------------------------------------------------------
# matching


@dataclass
class MatchResult:
    matched: bool
    witness: np.ndarray | None = None  # violating u (or xi for the auxiliary check)
    row: int | None = None
    vacuous: bool = False

    def __bool__(self):
        return self.matched


def _slice_for(p: TsroProblem, x, alpha, graph: RegionGraph | None) -> Polyhedron:
    use_alpha = alpha is not None and np.isfinite(alpha)
    if graph is None or graph.with_alpha != use_alpha:
        graph = dispatch_graph(p, with_alpha=use_alpha)
    return graph.slice(x, alpha if use_alpha else None)


def matching_check(p: TsroProblem, x, alpha: float = np.inf, *, graph: RegionGraph | None = None) -> MatchResult:
    """``U(x)`` inside ``D(x)`` (or ``D^ext(x, alpha)`` for finite ``alpha``)."""
    U = instantiate_ddus(p.uncertainty, x)
    if isinstance(geo.is_empty(U), geo.Empty):
        warnings.warn("U(x) is empty; matching holds vacuously", EmptyUncertaintyWarning, stacklevel=2)
        return MatchResult(True, vacuous=True)
    D = _slice_for(p, x, alpha, graph)
    res = geo.contains(D, U)
    return MatchResult(res.holds, res.point, res.row)


def aux_region_check(p: TsroProblem, x, alpha: float = np.inf, *, graph: RegionGraph | None = None) -> MatchResult:
    """Every vertex ``xi`` of the support maps through the coupling into the region slice."""
    spec = p.uncertainty
    if not isinstance(spec, Separable):
        raise SpecNotSeparable("auxiliary region check needs a separable uncertainty spec")
    D = _slice_for(p, x, alpha, graph)
    x = np.asarray(x, dtype=float).ravel()
    for xi in spec.xi_vertices():
        u = spec(xi, x)
        r = D.A @ u - D.b
        r = np.where(D.eq, np.abs(r), r)
        bad = np.nonzero(r > geo.FEAS_TOL * (1 + np.abs(D.b)))[0]
        if bad.size:
            return MatchResult(False, xi.copy(), int(bad[0]))
    return MatchResult(True)


def aux_region_slice(p: TsroProblem, x, alpha: float = np.inf, *, graph: RegionGraph | None = None) -> Polyhedron:
    """Preimage of the region slice under ``xi -> E xi + F x + h``."""
    spec = p.uncertainty
    if not isinstance(spec, Separable):
        raise SpecNotSeparable("auxiliary region needs a separable uncertainty spec")
    D = _slice_for(p, x, alpha, graph)
    shift = spec.F @ np.asarray(x, dtype=float).ravel() + spec.h
    Q = D.affine_image_pre(spec.E, shift)
    return Polyhedron(Q.A, Q.b, Q.eq, tuple(f"xi{i + 1}" for i in range(spec.E.shape[1])))


# ---------------------------------------------------------------------------
# robust feasible region scans


@dataclass
class IntervalUnion:
    intervals: list[tuple[float, float]] = field(default_factory=list)

    def __contains__(self, t: float) -> bool:
        return any(lo - 1e-12 <= t <= hi + 1e-12 for lo, hi in self.intervals)

    def to_json(self) -> str:
        return json.dumps({"intervals": [[float(f"{lo:.9g}"), float(f"{hi:.9g}")] for lo, hi in self.intervals]})

    @property
    def is_convex(self) -> bool:
        return len(self.intervals) <= 1


def _member_1d(p: TsroProblem, t: float, axis: int, base: np.ndarray) -> bool:
    x = base.copy()
    x[axis] = t
    if not p.X.contains_point(x):
        return False
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyUncertaintyWarning)
        return feasibility_oracle(p, x).robust


def rfr_scan_1d(p: TsroProblem, lo: float, hi: float, coarse_step: float = COARSE_STEP, *,
                axis: int = 0, fixed=None, tol: float = REFINE_TOL) -> IntervalUnion:
    """Grid membership on ``[lo, hi]`` then bisection of every membership change to width ``tol``."""
    if hi < lo:
        raise ValueError("empty scan range")
    if coarse_step <= 0:
        raise ValueError("coarse_step must be positive")
    base = np.zeros(p.n_x) if fixed is None else np.asarray(fixed, dtype=float).ravel().copy()
    n = max(1, int(round((hi - lo) / coarse_step)))
    grid = np.linspace(lo, hi, n + 1)
    mem = [_member_1d(p, t, axis, base) for t in grid]

    def refine(a: float, b: float, a_in: bool) -> float:
        # a and b straddle a boundary; return the member-side end within tol
        while abs(b - a) > tol:
            mid = 0.5 * (a + b)
            if _member_1d(p, mid, axis, base) == a_in:
                a = mid
            else:
                b = mid
        return a if a_in else b

    out: list[tuple[float, float]] = []
    start = grid[0] if mem[0] else None
    for i in range(1, len(grid)):
        if mem[i] == mem[i - 1]:
            continue
        edge = refine(grid[i - 1], grid[i], mem[i - 1])
        if mem[i]:
            start = edge
        else:
            out.append((start, edge))
            start = None
    if start is not None:
        out.append((start, grid[-1]))
    return IntervalUnion(out)


def membership_raster(p: TsroProblem, xs1, xs2) -> list[tuple[float, float, bool]]:
    """Robust feasibility on a 2-D grid (for plotting)."""
    rows = []
    for a in xs1:
        for b in xs2:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", EmptyUncertaintyWarning)
                rows.append((float(a), float(b), feasibility_oracle(p, [a, b]).robust))
    return rows


def write_raster_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2", "member"])
        for a, b, m in rows:
            w.writerow([f"{a:.9g}", f"{b:.9g}", int(m)])


# ---------------------------------------------------------------------------
# convexity probe


@dataclass
class ConvexityReport:
    tests: int = 0
    failures: list = field(default_factory=list)  # (x1, x2, midpoint)
    expected_convex: bool = False
    pool_size: int = 0

    @property
    def defects(self) -> list:
        """Failures that contradict convexity where it is guaranteed."""
        return self.failures if self.expected_convex else []


def convexity_expected(p: TsroProblem) -> bool:
    """Fixed sets and separable sets with affine coupling give a convex feasible region."""
    return isinstance(p.uncertainty, (Fixed, Separable))


def convexity_probe(p: TsroProblem, samples: int, *, seed: int = 0, pool: int = 400,
                    max_draws: int = 20000, stop_at_first: bool = False) -> ConvexityReport:
    """Midpoint tests on pairs of sampled robust-feasible points."""
    rng = np.random.default_rng(seed)
    rep = ConvexityReport(expected_convex=convexity_expected(p))

    def member(x):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", EmptyUncertaintyWarning)
            return feasibility_oracle(p, x).robust

    members: list[np.ndarray] = []
    draws = 0
    V = anchor_points(p.X, rng)
    while len(members) < pool and draws < max_draws:
        batch = sample_points(p.X, 64, rng)[len(V):] if draws else sample_points(p.X, 64, rng)
        for x in batch:
            draws += 1
            if member(x):
                members.append(x)
            if len(members) >= pool:
                break
    rep.pool_size = len(members)
    if len(members) < 2:
        return rep
    M = np.array(members)
    for _ in range(samples):
        i, j = rng.choice(len(M), size=2, replace=False)
        mid = 0.5 * (M[i] + M[j])
        rep.tests += 1
        if not member(mid):
            rep.failures.append((M[i].tolist(), M[j].tolist(), mid.tolist()))
            if stop_at_first:
                break
    return rep
