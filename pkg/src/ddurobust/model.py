"""Two-stage robust problem container with decision-dependent uncertainty sets.

The recourse block is ``Y(x, u) = {y : A x + B y + C u <= b}`` with ``y >= 0``
by default. Columns flagged in ``y_free`` are sign-free; they turn the
corresponding dual rows into equalities (``B_free^T xi = 0`` and
``B_free^T pi = c_free``).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from . import geometry as geo
from . import lp
from .geometry import Polyhedron

TOL = 1e-7


class ModelError(Exception):
    pass


class UnboundedInstance(ModelError):
    pass


class SpecNotSeparable(ModelError):
    pass


class EmptyUncertaintyWarning(UserWarning):
    pass


def _mat(M, rows=None, cols=None) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M.reshape(rows if rows is not None else 1, -1) if M.size else np.zeros((rows or 0, cols or 0))
    if rows is not None and M.shape[0] != rows:
        raise ValueError(f"expected {rows} rows, got {M.shape[0]}")
    if cols is not None and M.shape[1] != cols:
        raise ValueError(f"expected {cols} columns, got {M.shape[1]}")
    return M


# ---------------------------------------------------------------------------
# small building blocks


@dataclass(frozen=True)
class AffineMap:
    """``z -> matrix @ z + offset``."""

    matrix: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        t = np.asarray(self.offset, dtype=float).ravel()
        if t.size != M.shape[0]:
            raise ValueError("offset length must equal the number of output rows")
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "offset", t)

    @property
    def n_in(self) -> int:
        return self.matrix.shape[1]

    @property
    def n_out(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, z) -> np.ndarray:
        return self.matrix @ np.asarray(z, dtype=float).ravel() + self.offset

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """``self(inner(z))``."""
        return AffineMap(self.matrix @ inner.matrix, self.matrix @ inner.offset + self.offset)


@dataclass(frozen=True)
class PiecewiseLinearConvexCost:
    """``f(x) = max_k (grad_k . x + offset_k)``; an empty piece list means ``f = 0``."""

    grads: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        G = np.atleast_2d(np.asarray(self.grads, dtype=float))
        o = np.asarray(self.offsets, dtype=float).ravel()
        if G.shape[0] != o.size:
            raise ValueError("one offset per gradient")
        object.__setattr__(self, "grads", G)
        object.__setattr__(self, "offsets", o)

    @classmethod
    def zero(cls, n: int) -> "PiecewiseLinearConvexCost":
        return cls(np.zeros((1, n)), np.zeros(1))

    @classmethod
    def linear(cls, g) -> "PiecewiseLinearConvexCost":
        g = np.asarray(g, dtype=float).ravel()
        return cls(g[None, :], np.zeros(1))

    @classmethod
    def abs_dev(cls, center) -> "PiecewiseLinearConvexCost":
        """``||x - center||_1`` on a one-dimensional x, or the sum over coordinates otherwise."""
        center = np.asarray(center, dtype=float).ravel()
        n = center.size
        if n == 1:
            return cls(np.array([[1.0], [-1.0]]), np.array([-center[0], center[0]]))
        # sum of |x_i - c_i| as max over all sign patterns (fine for small n)
        signs = np.array(np.meshgrid(*[[1.0, -1.0]] * n)).reshape(n, -1).T
        return cls(signs, -signs @ center)

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float).ravel()
        return float(np.max(self.grads @ x + self.offsets))


# ---------------------------------------------------------------------------
# uncertainty variants


@dataclass(frozen=True)
class Fixed:
    """Decision-independent set ``U0``."""

    U0: Polyhedron
    kind: str = field(default="fixed", init=False)


@dataclass(frozen=True)
class AffineRhs:
    """``U(x) = {u : G u <= g0 + H x}``."""

    G: np.ndarray
    g0: np.ndarray
    H: np.ndarray
    kind: str = field(default="affine_rhs", init=False)

    def __post_init__(self):
        G = np.atleast_2d(np.asarray(self.G, dtype=float))
        g0 = np.asarray(self.g0, dtype=float).ravel()
        H = np.asarray(self.H, dtype=float).reshape(G.shape[0], -1)
        if g0.size != G.shape[0]:
            raise ValueError("g0 must have one entry per row of G")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "g0", g0)
        object.__setattr__(self, "H", H)

    def rhs(self, x) -> np.ndarray:
        return self.g0 + self.H @ np.asarray(x, dtype=float).ravel()


@dataclass(frozen=True)
class Separable:
    """``U(x) = {E xi + F x + h : xi in Xi}``.

    ``Xi`` may be a single polytope or a tuple of polytopes read as their union.
    The realised set is always handled through its convex hull, which leaves
    robust feasibility and the worst-case recourse cost unchanged because both
    are maxima of functions convex in ``u``.
    """

    Xi: Union[Polyhedron, tuple]
    E: np.ndarray
    F: np.ndarray
    h: np.ndarray
    kind: str = field(default="separable", init=False)

    def __post_init__(self):
        pieces = self.Xi if isinstance(self.Xi, (tuple, list)) else (self.Xi,)
        pieces = tuple(pieces)
        if not pieces:
            raise ValueError("Xi needs at least one piece")
        dims = {P.dim for P in pieces}
        if len(dims) != 1:
            raise ValueError("all Xi pieces must share a dimension")
        E = np.atleast_2d(np.asarray(self.E, dtype=float))
        h = np.asarray(self.h, dtype=float).ravel()
        F = np.asarray(self.F, dtype=float).reshape(E.shape[0], -1)
        if E.shape[1] != pieces[0].dim:
            raise ValueError("E must have one column per xi coordinate")
        if h.size != E.shape[0]:
            raise ValueError("h must have one entry per row of E")
        object.__setattr__(self, "Xi", pieces[0] if len(pieces) == 1 else pieces)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "h", h)

    @property
    def pieces(self) -> tuple[Polyhedron, ...]:
        return self.Xi if isinstance(self.Xi, tuple) else (self.Xi,)

    @property
    def coupling(self) -> AffineMap:
        """Map of the stacked vector ``(xi, x)`` to ``u``."""
        return AffineMap(np.hstack([self.E, self.F]), self.h)

    def __call__(self, xi, x) -> np.ndarray:
        return self.E @ np.asarray(xi, dtype=float) + self.F @ np.asarray(x, dtype=float) + self.h

    def xi_vertices(self) -> np.ndarray:
        """Extreme points of the convex hull of the support (cached)."""
        cached = self.__dict__.get("_xi_vertices")
        if cached is None:
            pts = np.vstack([geo.vertices(P).points for P in self.pieces])
            cached = _extreme_subset(pts) if len(self.pieces) > 1 else geo._dedup(pts, geo.DEDUP_TOL)
            object.__setattr__(self, "_xi_vertices", cached)
        return cached

    def hull(self) -> Polyhedron:
        """H-representation of the convex hull of the support (cached)."""
        cached = self.__dict__.get("_hull")
        if cached is None:
            cached = _hull_of_union(self.pieces)
            object.__setattr__(self, "_hull", cached)
        return cached

    @property
    def injective(self) -> bool:
        return np.linalg.matrix_rank(self.E) == self.E.shape[1]


UncertaintySpec = Union[Fixed, AffineRhs, Separable]


def as_affine_rhs(spec: UncertaintySpec, n_x: int) -> AffineRhs:
    """A fixed set written as ``G u <= g0 + 0 x`` (equalities split)."""
    if isinstance(spec, AffineRhs):
        return spec
    if not isinstance(spec, Fixed):
        raise TypeError("only fixed sets convert to the affine right-hand-side form")
    G, g = spec.U0.inequalities()
    return AffineRhs(G, g, np.zeros((g.size, n_x)))


def as_separable(spec: UncertaintySpec, n_x: int) -> Separable:
    """A fixed set written as the identity image of itself."""
    if isinstance(spec, Separable):
        return spec
    if not isinstance(spec, Fixed):
        raise TypeError("only fixed sets convert to the separable form")
    d = spec.U0.dim
    return Separable(spec.U0, np.eye(d), np.zeros((d, n_x)), np.zeros(d))


# ---------------------------------------------------------------------------
# problem


@dataclass(frozen=True)
class TsroProblem:
    """``min f(x) + max_{u in U(x)} min_{y in Y(x,u)} c^T y`` over ``x in X``."""

    X: Polyhedron
    f: PiecewiseLinearConvexCost
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    b: np.ndarray
    c: np.ndarray
    uncertainty: UncertaintySpec
    y_free: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float).ravel()
        m = b.size
        nx = self.X.dim
        A = _mat(self.A, m, nx) if np.size(self.A) else np.zeros((m, nx))
        B = np.asarray(self.B, dtype=float).reshape(m, -1)
        c = np.asarray(self.c, dtype=float).ravel()
        if c.size != B.shape[1]:
            raise ValueError(f"c has {c.size} entries but B has {B.shape[1]} columns")
        C = np.asarray(self.C, dtype=float).reshape(m, -1)
        yf = np.zeros(B.shape[1], dtype=bool) if self.y_free is None else np.asarray(self.y_free, dtype=bool).ravel()
        if yf.size != B.shape[1]:
            raise ValueError("y_free needs one flag per recourse column")
        if self.f.grads.shape[1] != nx:
            raise ValueError("cost pieces must match the first-stage dimension")
        nu = C.shape[1]
        spec = self.uncertainty
        if isinstance(spec, Fixed) and spec.U0.dim != nu:
            raise ValueError("U0 dimension must match the columns of C")
        if isinstance(spec, AffineRhs) and (spec.G.shape[1] != nu or spec.H.shape[1] != nx):
            raise ValueError("AffineRhs G/H dimensions inconsistent with C and X")
        if isinstance(spec, Separable) and (spec.E.shape[0] != nu or spec.F.shape[1] != nx):
            raise ValueError("Separable coupling dimensions inconsistent with C and X")
        for k, v in (("A", A), ("B", B), ("C", C), ("b", b), ("c", c), ("y_free", yf)):
            object.__setattr__(self, k, v)

    @property
    def n_x(self) -> int:
        return self.X.dim

    @property
    def n_y(self) -> int:
        return self.B.shape[1]

    @property
    def n_u(self) -> int:
        return self.C.shape[1]

    @property
    def m(self) -> int:
        return self.b.size

    def with_uncertainty(self, spec: UncertaintySpec) -> "TsroProblem":
        return TsroProblem(self.X, self.f, self.A, self.B, self.C, self.b, self.c, spec, self.y_free, self.name)

    def with_X(self, X: Polyhedron) -> "TsroProblem":
        return TsroProblem(X, self.f, self.A, self.B, self.C, self.b, self.c, self.uncertainty, self.y_free, self.name)

    def with_costs(self, f=None, c=None) -> "TsroProblem":
        return TsroProblem(self.X, self.f if f is None else f, self.A, self.B, self.C, self.b,
                           self.c if c is None else c, self.uncertainty, self.y_free, self.name)

    def rhs(self, x, u) -> np.ndarray:
        """``b - A x - C u``."""
        return self.b - self.A @ np.asarray(x, dtype=float).ravel() - self.C @ np.asarray(u, dtype=float).ravel()

    def y_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lb = np.where(self.y_free, -np.inf, 0.0)
        return lb, np.full(self.n_y, np.inf)

    def recourse_set(self, x, u) -> Polyhedron:
        """``Y(x,u)`` including the sign rows of nonnegative columns."""
        nn = ~self.y_free
        sign_rows = -np.eye(self.n_y)[nn]
        return Polyhedron.from_rows(np.vstack([self.B, sign_rows]),
                                    np.concatenate([self.rhs(x, u), np.zeros(int(nn.sum()))]),
                                    dim=self.n_y, names=[f"y{i + 1}" for i in range(self.n_y)])

    def inner_lp(self, x, u) -> lp.LpProblem:
        lb, ub = self.y_bounds()
        return lp.LpProblem(c=self.c, A=self.B, rel=[lp.LE] * self.m, b=self.rhs(x, u), lb=lb, ub=ub)

    def slack_lp(self, x, u) -> lp.LpProblem:
        """``min 1^T s`` s.t. ``B y - s <= b - A x - C u``, ``s >= 0``; its duals lie in Xi."""
        lb, ub = self.y_bounds()
        m = self.m
        return lp.LpProblem(
            c=np.concatenate([np.zeros(self.n_y), np.ones(m)]),
            A=np.hstack([self.B, -np.eye(m)]),
            rel=[lp.LE] * m,
            b=self.rhs(x, u),
            lb=np.concatenate([lb, np.zeros(m)]),
            ub=np.concatenate([ub, np.full(m, np.inf)]),
        )


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def recourse_recession_ok(p: TsroProblem) -> bool:
    """True when ``{d : B d <= 0, d_j >= 0 on signed columns}`` is ``{0}``,
    i.e. every nonempty ``Y(x,u)`` is bounded."""
    n = p.n_y
    lb = np.where(p.y_free, -1.0, 0.0)
    ub = np.ones(n)
    for j in range(n):
        for s in (1.0, -1.0):
            e = np.zeros(n)
            e[j] = s
            out = lp.solve(lp.LpProblem(c=e, A=p.B, rel=[lp.LE] * p.m, b=np.zeros(p.m), lb=lb, ub=ub, sense="max"))
            if isinstance(out, lp.Optimal) and out.objective > TOL:
                return False
    return True


def anchor_points(X: Polyhedron, rng: np.random.Generator | None = None) -> np.ndarray:
    """Vertices of ``X``, or support points along the coordinate axes and random
    directions when full vertex enumeration is over budget."""
    try:
        return geo.vertices(X).points
    except geo.DimensionTooLarge:
        rng = rng or np.random.default_rng(0)
        n = X.dim
        dirs = np.vstack([np.eye(n), -np.eye(n), rng.normal(size=(2 * n, n))])
        return geo._dedup(np.array([geo.support(X, d)[1] for d in dirs]), geo.DEDUP_TOL)


def sample_points(X: Polyhedron, k: int, rng: np.random.Generator) -> np.ndarray:
    """Vertices of ``X`` (or support points, see ``anchor_points``) plus ``k`` random convex combinations."""
    V = anchor_points(X, rng)
    if k <= 0 or len(V) == 0:
        return V
    W = rng.dirichlet(np.ones(len(V)), size=k)
    return np.vstack([V, W @ V])


def validate(p: TsroProblem, *, samples: int = 10, seed: int = 0) -> ValidationReport:
    rep = ValidationReport()
    rng = np.random.default_rng(seed)
    # (a) X convex: a polyhedron by construction; check it is a nonempty polytope
    if isinstance(geo.is_empty(p.X), geo.Empty):
        rep.violations.append("X is empty")
        return rep
    bounded, _ = geo.is_bounded(p.X)
    if not bounded:
        rep.notes.append("X is unbounded; sampling skipped")
    # (b) f convex: max of affine pieces by construction
    # (c) U bounded
    spec = p.uncertainty
    pts = sample_points(p.X, samples, rng) if bounded else np.zeros((0, p.n_x))
    if isinstance(spec, Fixed):
        ok, _ = geo.is_bounded(spec.U0)
        if not ok:
            rep.violations.append("U0 is unbounded")
    elif isinstance(spec, Separable):
        for i, P in enumerate(spec.pieces):
            ok, _ = geo.is_bounded(P)
            if not ok:
                rep.violations.append(f"Xi piece {i} is unbounded")
    else:
        for x in pts:
            ok, _ = geo.is_bounded(Polyhedron.from_rows(spec.G, spec.rhs(x), dim=p.n_u))
            if not ok:
                rep.violations.append(f"U(x) unbounded at x={np.round(x, 9).tolist()}")
                break
    # (d) Y(x,u) bounded (recession cone independent of x,u)
    if not recourse_recession_ok(p):
        rep.violations.append("Y(x,u) is unbounded: the recourse recession cone is nontrivial")
    return rep


# ---------------------------------------------------------------------------
# instantiation and dual supports


def _hull_of_union(pieces: Sequence[Polyhedron]) -> Polyhedron:
    """H-representation of the convex hull of a union of polytopes (lifted
    disjunctive form, then projection)."""
    if len(pieces) == 1:
        return pieces[0]
    d = pieces[0].dim
    K = len(pieces)
    # variables: z (d), zeta_k (d each), lam_k (K)
    nv = d + K * d + K
    rows, rhs, eqs = [], [], []
    for k, P in enumerate(pieces):
        for a, e_, bb in zip(P.A, P.eq, P.b):
            r = np.zeros(nv)
            r[d + k * d: d + (k + 1) * d] = a
            r[d + K * d + k] = -bb
            rows.append(r)
            rhs.append(0.0)
            eqs.append(bool(e_))
        r = np.zeros(nv)
        r[d + K * d + k] = -1.0
        rows.append(r)
        rhs.append(0.0)
        eqs.append(False)
    for i in range(d):
        r = np.zeros(nv)
        r[i] = 1.0
        for k in range(K):
            r[d + k * d + i] = -1.0
        rows.append(r)
        rhs.append(0.0)
        eqs.append(True)
    r = np.zeros(nv)
    r[d + K * d:] = 1.0
    rows.append(r)
    rhs.append(1.0)
    eqs.append(True)
    lifted = Polyhedron(np.array(rows), np.array(rhs), np.array(eqs), tuple(f"v{i}" for i in range(nv)))
    return geo.project(lifted, list(range(d)))


def instantiate_ddus(spec: UncertaintySpec, x, *, check_bounded: bool = True) -> Polyhedron:
    """The realised uncertainty polytope at ``x``."""
    x = np.asarray(x, dtype=float).ravel()
    if isinstance(spec, Fixed):
        P = spec.U0
    elif isinstance(spec, AffineRhs):
        nu = spec.G.shape[1]
        P = Polyhedron.from_rows(spec.G, spec.rhs(x), dim=nu, names=[f"u{i + 1}" for i in range(nu)])
    elif isinstance(spec, Separable):
        hull = spec.hull()
        shift = spec.F @ x + spec.h
        E = spec.E
        nu, nxi = E.shape
        names = [f"u{i + 1}" for i in range(nu)]
        if nu == nxi and abs(np.linalg.det(E)) > 1e-12:
            Einv = np.linalg.inv(E)
            # xi = Einv (u - shift)
            P = Polyhedron(hull.A @ Einv, hull.b + hull.A @ Einv @ shift, hull.eq, tuple(names))
        else:
            # project {(u, xi) : xi in hull, u = E xi + shift} onto u
            A_top = np.hstack([np.zeros((hull.n_rows, nu)), hull.A])
            A_eq = np.hstack([np.eye(nu), -E])
            lifted = Polyhedron(np.vstack([A_top, A_eq]), np.concatenate([hull.b, shift]),
                                np.concatenate([hull.eq, np.ones(nu, dtype=bool)]),
                                tuple(names) + tuple(f"xi{i + 1}" for i in range(nxi)))
            P = geo.project(lifted, list(range(nu)))
    else:
        raise TypeError(f"unknown uncertainty spec {type(spec).__name__}")
    if check_bounded and not isinstance(spec, Fixed):
        ok, _ = geo.is_bounded(P)
        if not ok:
            raise UnboundedInstance(f"U(x) is unbounded at x={x.tolist()}")
    return P


def ddus_vertices(spec: UncertaintySpec, x) -> np.ndarray:
    """Vertices of ``U(x)``; an empty instance yields no vertices and a warning."""
    if isinstance(spec, Separable):
        # images of the support's extreme points cover the image's extreme points,
        # and an injective affine map sends extreme points to extreme points
        x = np.asarray(x, dtype=float).ravel()
        imgs = spec.xi_vertices() @ spec.E.T + (spec.F @ x + spec.h)
        V = imgs if spec.injective else _extreme_subset(imgs)
        order = np.lexsort(V.T[::-1])
        return V[order] + 0.0
    P = instantiate_ddus(spec, x)
    if isinstance(geo.is_empty(P), geo.Empty):
        warnings.warn(f"U(x) is empty at x={np.asarray(x).tolist()}; treated as vacuously robust",
                      EmptyUncertaintyWarning, stacklevel=2)
        return np.zeros((0, P.dim))
    return geo.vertices(P, check_bounded=False).points


def _extreme_subset(pts: np.ndarray) -> np.ndarray:
    pts = geo._dedup(pts, geo.DEDUP_TOL)
    if len(pts) <= 2:
        return pts
    keep = []
    for i in range(len(pts)):
        others = np.delete(pts, i, axis=0)
        if not geo.hull_contains_point(others, pts[i], tol=1e-9):
            keep.append(i)
    return pts[keep]


def xi_support(p: TsroProblem) -> Polyhedron:
    """``{xi : B_+^T xi <= 0, B_free^T xi = 0, -1 <= xi <= 0}``."""
    m = p.m
    Bn = p.B[:, ~p.y_free].T
    Bf = p.B[:, p.y_free].T
    A_ub = np.vstack([Bn, np.eye(m), -np.eye(m)])
    b_ub = np.concatenate([np.zeros(Bn.shape[0]), np.zeros(m), np.ones(m)])
    return Polyhedron.from_rows(A_ub, b_ub, Bf, np.zeros(Bf.shape[0]), dim=m,
                                names=[f"xi{i + 1}" for i in range(m)])


@dataclass(frozen=True)
class DualSupport:
    polyhedron: Polyhedron
    bounded: bool


def pi_support(p: TsroProblem) -> DualSupport:
    """``{pi : B_+^T pi <= c_+, B_free^T pi = c_free, pi <= 0}`` with a boundedness flag."""
    m = p.m
    Bn = p.B[:, ~p.y_free].T
    Bf = p.B[:, p.y_free].T
    A_ub = np.vstack([Bn, np.eye(m)])
    b_ub = np.concatenate([p.c[~p.y_free], np.zeros(m)])
    P = Polyhedron.from_rows(A_ub, b_ub, Bf, p.c[p.y_free], dim=m, names=[f"pi{i + 1}" for i in range(m)])
    bounded, _ = geo.is_bounded(P)
    return DualSupport(P, bounded)


# ---------------------------------------------------------------------------
# surrogates


@dataclass
class SeparableSurrogate:
    """Decision-independent support plus the argmax coupling into ``U(x)``."""

    support: Polyhedron
    coupling: Callable[[np.ndarray, np.ndarray], np.ndarray | None]
    support_bounded: bool = True


def coupling_argmax(p: TsroProblem, w, x) -> np.ndarray | None:
    """Lexicographically smallest maximiser of ``-w^T C u`` over ``U(x)``; ``None`` when ``U(x)`` is empty."""
    P = instantiate_ddus(p.uncertainty, x)
    d = -p.C.T @ np.asarray(w, dtype=float)
    try:
        _, u = geo.support(P, d, lexmin=True)
    except geo.EmptySet:
        warnings.warn("U(x) is empty; coupling undefined", EmptyUncertaintyWarning, stacklevel=2)
        return None
    return u


def surrogate_fea(p: TsroProblem) -> SeparableSurrogate:
    return SeparableSurrogate(xi_support(p), lambda xi, x: coupling_argmax(p, xi, x))


def surrogate_opt(p: TsroProblem) -> SeparableSurrogate:
    ds = pi_support(p)
    return SeparableSurrogate(ds.polyhedron, lambda pi, x: coupling_argmax(p, pi, x), ds.bounded)


def nearest_point_coupling(p: TsroProblem) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Projection coupling: ``u -> argmin_{v in U(x)} ||v - u||_2``."""

    def coupling(u, x):
        return geo.nearest_point(instantiate_ddus(p.uncertainty, x), u)

    return coupling


# ---------------------------------------------------------------------------
# serialisation


FORMAT_VERSION = 1


def _poly_to_dict(P: Polyhedron) -> dict:
    return {"dim": P.dim, "A": P.A.tolist(), "b": P.b.tolist(), "eq": P.eq.astype(bool).tolist(),
            "names": list(P.names)}


def _poly_from_dict(d: dict) -> Polyhedron:
    dim = int(d["dim"])
    A = np.asarray(d["A"], dtype=float).reshape(-1, dim)
    b = np.asarray(d["b"], dtype=float).ravel()
    eq = np.asarray(d.get("eq", [False] * b.size), dtype=bool)
    return Polyhedron(A, b, eq, tuple(d.get("names") or ()))


def problem_to_dict(p: TsroProblem) -> dict:
    spec = p.uncertainty
    if isinstance(spec, Fixed):
        u = {"variant": "fixed", "U0": _poly_to_dict(spec.U0)}
    elif isinstance(spec, AffineRhs):
        u = {"variant": "affine_rhs", "G": spec.G.tolist(), "g0": spec.g0.tolist(), "H": spec.H.tolist()}
    else:
        u = {"variant": "separable", "Xi": [_poly_to_dict(P) for P in spec.pieces],
             "E": spec.E.tolist(), "F": spec.F.tolist(), "h": spec.h.tolist()}
    return {
        "format_version": FORMAT_VERSION,
        "name": p.name,
        "dims": {"n_x": p.n_x, "n_y": p.n_y, "n_u": p.n_u, "m": p.m},
        "X": _poly_to_dict(p.X),
        "cost": {"grads": p.f.grads.tolist(), "offsets": p.f.offsets.tolist()},
        "A": p.A.tolist(),
        "B": p.B.tolist(),
        "C": p.C.tolist(),
        "b": p.b.tolist(),
        "c": p.c.tolist(),
        "y_free": p.y_free.astype(bool).tolist(),
        "uncertainty": u,
    }


class ParseError(ValueError):
    def __init__(self, field_name: str, msg: str):
        super().__init__(f"{field_name}: {msg}")
        self.field = field_name


def _need(d: dict, key: str, where: str):
    if key not in d:
        raise ParseError(f"{where}.{key}" if where else key, "missing field")
    return d[key]


def problem_from_dict(d: dict) -> TsroProblem:
    if not isinstance(d, dict):
        raise ParseError("<root>", "expected a JSON object")
    ver = _need(d, "format_version", "")
    if ver != FORMAT_VERSION:
        raise ParseError("format_version", f"unsupported version {ver!r}")
    dims = _need(d, "dims", "")
    try:
        n_x, n_y, n_u, m = (int(dims[k]) for k in ("n_x", "n_y", "n_u", "m"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError("dims", f"need integer n_x, n_y, n_u, m ({exc})") from None

    def arr(key, shape):
        raw = _need(d, key, "")
        try:
            a = np.asarray(raw, dtype=float)
            return a.reshape(shape)
        except (TypeError, ValueError) as exc:
            raise ParseError(key, f"expected numeric array of shape {shape} ({exc})") from None

    try:
        X = _poly_from_dict(_need(d, "X", ""))
        cost = _need(d, "cost", "")
        f = PiecewiseLinearConvexCost(np.asarray(cost["grads"], dtype=float).reshape(-1, n_x),
                                      np.asarray(cost["offsets"], dtype=float))
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError("X/cost", str(exc)) from None
    if X.dim != n_x:
        raise ParseError("X.dim", f"expected {n_x}")
    A = arr("A", (m, n_x))
    B = arr("B", (m, n_y))
    C = arr("C", (m, n_u))
    b = arr("b", (m,))
    c = arr("c", (n_y,))
    y_free = np.asarray(d.get("y_free", [False] * n_y), dtype=bool)
    u = _need(d, "uncertainty", "")
    variant = _need(u, "variant", "uncertainty")
    try:
        if variant == "fixed":
            spec = Fixed(_poly_from_dict(u["U0"]))
        elif variant == "affine_rhs":
            G = np.asarray(u["G"], dtype=float).reshape(-1, n_u)
            spec = AffineRhs(G, np.asarray(u["g0"], dtype=float), np.asarray(u["H"], dtype=float).reshape(-1, n_x))
        elif variant == "separable":
            pieces = tuple(_poly_from_dict(q) for q in u["Xi"])
            spec = Separable(pieces if len(pieces) > 1 else pieces[0], np.asarray(u["E"], dtype=float),
                             np.asarray(u["F"], dtype=float), np.asarray(u["h"], dtype=float))
        else:
            raise ParseError("uncertainty.variant", f"unknown variant {variant!r}")
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"uncertainty({variant})", str(exc)) from None
    try:
        return TsroProblem(X, f, A, B, C, b, c, spec, y_free, d.get("name", ""))
    except ValueError as exc:
        raise ParseError("<problem>", str(exc)) from None
