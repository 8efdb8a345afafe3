"""Builders for three power-system dispatch problems with decision-dependent uncertainty.

* wind reserve: wind farms hold back ``lambda * P_rate`` below their maximum
  power point, so the available power is ``P_mppt - R`` (a separable set);
* demand response: a load's set-point ``d0`` is chosen here-and-now and its
  fluctuation box scales with ``d0 / d_e`` (right-hand side affine in ``x``);
* virtual power plant: the regulating signal is bounded by the reserve
  capacity the plant sells (right-hand side affine in ``x``).

The bundled fixtures under ``data/`` are invented for this toolkit; no
published data set exists for these instances.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, fields
from importlib import resources

import numpy as np

from . import geometry as geo
from .geometry import Polyhedron
from .model import AffineRhs, PiecewiseLinearConvexCost, Separable, TsroProblem


class InvalidInstance(ValueError):
    pass


def _arr(v, n=None, name="value") -> np.ndarray:
    a = np.asarray(v, dtype=float).ravel()
    if n is not None and a.size == 1 and n != 1:
        a = np.full(n, a[0])
    if n is not None and a.size != n:
        raise InvalidInstance(f"{name} needs {n} entries, got {a.size}")
    return a


def _arr2(v, shape, name) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.size == 1:
        a = np.full(shape, a.item())
    if a.shape != shape:
        raise InvalidInstance(f"{name} needs shape {shape}, got {a.shape}")
    return a


def linear_plus_abs(g, idx, weights, centers) -> PiecewiseLinearConvexCost:
    """``g.x + sum_i w_i |x[idx_i] - c_i|`` as a max of affine pieces (one per sign pattern)."""
    g = np.asarray(g, dtype=float).ravel()
    idx = list(idx)
    if not idx:
        return PiecewiseLinearConvexCost.linear(g)
    grads, offs = [], []
    for s in itertools.product([1.0, -1.0], repeat=len(idx)):
        gr = g.copy()
        off = 0.0
        for si, i, w, c in zip(s, idx, weights, centers):
            gr[i] += si * w
            off -= si * w * c
        grads.append(gr)
        offs.append(off)
    return PiecewiseLinearConvexCost(np.array(grads), np.array(offs))


class _Rows:
    """Accumulates ``A x + B y + C u <= b`` rows by named column offsets."""

    def __init__(self, nx, ny, nu):
        self.nx, self.ny, self.nu = nx, ny, nu
        self.A, self.B, self.C, self.b = [], [], [], []

    def add(self, rhs, x=(), y=(), u=()):
        a, bb, cc = np.zeros(self.nx), np.zeros(self.ny), np.zeros(self.nu)
        for i, v in x:
            a[i] += v
        for i, v in y:
            bb[i] += v
        for i, v in u:
            cc[i] += v
        self.A.append(a)
        self.B.append(bb)
        self.C.append(cc)
        self.b.append(float(rhs))

    def equal(self, rhs, x=(), y=(), u=()):
        self.add(rhs, x, y, u)
        neg = lambda t: [(i, -v) for i, v in t]  # noqa: E731
        self.add(-rhs, neg(x), neg(y), neg(u))

    def arrays(self):
        return (np.array(self.A).reshape(-1, self.nx), np.array(self.B), np.array(self.C).reshape(-1, self.nu),
                np.array(self.b))


class _XRows:
    """First-stage rows ``G x <= g`` and ``Geq x = geq``."""

    def __init__(self, nx):
        self.nx = nx
        self.ub, self.bub, self.eq, self.beq = [], [], [], []

    def le(self, rhs, terms):
        r = np.zeros(self.nx)
        for i, v in terms:
            r[i] += v
        self.ub.append(r)
        self.bub.append(float(rhs))

    def ge(self, rhs, terms):
        self.le(-rhs, [(i, -v) for i, v in terms])

    def equal(self, rhs, terms):
        r = np.zeros(self.nx)
        for i, v in terms:
            r[i] += v
        self.eq.append(r)
        self.beq.append(float(rhs))

    def bounds(self, i, lo, hi):
        self.le(hi, [(i, 1.0)])
        self.ge(lo, [(i, 1.0)])

    def polyhedron(self, names) -> Polyhedron:
        A_eq = np.array(self.eq).reshape(-1, self.nx) if self.eq else None
        b_eq = np.array(self.beq) if self.eq else None
        return Polyhedron.from_rows(np.array(self.ub), np.array(self.bub), A_eq, b_eq, dim=self.nx, names=names)


@dataclass(frozen=True)
class _Instance:
    """Shared JSON round-trip for the instance dataclasses."""

    def to_dict(self) -> dict:
        out = {}
        for k, v in asdict(self).items():
            out[k] = v.tolist() if isinstance(v, np.ndarray) else v
        return out

    @classmethod
    def from_dict(cls, d: dict):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known - {"note"}
        if unknown:
            raise InvalidInstance(f"unknown fields {sorted(unknown)}")
        return cls(**{k: v for k, v in d.items() if k in known})


def _fixture(name: str) -> dict:
    return json.loads(resources.files("ddurobust").joinpath("data", name).read_text())


# ---------------------------------------------------------------------------
# wind


@dataclass(frozen=True)
class MpptParams:
    v_in: float = 4.0
    v_rate: float = 10.0
    v_out: float = 22.0
    p_rate: float = 2.0
    mu0: float | None = None  # defaults to p_rate / v_rate**3

    @property
    def coefficient(self) -> float:
        return self.p_rate / self.v_rate ** 3 if self.mu0 is None else self.mu0


def mppt_power(v, params: MpptParams = MpptParams()):
    """Maximum-power-point output of a turbine at wind speed ``v`` (MW)."""
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("wind speed must be nonnegative")
    out = np.where(v < params.v_in, 0.0,
                   np.where(v <= params.v_rate, params.coefficient * v ** 3,
                            np.where(v <= params.v_out, params.p_rate, 0.0)))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class WindReserveInstance(_Instance):
    """``J`` wind farms over ``K`` periods plus one thermal unit.

    ``p_av`` and ``p_h`` are ``J x K`` (expected MPPT power and fluctuation level).
    """

    p_rate: list
    p_av: list
    p_h: list
    gamma_t: list
    gamma_s: list
    load: list
    lam_min: float = 0.0
    lam_max: float = 0.2
    reserve_req: list | float = 0.0
    thermal_min: float = 0.0
    thermal_max: float = 10.0
    thermal_ramp: float = 5.0
    shed_max: float = 0.0
    cost_energy: float = 20.0
    cost_thermal_reserve: float = 8.0
    cost_wind_reserve: float = 2.0
    cost_up: float = 30.0
    cost_down: float = 1.0
    cost_spill: float = 5.0
    cost_shed: float = 500.0

    def __post_init__(self):
        pr = _arr(self.p_rate, name="p_rate")
        J = pr.size
        pav = np.atleast_2d(np.asarray(self.p_av, dtype=float))
        if pav.shape[0] != J:
            raise InvalidInstance("p_av needs one row per wind farm")
        K = pav.shape[1]
        ph = _arr2(self.p_h, (J, K), "p_h")
        gt, gs = _arr(self.gamma_t, J, "gamma_t"), _arr(self.gamma_s, K, "gamma_s")
        _arr(self.load, K, "load")
        _arr(self.reserve_req, K, "reserve_req")
        if np.any(pr <= 0):
            raise InvalidInstance("rated power must be positive")
        if np.any(ph <= 0):
            raise InvalidInstance("fluctuation levels must be positive")
        if np.any(gt < 0) or np.any(gs < 0):
            raise InvalidInstance("budgets must be nonnegative")
        if not 0.0 <= self.lam_min <= self.lam_max <= 1.0:
            raise InvalidInstance("de-loading ratio bounds must satisfy 0 <= lam_min <= lam_max <= 1")
        if np.any(pav < 0) or np.any(pav > pr[:, None] + 1e-12):
            raise InvalidInstance("expected power must lie in [0, p_rate]")
        if self.thermal_min > self.thermal_max:
            raise InvalidInstance("thermal_min exceeds thermal_max")

    @property
    def shape(self) -> tuple[int, int]:
        pav = np.atleast_2d(np.asarray(self.p_av, dtype=float))
        return pav.shape


def wind_support(inst: WindReserveInstance) -> Polyhedron:
    """MPPT power set: box ``[0, P_rate]`` plus temporal and spatial deviation budgets.

    Built with one deviation variable per coordinate and projected onto ``xi``.
    """
    J, K = inst.shape
    n = J * K
    pr = _arr(inst.p_rate)
    pav = np.asarray(inst.p_av, dtype=float)
    ph = _arr2(inst.p_h, (J, K), "p_h")
    gt, gs = _arr(inst.gamma_t, J), _arr(inst.gamma_s, K)
    k = lambda j, t: j * K + t  # noqa: E731
    rows, rhs = [], []
    for j in range(J):
        for t in range(K):
            i = k(j, t)
            for s in (1.0, -1.0):
                # s (xi - p_av) / p_h <= e
                r = np.zeros(2 * n)
                r[i] = s / ph[j, t]
                r[n + i] = -1.0
                rows.append(r)
                rhs.append(s * pav[j, t] / ph[j, t])
            r = np.zeros(2 * n)
            r[i] = 1.0
            rows.append(r)
            rhs.append(pr[j])
            r = np.zeros(2 * n)
            r[i] = -1.0
            rows.append(r)
            rhs.append(0.0)
    for j in range(J):
        r = np.zeros(2 * n)
        r[[n + k(j, t) for t in range(K)]] = 1.0
        rows.append(r)
        rhs.append(gt[j])
    for t in range(K):
        r = np.zeros(2 * n)
        r[[n + k(j, t) for j in range(J)]] = 1.0
        rows.append(r)
        rhs.append(gs[t])
    names = [f"pmppt_{j + 1}_{t + 1}" for j in range(J) for t in range(K)]
    names += [f"dev_{j + 1}_{t + 1}" for j in range(J) for t in range(K)]
    lifted = Polyhedron.from_rows(np.array(rows), np.array(rhs), dim=2 * n, names=names)
    Xi = geo.project(lifted, list(range(n)))
    return Polyhedron(Xi.A, Xi.b, Xi.eq, tuple(names[:n]))


@dataclass(frozen=True)
class WindLayout:
    """Column offsets of the wind problem."""

    J: int
    K: int

    # first stage: thermal p (K), thermal reserve r (K), wind schedule w (JK), wind reserve R (JK)
    def p(self, t):
        return t

    def r(self, t):
        return self.K + t

    def w(self, j, t):
        return 2 * self.K + j * self.K + t

    def R(self, j, t):
        return 2 * self.K + self.J * self.K + j * self.K + t

    @property
    def n_x(self):
        return 2 * self.K + 2 * self.J * self.K

    # recourse: spill (JK), thermal up (K), thermal down (K), shed (K)
    def spill(self, j, t):
        return j * self.K + t

    def up(self, t):
        return self.J * self.K + t

    def down(self, t):
        return self.J * self.K + self.K + t

    def shed(self, t):
        return self.J * self.K + 2 * self.K + t

    @property
    def n_y(self):
        return self.J * self.K + 3 * self.K


def build_wind_reserve(inst: WindReserveInstance) -> TsroProblem:
    """Delta de-loading reserve problem; ``u = P_mppt - R`` with ``R = lambda P_rate`` first-stage."""
    J, K = inst.shape
    L = WindLayout(J, K)
    n = J * K
    pr = _arr(inst.p_rate)
    pav = np.asarray(inst.p_av, dtype=float)
    load = _arr(inst.load, K)
    req = _arr(inst.reserve_req, K)
    Xi = wind_support(inst)
    # robustness precondition: R <= min over Xi of P_mppt, per coordinate
    floor = np.array([-geo.support(Xi, -np.eye(n)[i])[0] for i in range(n)])

    X = _XRows(L.n_x)
    for t in range(K):
        X.ge(inst.thermal_min, [(L.p(t), 1.0)])
        X.le(inst.thermal_max, [(L.p(t), 1.0), (L.r(t), 1.0)])
        X.bounds(L.r(t), 0.0, inst.thermal_ramp)
        X.equal(load[t], [(L.p(t), 1.0)] + [(L.w(j, t), 1.0) for j in range(J)])
        X.ge(req[t], [(L.r(t), 1.0)] + [(L.R(j, t), 1.0) for j in range(J)])
        for j in range(J):
            X.bounds(L.R(j, t), inst.lam_min * pr[j], inst.lam_max * pr[j])
            X.le(floor[j * K + t], [(L.R(j, t), 1.0)])
            X.ge(0.0, [(L.w(j, t), 1.0)])
            X.le(pav[j, t], [(L.w(j, t), 1.0), (L.R(j, t), 1.0)])
    names = ([f"p_{t + 1}" for t in range(K)] + [f"r_{t + 1}" for t in range(K)]
             + [f"w_{j + 1}_{t + 1}" for j in range(J) for t in range(K)]
             + [f"R_{j + 1}_{t + 1}" for j in range(J) for t in range(K)])
    Xp = X.polyhedron(names)

    g = np.zeros(L.n_x)
    for t in range(K):
        g[L.p(t)] = inst.cost_energy
        g[L.r(t)] = inst.cost_thermal_reserve
        for j in range(J):
            g[L.R(j, t)] = inst.cost_wind_reserve
    f = PiecewiseLinearConvexCost.linear(g)

    rows = _Rows(L.n_x, L.n_y, n)
    for t in range(K):
        for j in range(J):
            # spilled power cannot exceed what is available
            rows.add(0.0, y=[(L.spill(j, t), 1.0)], u=[(j * K + t, -1.0)])
        rows.add(0.0, x=[(L.r(t), -1.0)], y=[(L.up(t), 1.0)])
        rows.add(-inst.thermal_min, x=[(L.p(t), -1.0)], y=[(L.down(t), 1.0)])
        rows.add(inst.shed_max, y=[(L.shed(t), 1.0)])
        # p + up - down + sum(u - spill) + shed = load
        rows.equal(load[t], x=[(L.p(t), 1.0)],
                   y=[(L.up(t), 1.0), (L.down(t), -1.0), (L.shed(t), 1.0)]
                   + [(L.spill(j, t), -1.0) for j in range(J)],
                   u=[(j * K + t, 1.0) for j in range(J)])
    A, B, C, b = rows.arrays()
    c = np.zeros(L.n_y)
    for t in range(K):
        c[L.up(t)] = inst.cost_up
        c[L.down(t)] = inst.cost_down
        c[L.shed(t)] = inst.cost_shed
        for j in range(J):
            c[L.spill(j, t)] = inst.cost_spill
    F = np.zeros((n, L.n_x))
    for j in range(J):
        for t in range(K):
            F[j * K + t, L.R(j, t)] = -1.0
    spec = Separable(Xi, np.eye(n), F, np.zeros(n))
    return TsroProblem(X=Xp, f=f, A=A, B=B, C=C, b=b, c=c, uncertainty=spec, name="wind-reserve")


def wind_fixture() -> WindReserveInstance:
    return WindReserveInstance.from_dict(_fixture("wind_2x3.json"))


# ---------------------------------------------------------------------------
# demand response


def dc_ptdf(n_bus: int, lines, slack: int = 0) -> np.ndarray:
    """Power transfer distribution factors of a DC network; ``lines`` are ``(from, to, reactance)``."""
    Bbus = np.zeros((n_bus, n_bus))
    Bf = np.zeros((len(lines), n_bus))
    for l, (i, j, x) in enumerate(lines):
        y = 1.0 / x
        Bbus[i, i] += y
        Bbus[j, j] += y
        Bbus[i, j] -= y
        Bbus[j, i] -= y
        Bf[l, i], Bf[l, j] = y, -y
    keep = [k for k in range(n_bus) if k != slack]
    theta = np.zeros((n_bus, n_bus))
    theta[np.ix_(keep, keep)] = np.linalg.inv(Bbus[np.ix_(keep, keep)])
    return Bf @ theta


@dataclass(frozen=True)
class DemandResponseInstance(_Instance):
    """DC network with dispatchable generators and responsive loads.

    ``lines`` rows are ``[from_bus, to_bus, reactance, limit]`` (buses 0-based).
    """

    n_bus: int
    lines: list
    gen_bus: list
    gen_min: list
    gen_max: list
    gen_ramp: list
    gen_cost: list
    load_bus: list
    d_e: list
    delta_minus: list
    delta_plus: list
    d0_min: list
    d0_max: list
    fixed_load: list
    reserve_cost: float = 2.0
    up_cost: float = 10.0
    down_cost: float = 1.0
    dr_cost: list | float = 5.0

    def __post_init__(self):
        G, J = len(self.gen_bus), len(self.load_bus)
        if G == 0 or J == 0:
            raise InvalidInstance("need at least one generator and one responsive load")
        for k in ("gen_min", "gen_max", "gen_ramp", "gen_cost"):
            _arr(getattr(self, k), G, k)
        for k in ("d_e", "delta_minus", "delta_plus", "d0_min", "d0_max"):
            _arr(getattr(self, k), J, k)
        _arr(self.fixed_load, self.n_bus, "fixed_load")
        _arr(self.dr_cost, J, "dr_cost")
        if np.any(_arr(self.d_e) <= 0):
            raise InvalidInstance("forecast loads d_e must be positive")
        if np.any(_arr(self.delta_minus) < 0) or np.any(_arr(self.delta_plus) < 0):
            raise InvalidInstance("fluctuation bounds must be nonnegative")
        if np.any(_arr(self.delta_minus) > _arr(self.d_e)):
            raise InvalidInstance("delta_minus cannot exceed d_e (loads stay nonnegative)")
        if np.any(_arr(self.d0_min) > _arr(self.d0_max)) or np.any(_arr(self.d0_min) < 0):
            raise InvalidInstance("set-point bounds must satisfy 0 <= d0_min <= d0_max")
        buses = list(self.gen_bus) + list(self.load_bus) + [ln[0] for ln in self.lines] + [ln[1] for ln in self.lines]
        if any(not 0 <= int(k) < self.n_bus for k in buses):
            raise InvalidInstance("bus index out of range")
        if any(ln[2] <= 0 or ln[3] < 0 for ln in self.lines):
            raise InvalidInstance("line reactances must be positive and limits nonnegative")

    @property
    def symmetric(self) -> bool:
        return bool(np.allclose(_arr(self.delta_minus), _arr(self.delta_plus)))

    def ratios(self) -> tuple[np.ndarray, np.ndarray]:
        de = _arr(self.d_e)
        return _arr(self.delta_minus) / de, _arr(self.delta_plus) / de


def demand_response_ddus(inst: DemandResponseInstance, n_x: int, d0_cols) -> AffineRhs:
    """``d0 (1 - delta_minus/d_e) <= d <= d0 (1 + delta_plus/d_e)`` as rows affine in ``x``."""
    J = len(inst.load_bus)
    rm, rp = inst.ratios()
    G = np.vstack([np.eye(J), -np.eye(J)])
    H = np.zeros((2 * J, n_x))
    for j, col in enumerate(d0_cols):
        H[j, col] = 1.0 + rp[j]
        H[J + j, col] = -(1.0 - rm[j])
    return AffineRhs(G, np.zeros(2 * J), H)


def demand_response_diu(inst: DemandResponseInstance) -> Polyhedron:
    """The forecast-centred box ``[d_e - delta_minus, d_e + delta_plus]`` that ignores the set-point."""
    de = _arr(inst.d_e)
    return Polyhedron.box(de - _arr(inst.delta_minus), de + _arr(inst.delta_plus),
                          names=[f"d{j + 1}" for j in range(de.size)])


def build_demand_response(inst: DemandResponseInstance) -> TsroProblem:
    """Robust dispatch with responsive loads whose fluctuation box follows the set-point ``d0``.

    First stage ``x = (p, r_up, r_down, d0)``; recourse ``y = (up, down)`` per
    generator; ``u = d`` (realised responsive loads).
    """
    G, J, nb = len(inst.gen_bus), len(inst.load_bus), inst.n_bus
    nx = 3 * G + J
    P, RU, RD, D0 = 0, G, 2 * G, 3 * G
    gmin, gmax = _arr(inst.gen_min), _arr(inst.gen_max)
    ramp, gcost = _arr(inst.gen_ramp), _arr(inst.gen_cost)
    fixed = _arr(inst.fixed_load, nb)
    ptdf = dc_ptdf(nb, [(int(a), int(b_), x) for a, b_, x, _ in inst.lines])
    limits = np.array([ln[3] for ln in inst.lines], dtype=float)
    gb = [int(k) for k in inst.gen_bus]
    lb_ = [int(k) for k in inst.load_bus]

    X = _XRows(nx)
    for g in range(G):
        X.ge(gmin[g], [(P + g, 1.0), (RD + g, -1.0)])
        X.le(gmax[g], [(P + g, 1.0), (RU + g, 1.0)])
        X.bounds(RU + g, 0.0, ramp[g])
        X.bounds(RD + g, 0.0, ramp[g])
    for j in range(J):
        X.bounds(D0 + j, _arr(inst.d0_min)[j], _arr(inst.d0_max)[j])
    X.equal(fixed.sum(), [(P + g, 1.0) for g in range(G)] + [(D0 + j, -1.0) for j in range(J)])
    for l in range(len(limits)):
        terms = [(P + g, ptdf[l, gb[g]]) for g in range(G)] + [(D0 + j, -ptdf[l, lb_[j]]) for j in range(J)]
        off = float(ptdf[l] @ fixed)
        X.le(limits[l] + off, terms)
        X.ge(-limits[l] + off, terms)
    names = ([f"p{g + 1}" for g in range(G)] + [f"rup{g + 1}" for g in range(G)]
             + [f"rdn{g + 1}" for g in range(G)] + [f"d0_{j + 1}" for j in range(J)])
    Xp = X.polyhedron(names)

    lin = np.zeros(nx)
    lin[P:P + G] = gcost
    lin[RU:RU + G] = inst.reserve_cost
    lin[RD:RD + G] = inst.reserve_cost
    f = linear_plus_abs(lin, range(D0, D0 + J), _arr(inst.dr_cost, J), _arr(inst.d_e))

    ny = 2 * G
    UP, DN = 0, G
    rows = _Rows(nx, ny, J)
    for g in range(G):
        rows.add(0.0, x=[(RU + g, -1.0)], y=[(UP + g, 1.0)])
        rows.add(0.0, x=[(RD + g, -1.0)], y=[(DN + g, 1.0)])
    # sum(p + up - down) = sum(d) + fixed
    rows.equal(fixed.sum(), x=[(P + g, 1.0) for g in range(G)],
               y=[(UP + g, 1.0) for g in range(G)] + [(DN + g, -1.0) for g in range(G)],
               u=[(j, -1.0) for j in range(J)])
    for l in range(len(limits)):
        xs = [(P + g, ptdf[l, gb[g]]) for g in range(G)]
        ys = [(UP + g, ptdf[l, gb[g]]) for g in range(G)] + [(DN + g, -ptdf[l, gb[g]]) for g in range(G)]
        us = [(j, -ptdf[l, lb_[j]]) for j in range(J)]
        off = float(ptdf[l] @ fixed)
        rows.add(limits[l] + off, x=xs, y=ys, u=us)
        neg = lambda t: [(i, -v) for i, v in t]  # noqa: E731
        rows.add(limits[l] - off, x=neg(xs), y=neg(ys), u=neg(us))
    A, B, C, b = rows.arrays()
    c = np.concatenate([np.full(G, inst.up_cost), np.full(G, inst.down_cost)])
    spec = demand_response_ddus(inst, nx, range(D0, D0 + J))
    return TsroProblem(X=Xp, f=f, A=A, B=B, C=C, b=b, c=c, uncertainty=spec, name="demand-response")


def demand_response_fixture() -> DemandResponseInstance:
    return DemandResponseInstance.from_dict(_fixture("dr_5bus.json"))


# ---------------------------------------------------------------------------
# virtual power plant


@dataclass(frozen=True)
class VppInstance(_Instance):
    """Plant with a thermal unit, a storage unit and wind, trading energy and reserve over ``K`` periods."""

    price_energy: list
    price_reserve_up: list
    price_reserve_down: list
    sig_up: list
    sig_down: list
    wind: list
    demand: list
    exch_max: float = 10.0
    rc_up_max: list | float = 3.0
    rc_down_max: list | float = 3.0
    gen_max: float = 6.0
    gen_cost: float = 30.0
    storage_power: float = 2.0
    storage_energy: float = 4.0
    storage_init: float = 2.0
    storage_eff: float = 0.95
    storage_cost: float = 0.5

    def __post_init__(self):
        K = _arr(self.price_energy).size
        for k in ("price_reserve_up", "price_reserve_down", "sig_up", "sig_down", "wind", "demand"):
            _arr(getattr(self, k), K, k)
        for k in ("rc_up_max", "rc_down_max"):
            if np.any(_arr(getattr(self, k), K, k) < 0):
                raise InvalidInstance(f"{k} must be nonnegative")
        for k in ("sig_up", "sig_down"):
            s = _arr(getattr(self, k), K)
            if np.any(s < 0) or np.any(s > 1):
                raise InvalidInstance(f"{k} must lie in [0, 1]")
        if min(self.gen_max, self.storage_power, self.storage_energy, self.exch_max) < 0:
            raise InvalidInstance("device limits must be nonnegative")
        if not 0 <= self.storage_init <= self.storage_energy:
            raise InvalidInstance("initial storage level outside [0, storage_energy]")
        if not 0 < self.storage_eff <= 1:
            raise InvalidInstance("storage efficiency must lie in (0, 1]")

    @property
    def K(self) -> int:
        return _arr(self.price_energy).size


def vpp_ddus(inst: VppInstance) -> AffineRhs:
    """Regulating signals ``u = (P_R+, P_R-)`` bounded by the sold capacities and the call-fraction budgets."""
    K = inst.K
    nx = 3 * K
    su, sd = _arr(inst.sig_up, K), _arr(inst.sig_down, K)
    G, H = [], []
    for t in range(K):
        for blk, xcol in ((0, K), (K, 2 * K)):
            r = np.zeros(2 * K)
            r[blk + t] = 1.0
            h = np.zeros(nx)
            h[xcol + t] = 1.0
            G.append(r)
            H.append(h)
            G.append(-r)
            H.append(np.zeros(nx))
    for blk, xcol, sig in ((0, K, su), (K, 2 * K, sd)):
        r = np.zeros(2 * K)
        r[blk:blk + K] = 1.0
        h = np.zeros(nx)
        h[xcol:xcol + K] = sig
        G.append(r)
        H.append(h)
    return AffineRhs(np.array(G), np.zeros(len(G)), np.array(H))


def build_vpp(inst: VppInstance) -> TsroProblem:
    """Energy/reserve self-scheduling; minimises the negative market profit plus dispatch cost.

    First stage ``x = (P_E, P_RC+, P_RC-)``; recourse ``y = (gen, charge,
    discharge, spill)`` per period; exchange ``P_E + P_R+ - P_R-`` must be met
    by ``gen + wind - spill + discharge - charge - demand``.
    """
    K = inst.K
    nx = 3 * K
    E, RU, RD = 0, K, 2 * K
    X = _XRows(nx)
    rcu, rcd = _arr(inst.rc_up_max, K), _arr(inst.rc_down_max, K)
    for t in range(K):
        X.bounds(E + t, -inst.exch_max, inst.exch_max)
        X.bounds(RU + t, 0.0, rcu[t])
        X.bounds(RD + t, 0.0, rcd[t])
        X.le(inst.exch_max, [(E + t, 1.0), (RU + t, 1.0)])
        X.ge(-inst.exch_max, [(E + t, 1.0), (RD + t, -1.0)])
    names = [f"pe{t + 1}" for t in range(K)] + [f"rcup{t + 1}" for t in range(K)] + [f"rcdn{t + 1}" for t in range(K)]
    Xp = X.polyhedron(names)
    g = -np.concatenate([_arr(inst.price_energy), _arr(inst.price_reserve_up, K), _arr(inst.price_reserve_down, K)])
    f = PiecewiseLinearConvexCost.linear(g)

    ny = 4 * K
    GEN, CH, DIS, SP = 0, K, 2 * K, 3 * K
    wind, dem = _arr(inst.wind, K), _arr(inst.demand, K)
    eta = inst.storage_eff
    rows = _Rows(nx, ny, 2 * K)
    for t in range(K):
        rows.add(inst.gen_max, y=[(GEN + t, 1.0)])
        rows.add(inst.storage_power, y=[(CH + t, 1.0)])
        rows.add(inst.storage_power, y=[(DIS + t, 1.0)])
        rows.add(wind[t], y=[(SP + t, 1.0)])
        # storage level after period t stays in [0, storage_energy]
        lvl = [(CH + s, eta) for s in range(t + 1)] + [(DIS + s, -1.0 / eta) for s in range(t + 1)]
        rows.add(inst.storage_energy - inst.storage_init, y=lvl)
        rows.add(inst.storage_init, y=[(i, -v) for i, v in lvl])
        # gen + wind - spill + dis - ch - demand = P_E + P_R+ - P_R-
        rows.equal(dem[t] - wind[t], x=[(E + t, -1.0)],
                   y=[(GEN + t, 1.0), (SP + t, -1.0), (DIS + t, 1.0), (CH + t, -1.0)],
                   u=[(t, -1.0), (K + t, 1.0)])
    A, B, C, b = rows.arrays()
    c = np.concatenate([np.full(K, inst.gen_cost), np.full(2 * K, inst.storage_cost), np.zeros(K)])
    return TsroProblem(X=Xp, f=f, A=A, B=B, C=C, b=b, c=c, uncertainty=vpp_ddus(inst), name="vpp")


def vpp_fixture() -> VppInstance:
    return VppInstance.from_dict(_fixture("vpp_3period.json"))
