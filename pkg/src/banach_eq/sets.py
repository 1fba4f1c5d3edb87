"""Convex feasible sets, membership tests, and the phi-minimizing retraction.

The retraction R onto a set S sends x to the minimizer of phi(., x) over S.
Wherever the image J(S) is closed and convex this coincides with the sunny
generalized nonexpansive retraction, whose variational characterization
<x - Rx, Jy - J(Rx)> <= 0 for all y in S is reported a posteriori as a
sampled residual so callers can detect when the characterization fails.

Euclidean path: closed forms (box clamp, halfspace projection) and Dykstra's
alternating projections for intersections.  Non-Euclidean path: an SLSQP
minimization of phi(., x); sets built only from dual-linear halfspaces are
solved in dual coordinates u = Jz, where both the constraints and the
objective ||u||_q^2 - 2 <x, u> + ||x||^2 are smooth and convex.

All set values are immutable and every operation is pure, so concurrent use
is safe.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple, Union

import numpy as np
from scipy import optimize as sciopt

from .errors import ConfigError, DimensionMismatch, InfeasibleSet, NoConvergence
from .geometry import Geometry, pair
from .util import default_rng

DYKSTRA_TOL = 1e-12
DYKSTRA_CAP = 10_000
FEASIBILITY_TOL = 1e-8
LP_SOLVER_CAP = 300


def _vec(v) -> np.ndarray:
    return np.atleast_1d(np.asarray(v, dtype=float))


@dataclass(frozen=True)
class Box:
    """{z : lo <= z <= hi} componentwise."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _vec(self.lo)
        hi = _vec(self.hi)
        if lo.shape != hi.shape:
            raise DimensionMismatch(f"box bounds differ in shape: {lo.shape} vs {hi.shape}")
        if np.any(lo > hi):
            raise ConfigError("box requires lo <= hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]


@dataclass(frozen=True)
class PrimalHalfspace:
    """{z : <z, a> <= b} with a in dual coordinates."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", _vec(self.a))
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True)
class DualLinearHalfspace:
    """{z : <d, Jz> <= r}, linear in the dual coordinates u = Jz."""

    d: np.ndarray
    r: float

    def __post_init__(self):
        object.__setattr__(self, "d", _vec(self.d))
        object.__setattr__(self, "r", float(self.r))

    @property
    def dim(self) -> int:
        return self.d.shape[0]


@dataclass(frozen=True)
class Intersection:
    members: tuple

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        dims = {m.dim for m in flatten(self)}
        if len(dims) > 1:
            raise DimensionMismatch(f"intersection members disagree on dimension: {dims}")


ConvexSet = Union[Box, PrimalHalfspace, DualLinearHalfspace, Intersection]


def set_from_config(cfg: dict) -> ConvexSet:
    kind = cfg.get("kind")
    if kind == "box":
        return Box(lo=cfg["lo"], hi=cfg["hi"])
    raise ConfigError(f"unknown set kind {kind!r}")


def flatten(s: ConvexSet) -> list:
    if isinstance(s, Intersection):
        out = []
        for m in s.members:
            out.extend(flatten(m))
        return out
    return [s]


def set_dim(s: ConvexSet) -> int:
    return flatten(s)[0].dim


# ------------------------------------------------------------------ membership


def _member_gap(member, g: Geometry, x: np.ndarray) -> float:
    """Largest inequality excess of x for one member; <= 0 means inside."""
    if isinstance(member, Box):
        return float(np.max(np.maximum(member.lo - x, x - member.hi)))
    if isinstance(member, PrimalHalfspace):
        return float(pair(x, member.a) - member.b)
    if isinstance(member, DualLinearHalfspace):
        return float(pair(member.d, g.duality_map(x)) - member.r)
    raise TypeError(f"not a convex-set member: {member!r}")


def violation(s: ConvexSet, g: Geometry, x) -> float:
    """Worst inequality excess over all members, clipped below at 0."""
    x = np.asarray(x, dtype=float)
    return max(0.0, max(_member_gap(m, g, x) for m in flatten(s)))


def contains(s: ConvexSet, g: Geometry, x, tol: float = 1e-9) -> bool:
    x = np.asarray(x, dtype=float)
    return all(_member_gap(m, g, x) <= tol for m in flatten(s))


# ------------------------------------------------------------------------ cuts


def phi_cut(g: Geometry, x, t) -> PrimalHalfspace:
    """Halfspace form of {z : phi(z, t) <= phi(z, x)}.

    The ||z||^2 terms cancel, leaving 2 <z, Jx - Jt> <= ||x||^2 - ||t||^2,
    which is algebraically exact.
    """
    jx = g.duality_map(x)
    jt = g.duality_map(t)
    b = float(g.norm(x) ** 2 - g.norm(t) ** 2)
    return PrimalHalfspace(a=2.0 * (jx - jt), b=b)


def anchor_cut(g: Geometry, x0, x) -> DualLinearHalfspace:
    """Halfspace form of {z : <Jx - Jz, x0 - x> >= 0}, linear in Jz."""
    d = np.asarray(x0, dtype=float) - np.asarray(x, dtype=float)
    r = float(pair(d, g.duality_map(x)))
    return DualLinearHalfspace(d=d, r=r)


# ------------------------------------------------------------------- sampling


def bounding_box(s: ConvexSet) -> Box | None:
    lo = hi = None
    for m in flatten(s):
        if isinstance(m, Box):
            lo = m.lo if lo is None else np.maximum(lo, m.lo)
            hi = m.hi if hi is None else np.minimum(hi, m.hi)
    if lo is None:
        return None
    if np.any(lo > hi):
        raise InfeasibleSet("box members of the intersection are disjoint")
    return Box(lo=lo, hi=hi)


def extreme_points(s: ConvexSet, g: Geometry, cap: int = 32) -> np.ndarray:
    """Feasible corners of the boxed envelope (empty array if none)."""
    env = bounding_box(s)
    if env is None:
        return np.empty((0, set_dim(s)))
    dim = env.dim
    if 2 ** dim > cap:
        return np.empty((0, dim))
    corners = np.array(
        [[(env.lo[i] if (k >> i) & 1 == 0 else env.hi[i]) for i in range(dim)]
         for k in range(2 ** dim)]
    )
    keep = [c for c in corners if contains(s, g, c, tol=1e-9)]
    return np.array(keep) if keep else np.empty((0, dim))


def sample_feasible(
    s: ConvexSet,
    g: Geometry,
    count: int,
    rng: np.random.Generator | None = None,
    anchor=None,
) -> np.ndarray:
    """Draw up to ``count`` points of the set (at least one is guaranteed)."""
    rng = default_rng(rng)
    env = bounding_box(s)
    if env is None:
        base = np.zeros(set_dim(s)) if anchor is None else np.asarray(anchor, dtype=float)
        span = 1.0 + float(np.max(np.abs(base)))
        env = Box(lo=base - span, hi=base + span)
    members = flatten(s)
    boxes_only = all(isinstance(m, Box) for m in members)
    out: list[np.ndarray] = []
    for _ in range(30):
        draw = rng.uniform(env.lo, env.hi, size=(count, env.dim))
        if boxes_only:
            out.extend(draw)
        else:
            out.extend(z for z in draw if contains(s, g, z, tol=1e-9))
        if len(out) >= count:
            break
    if len(out) < count:
        # rejection starved: fall back to retracting the raw draws into the set
        for z in rng.uniform(env.lo, env.hi, size=(count, env.dim)):
            try:
                point, _ = retract_point(g, s, z)
            except (InfeasibleSet, NoConvergence):
                break
            out.append(point)
            if len(out) >= count:
                break
    if not out:
        base = env.lo + 0.5 * (env.hi - env.lo)
        point, _ = retract_point(g, s, base)
        out = [point]
    return np.array(out[:count])


# -------------------------------------------------------- Euclidean projection


def _euclid_project(member, x: np.ndarray) -> np.ndarray:
    if isinstance(member, Box):
        return np.clip(x, member.lo, member.hi)
    if isinstance(member, PrimalHalfspace):
        a, b = member.a, member.b
    elif isinstance(member, DualLinearHalfspace):
        a, b = member.d, member.r  # J is the identity here
    else:
        raise TypeError(f"not a convex-set member: {member!r}")
    nrm2 = float(a @ a)
    gap = float(x @ a) - b
    if nrm2 == 0.0:
        if b < 0.0:
            raise InfeasibleSet("halfspace with zero normal and negative offset is empty")
        return np.array(x, copy=True)
    if gap <= 0.0:
        return np.array(x, copy=True)
    return x - (gap / nrm2) * a


def _dykstra(members, x: np.ndarray, tol: float, cap: int) -> Tuple[np.ndarray, int]:
    y = np.array(x, dtype=float, copy=True)
    increments = [np.zeros_like(y) for _ in members]
    for sweep in range(1, cap + 1):
        previous = y.copy()
        for i, member in enumerate(members):
            w = y + increments[i]
            projected = _euclid_project(member, w)
            increments[i] = w - projected
            y = projected
        shift = float(np.max(np.abs(y - previous)))
        worst = max(_linear_gap_box(m, y) for m in members)
        if shift <= tol and worst <= FEASIBILITY_TOL:
            return y, sweep
    if _linear_members_feasible(members, y.size) is False:
        raise InfeasibleSet("Dykstra stalled and the LP feasibility check certifies emptiness")
    if max(_linear_gap_box(m, y) for m in members) <= FEASIBILITY_TOL:
        return y, cap
    raise NoConvergence(f"Dykstra hit the {cap}-sweep cap away from feasibility")


def _linear_gap_box(member, x: np.ndarray) -> float:
    """Inequality excess in the Euclidean case, where J is the identity."""
    if isinstance(member, Box):
        return float(np.max(np.maximum(member.lo - x, x - member.hi)))
    if isinstance(member, PrimalHalfspace):
        return float(x @ member.a - member.b)
    if isinstance(member, DualLinearHalfspace):
        return float(x @ member.d - member.r)
    raise TypeError(member)


def _linear_members_feasible(members, dim: int) -> bool | None:
    """LP feasibility certificate for boxes + halfspaces (Euclidean case)."""
    a_rows, b_vals = [], []
    lo = np.full(dim, -np.inf)
    hi = np.full(dim, np.inf)
    for m in members:
        if isinstance(m, Box):
            lo = np.maximum(lo, m.lo)
            hi = np.minimum(hi, m.hi)
        elif isinstance(m, PrimalHalfspace):
            a_rows.append(m.a)
            b_vals.append(m.b)
        elif isinstance(m, DualLinearHalfspace):
            a_rows.append(m.d)
            b_vals.append(m.r)
        else:
            return None
    bounds = [(None if not np.isfinite(l) else l, None if not np.isfinite(h) else h)
              for l, h in zip(lo, hi)]
    res = sciopt.linprog(
        c=np.zeros(dim),
        A_ub=np.array(a_rows) if a_rows else None,
        b_ub=np.array(b_vals) if b_vals else None,
        bounds=bounds,
        method="highs",
    )
    if res.status == 2:
        return False
    return True


# ------------------------------------------------------------- lp minimization


def _lp_box_bounds(members, dim: int):
    lo = np.full(dim, -np.inf)
    hi = np.full(dim, np.inf)
    for m in members:
        if isinstance(m, Box):
            lo = np.maximum(lo, m.lo)
            hi = np.minimum(hi, m.hi)
    return lo, hi


def _slsqp_primal(g: Geometry, members, x: np.ndarray) -> Tuple[np.ndarray, int]:
    dim = x.shape[0]
    lo, hi = _lp_box_bounds(members, dim)
    jx = g.duality_map(x)

    def objective(z):
        return float(g.phi(z, x))

    def objective_grad(z):
        return 2.0 * (g.duality_map(z) - jx)

    constraints = []
    for m in members:
        if isinstance(m, PrimalHalfspace):
            constraints.append(
                {"type": "ineq", "fun": (lambda z, mm=m: mm.b - float(z @ mm.a)),
                 "jac": (lambda z, mm=m: -mm.a)}
            )
        elif isinstance(m, DualLinearHalfspace):
            constraints.append(
                {"type": "ineq",
                 "fun": (lambda z, mm=m: mm.r - float(pair(mm.d, g.duality_map(z))))}
            )
    bounds = [(None if not np.isfinite(l) else l, None if not np.isfinite(h) else h)
              for l, h in zip(lo, hi)]
    center = np.where(
        np.isfinite(lo) & np.isfinite(hi), 0.5 * (lo + hi),
        np.where(np.isfinite(lo), lo + 1.0, np.where(np.isfinite(hi), hi - 1.0, 0.0)),
    )
    starts = [np.clip(x, lo, hi), center]
    best = None
    best_val = np.inf
    iterations = 0
    target = Intersection(tuple(members))
    for start in starts:
        res = sciopt.minimize(
            objective, start, jac=objective_grad, method="SLSQP",
            bounds=bounds, constraints=constraints,
            options={"maxiter": LP_SOLVER_CAP, "ftol": 1e-14},
        )
        iterations += int(res.get("nit", 0))
        cand = np.asarray(res.x, dtype=float)
        if violation(target, g, cand) <= FEASIBILITY_TOL:
            val = objective(cand)
            if val < best_val:
                best, best_val = cand, val
    if best is None:
        _certify_feasible(g, members, np.clip(x, lo, hi))
        raise NoConvergence("SLSQP found no feasible minimizer for the retraction")
    return best, iterations


def _slsqp_dual(g: Geometry, members, x: np.ndarray) -> Tuple[np.ndarray, int]:
    """All members linear in u = Jz: minimize the dual objective
    ||u||_q^2 - 2 <x, u> + ||x||^2 over a polyhedron."""
    nx2 = float(g.norm(x) ** 2)

    def objective(u):
        return float(g.dual_norm(u) ** 2 - 2.0 * pair(x, u) + nx2)

    def objective_grad(u):
        return 2.0 * (g.inverse_duality_map(u) - x)

    constraints = [
        {"type": "ineq", "fun": (lambda u, mm=m: mm.r - float(u @ mm.d)),
         "jac": (lambda u, mm=m: -mm.d)}
        for m in members
    ]
    start = g.duality_map(x)
    res = sciopt.minimize(
        objective, start, jac=objective_grad, method="SLSQP",
        constraints=constraints, options={"maxiter": LP_SOLVER_CAP, "ftol": 1e-14},
    )
    u = np.asarray(res.x, dtype=float)
    z = g.inverse_duality_map(u)
    target = Intersection(tuple(members))
    if violation(target, g, z) > FEASIBILITY_TOL:
        _certify_feasible(g, members, z)
        raise NoConvergence("dual-coordinate retraction ended infeasible")
    return z, int(res.get("nit", 0))


def _certify_feasible(g: Geometry, members, start: np.ndarray) -> None:
    """Raise InfeasibleSet when a dedicated feasibility solve finds nothing."""
    target = Intersection(tuple(members))

    def infeas(z):
        return sum(max(0.0, _member_gap(m, g, z)) ** 2 for m in members)

    res = sciopt.minimize(infeas, start, method="Nelder-Mead",
                          options={"maxiter": 2000, "fatol": 1e-18, "xatol": 1e-12})
    if violation(target, g, np.asarray(res.x, dtype=float)) > 1e-6:
        raise InfeasibleSet(
            "no feasible point found; the intersection appears to be empty"
        )


# ------------------------------------------------------------------ retraction


@dataclass
class RetractionReport:
    """Result of a phi-minimizing retraction.

    ``variational_residual`` is the largest sampled value of
    <x - Rx, Jy - J(Rx)> over probe directions y in the set; values above the
    tolerance flag that the sunny characterization fails for this set.
    """

    point: np.ndarray
    phi_value: float
    variational_residual: float
    iterations: int


def retract_point(
    g: Geometry,
    s: ConvexSet,
    x,
    tol: float = DYKSTRA_TOL,
    cap: int = DYKSTRA_CAP,
) -> Tuple[np.ndarray, int]:
    """Minimize phi(., x) over the set; returns (point, iterations)."""
    x = np.asarray(x, dtype=float)
    if contains(s, g, x, tol=1e-12):
        return np.array(x, copy=True), 0
    members = flatten(s)
    if g.is_euclidean:
        if len(members) == 1:
            return _euclid_project(members[0], x), 1
        return _dykstra(members, x, tol=tol, cap=cap)
    if all(isinstance(m, DualLinearHalfspace) for m in members):
        return _slsqp_dual(g, members, x)
    return _slsqp_primal(g, members, x)


def sunny_retract(
    g: Geometry,
    s: ConvexSet,
    x,
    rng: np.random.Generator | None = None,
    probe_count: int = 32,
) -> RetractionReport:
    """Retraction with an a-posteriori variational residual over probes."""
    x = np.asarray(x, dtype=float)
    point, iterations = retract_point(g, s, x)
    rng = default_rng(rng)
    probes = [extreme_points(s, g)]
    probes.append(sample_feasible(s, g, probe_count, rng=rng, anchor=point))
    probes.append(point[None, :])
    ys = np.concatenate([p for p in probes if p.size], axis=0)
    residual = float(np.max(pair(x - point, g.duality_map(ys) - g.duality_map(point))))
    return RetractionReport(
        point=point,
        phi_value=float(g.phi(point, x)),
        variational_residual=residual,
        iterations=iterations,
    )


def as_interval(s: ConvexSet, g: Geometry) -> Tuple[float, float]:
    """Collapse a 1-D set to [lo, hi].  In one dimension every geometry has
    J equal to the identity, so all member types are intervals."""
    if set_dim(s) != 1:
        raise DimensionMismatch("as_interval only applies to 1-D sets")
    lo, hi = -np.inf, np.inf
    for m in flatten(s):
        if isinstance(m, Box):
            lo, hi = max(lo, float(m.lo[0])), min(hi, float(m.hi[0]))
            continue
        if isinstance(m, PrimalHalfspace):
            coef, bound = float(m.a[0]), m.b
        else:
            coef, bound = float(m.d[0]), m.r
        if coef > 0.0:
            hi = min(hi, bound / coef)
        elif coef < 0.0:
            lo = max(lo, bound / coef)
        elif bound < 0.0:
            raise InfeasibleSet("degenerate halfspace 0 <= b with b < 0")
    if lo > hi:
        raise InfeasibleSet(f"empty interval [{lo}, {hi}]")
    return lo, hi
