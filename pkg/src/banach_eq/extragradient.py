"""Extragradient solver.

One outer iteration runs two proximal evaluations (the second re-linearized
at the first's output), averages in dual coordinates with the mapping S,

    t_n = J^{-1}( a_n J x_n + (1 - a_n)( b_n J z_n + (1 - b_n) J S z_n ) ),

then cuts the space with two halfspaces that provably contain every common
solution and retracts the starting point onto the intersection.  The step
sizes lam_n must stay below min{1/(2 c1), 1/(2 c2)} for the declared
phi-Lipschitz constants of the bifunction; without declared constants this
solver refuses to start (use the linesearch solver instead).

A single run is strictly sequential; distinct runs are independent and can
execute in parallel.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, InfeasibleCut, InfeasibleSet
from .geometry import Geometry
from .problems import Problem, validate_problem
from .prox import ProxRequest, prox
from .schedules import Schedule, constant, harmonic
from .sets import Intersection, anchor_cut, contains, phi_cut, sunny_retract, violation
from .trace import IterateRecord, Status, Trace
from .util import default_rng, quantize_toward_zero

SLACK_FLOOR = -1e-7
CUT_MEMBERSHIP_TOL = 1e-8


@dataclass(frozen=True)
class ExtragradientConfig:
    """Schedules and stopping controls; defaults mirror the worked example."""

    alpha: Schedule = field(default_factory=lambda: harmonic(0.5, 3.0))
    beta: Schedule = field(default_factory=lambda: harmonic(1.0 / 3.0, 4.0))
    lam: Schedule = field(default_factory=lambda: constant(1.0 / 6.0))
    max_outer: int = 200
    stop_tol: float = 1e-9
    quantize: Optional[float] = None


@dataclass(frozen=True)
class EgState:
    n: int
    x: np.ndarray
    x0: np.ndarray


def validate_config(cfg: ExtragradientConfig, problem: Problem) -> None:
    if cfg.max_outer < 1:
        raise ConfigError("max_outer must be >= 1")
    if cfg.stop_tol <= 0.0:
        raise ConfigError("stop_tol must be positive")
    lipschitz = problem.bifunction.lipschitz
    if lipschitz is None:
        raise ConfigError(
            "the extragradient step size needs declared constants (c1, c2); "
            "without them use the linesearch solver"
        )
    c1, c2 = lipschitz
    bound = min(1.0 / (2.0 * c1), 1.0 / (2.0 * c2))
    for n in range(cfg.max_outer + 1):
        a, b, lam = cfg.alpha(n), cfg.beta(n), cfg.lam(n)
        if not (0.0 < a < 1.0 and 0.0 < b < 1.0):
            raise ConfigError(f"schedules must stay strictly inside (0, 1); n={n}")
        if not (0.0 < lam <= 1.0):
            raise ConfigError(f"lam must lie in (0, 1]; got {lam} at n={n}")
        if lam >= bound:
            raise ConfigError(
                f"lam = {lam} at n={n} violates the step bound "
                f"min(1/(2 c1), 1/(2 c2)) = {bound}"
            )


def _cut_and_retract(problem: Problem, x0, x, t, rng, quantize):
    """Build both cuts, retract the anchor x0, and report violations."""
    g = problem.geometry
    cn = phi_cut(g, x, t)
    dn = anchor_cut(g, x0, x)
    target = Intersection((problem.feasible_set, cn, dn))
    try:
        report = sunny_retract(g, target, x0, rng=rng)
    except InfeasibleSet as exc:
        raise InfeasibleCut(
            "the cut intersection is empty; every common solution belongs to "
            "it, so this flags an implementation or tolerance problem"
        ) from exc
    x_next = report.point
    if quantize is not None:
        x_next = quantize_toward_zero(x_next, quantize)
    return target, report, x_next


def eg_iterate(
    problem: Problem,
    cfg: ExtragradientConfig,
    state: EgState,
    reference=None,
    rng: np.random.Generator | None = None,
) -> IterateRecord:
    g = problem.geometry
    f = problem.bifunction
    feasible = problem.feasible_set
    n, x, x0 = state.n, np.asarray(state.x, float), np.asarray(state.x0, float)
    lam, alpha, beta = cfg.lam(n), cfg.alpha(n), cfg.beta(n)

    first = prox(ProxRequest(x=x, lam=lam, f=f, feasible_set=feasible,
                             geometry=g, rng=rng))
    y = first.y
    second = prox(ProxRequest(x=x, lam=lam, f=f.freeze_first(y),
                              feasible_set=feasible, geometry=g, rng=rng))
    z = second.y
    sz = np.asarray(problem.mapping.apply(z), dtype=float)
    t = g.dual_convex_combination([
        (alpha, x),
        ((1.0 - alpha) * beta, z),
        ((1.0 - alpha) * (1.0 - beta), sz),
    ])

    y_eq = float(g.norm(y - x)) <= cfg.stop_tol
    t_eq = float(g.norm(t - x)) <= cfg.stop_tol

    phi_x0_xn = float(g.phi(x0, x))
    phi_star = lem1 = lem3 = cut_star = None
    if reference is not None:
        xs = np.asarray(reference, dtype=float)
        c1, c2 = f.lipschitz
        phi_star = float(g.phi(xs, x))
        lem1 = (phi_star
                - (1.0 - 2.0 * lam * c1) * float(g.phi(y, x))
                - (1.0 - 2.0 * lam * c2) * float(g.phi(z, y))
                - float(g.phi(xs, z)))
        lem3 = phi_star - float(g.phi(xs, t))

    record = IterateRecord(
        n=n, x=x, y=y, z=z, t=t,
        alpha=float(alpha), beta=float(beta), lam=float(lam),
        phi_x0_xn=phi_x0_xn, phi_star_xn=phi_star,
        lem1_slack=lem1, lem3_slack=lem3,
        retract_residual=None, retract_iters=None,
        prox_path=_join_paths(first.path, second.path),
        prox_iters=first.iterations + second.iterations,
        prox_residual=max(first.vi_residual, second.vi_residual),
        y_eq_x=y_eq, t_eq_x=t_eq,
    )
    if y_eq and t_eq:
        return record

    target, report, x_next = _cut_and_retract(
        problem, x0, x, t, rng, cfg.quantize)
    record.retract_residual = report.variational_residual
    record.retract_iters = report.iterations
    record.x_next = x_next
    record.cut_violation_xnext = violation(target, g, x_next)
    if reference is not None:
        record.cut_violation_xstar = violation(target, g, np.asarray(reference, float))
    return record


def _join_paths(a: str, b: str) -> str:
    return a if a == b else "mixed"


def eg_solve(
    problem: Problem,
    cfg: ExtragradientConfig | None = None,
    x0=None,
    reference=None,
    rng: np.random.Generator | None = None,
) -> tuple[Trace, Status]:
    """Run the solver from x0 in the feasible set.

    Stops when both equality tests of the stopping rule fire (the iterate is
    a common solution up to stop_tol), when consecutive iterates coincide up
    to stop_tol, or at max_outer.
    """
    cfg = cfg or ExtragradientConfig()
    rng = default_rng(rng)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    validate_problem(problem, rng=rng)
    validate_config(cfg, problem)
    if not contains(problem.feasible_set, problem.geometry, x0, tol=1e-9):
        raise ConfigError("x0 lies outside the feasible set")
    if reference is not None:
        reference = np.atleast_1d(np.asarray(reference, dtype=float))
        if not contains(problem.feasible_set, problem.geometry, reference, tol=1e-9):
            raise ConfigError("the reference solution lies outside the feasible set")

    trace = Trace(algorithm="extragradient", reference=reference, x0=x0)
    x = x0
    status = Status.MAX_ITER
    final = x0
    for n in range(cfg.max_outer):
        record = eg_iterate(problem, cfg, EgState(n=n, x=x, x0=x0),
                            reference=reference, rng=rng)
        trace.records.append(record)
        if record.y_eq_x and record.t_eq_x:
            status = Status.STOPPED_AT_SOLUTION
            final = record.x
            break
        if float(problem.geometry.norm(record.x_next - x)) <= cfg.stop_tol:
            status = Status.CONVERGED
            final = record.x_next
            break
        x = record.x_next
        final = x
    trace.final_x = np.asarray(final, dtype=float)
    trace.status = status
    return trace, status
