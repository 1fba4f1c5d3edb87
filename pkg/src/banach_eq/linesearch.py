"""Armijo-linesearch solver.

Replaces the extragradient's second proximal step with a backtracking search
along the segment from x_n to y_n,

    z_{n,m} = (1 - gamma^m) x_n + gamma^m y_n,
    accept the smallest m with  f(z_{n,m}, x_n) - f(z_{n,m}, y_n)
                                  >= alpha / (2 lam_n) * phi(y_n, x_n),

followed by a subgradient step retracted onto the feasible set.  No
phi-Lipschitz constants are needed, but the geometry must be 2-uniformly
convex: the step scale nu must satisfy 0 < nu < c^2 / 2 for the geometry's
convexity constant c.

Two variants of the subgradient step scale are implemented, differing in the
power of ||g_n|| in the denominator:

  * ``squared_norm``: sigma = nu f(z, x) / ||g||^2.  The descent estimate
    phi(x*, w) <= phi(x*, x) - (2/nu - 4/c^2) sigma^2 ||g||^2 holds for this
    variant and is monitored when a reference solution is configured.
  * ``example_norm``: sigma = nu f(z, x) / ||g||, the form the bundled
    1-D reference tables were generated with.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .errors import ConfigError, LinesearchExhausted, ZeroSubgradient
from .geometry import Geometry
from .problems import Bifunction, Problem, validate_problem
from .prox import ProxRequest, prox
from .schedules import Schedule, constant, harmonic
from .sets import ConvexSet, contains, retract_point, violation
from .trace import LinesearchRecord, Status, Trace
from .util import default_rng

from .extragradient import _cut_and_retract

SIGMA_VARIANTS = ("squared_norm", "example_norm")
ZERO_SUBGRADIENT_TOL = 1e-14


@dataclass(frozen=True)
class LinesearchConfig:
    armijo_alpha: float = 0.5
    gamma: float = 0.2
    nu: float = 0.25
    lam: Schedule = field(default_factory=lambda: constant(0.5))
    alpha: Schedule = field(default_factory=lambda: harmonic(0.5, 3.0))
    beta: Schedule = field(default_factory=lambda: harmonic(1.0 / 3.0, 4.0))
    m_max: int = 60
    sigma_variant: str = "squared_norm"
    max_outer: int = 200
    stop_tol: float = 1e-9
    quantize: Optional[float] = None


def validate_config(cfg: LinesearchConfig, problem: Problem) -> None:
    g = problem.geometry
    if not (0.0 < cfg.armijo_alpha < 1.0):
        raise ConfigError(f"armijo_alpha must lie in (0, 1), got {cfg.armijo_alpha}")
    if not (0.0 < cfg.gamma < 1.0):
        raise ConfigError(f"gamma must lie in (0, 1), got {cfg.gamma}")
    if cfg.sigma_variant not in SIGMA_VARIANTS:
        raise ConfigError(f"sigma_variant must be one of {SIGMA_VARIANTS}")
    if cfg.m_max < 1:
        raise ConfigError("m_max must be >= 1")
    if cfg.max_outer < 1:
        raise ConfigError("max_outer must be >= 1")
    if cfg.stop_tol <= 0.0:
        raise ConfigError("stop_tol must be positive")
    if g.c is None:
        raise ConfigError(
            "the linesearch solver needs a 2-uniformly convex geometry with a "
            "declared convexity constant; lp spaces with p > 2 do not qualify"
        )
    if not (0.0 < cfg.nu < g.c ** 2 / 2.0):
        raise ConfigError(
            f"nu must lie in (0, c^2/2) = (0, {g.c ** 2 / 2.0}); got {cfg.nu}"
        )
    for n in range(cfg.max_outer + 1):
        a, b, lam = cfg.alpha(n), cfg.beta(n), cfg.lam(n)
        if not (0.0 < a < 1.0 and 0.0 < b < 1.0):
            raise ConfigError(f"schedules must stay strictly inside (0, 1); n={n}")
        if not (0.0 < lam <= 1.0):
            raise ConfigError(f"lam must lie in (0, 1]; got {lam} at n={n}")


def armijo_search(
    f: Bifunction,
    g: Geometry,
    x,
    y,
    lam: float,
    alpha: float,
    gamma: float,
    m_max: int,
) -> Tuple[int, np.ndarray]:
    """Smallest m with the sufficient-decrease inequality, and z_{n,m}.

    The caller handles y = x (the searched segment would be degenerate).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    target = alpha / (2.0 * lam) * float(g.phi(y, x))
    for m in range(m_max + 1):
        step = gamma ** m
        z = (1.0 - step) * x + step * y
        if f.value(z, x) - f.value(z, y) >= target:
            return m, z
    raise LinesearchExhausted(
        f"no exponent m <= {m_max} satisfies the sufficient-decrease "
        "inequality; a finite one must exist, so check the oracles"
    )


def gradient_step(
    f: Bifunction,
    g: Geometry,
    s: ConvexSet,
    x,
    z,
    nu: float,
    variant: str,
    y_equals_x: bool = False,
) -> Tuple[np.ndarray, float, np.ndarray]:
    """Subgradient step w = R(J^{-1}(Jx - sigma g)) with g in d2 f(z, x).

    With y = x the step degenerates: sigma = 0 and w is the retraction of x,
    which is x itself inside the set.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    gsub = np.asarray(f.subgrad2(z, x), dtype=float)
    if y_equals_x:
        w, _ = retract_point(g, s, x)
        return gsub, 0.0, w
    gnorm = float(g.dual_norm(gsub))
    if gnorm <= ZERO_SUBGRADIENT_TOL:
        raise ZeroSubgradient(
            "zero subgradient at the linesearch point while y != x"
        )
    fzx = f.value(z, x)
    if variant == "squared_norm":
        sigma = nu * fzx / gnorm ** 2
    elif variant == "example_norm":
        sigma = nu * fzx / gnorm
    else:
        raise ConfigError(f"unknown sigma variant {variant!r}")
    w, _ = retract_point(g, s, g.inverse_duality_map(g.duality_map(x) - sigma * gsub))
    return gsub, float(sigma), w


def ls_iterate(
    problem: Problem,
    cfg: LinesearchConfig,
    n: int,
    x,
    x0,
    reference=None,
    rng: np.random.Generator | None = None,
) -> LinesearchRecord:
    g = problem.geometry
    f = problem.bifunction
    feasible = problem.feasible_set
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    lam, alpha, beta = cfg.lam(n), cfg.alpha(n), cfg.beta(n)

    pr = prox(ProxRequest(x=x, lam=lam, f=f, feasible_set=feasible,
                          geometry=g, rng=rng))
    y = pr.y
    y_eq = float(g.norm(y - x)) <= cfg.stop_tol

    if y_eq:
        z = np.array(x, copy=True)
        m = rho = None
        fzx = f.value(z, x)
        gsub, sigma, w = gradient_step(f, g, feasible, x, z, cfg.nu,
                                       cfg.sigma_variant, y_equals_x=True)
    else:
        m, z = armijo_search(f, g, x, y, lam, cfg.armijo_alpha, cfg.gamma, cfg.m_max)
        rho = cfg.gamma ** m
        fzx = f.value(z, x)
        gsub, sigma, w = gradient_step(f, g, feasible, x, z, cfg.nu,
                                       cfg.sigma_variant)
    sw = np.asarray(problem.mapping.apply(w), dtype=float)
    t = g.dual_convex_combination([
        (alpha, x),
        ((1.0 - alpha) * beta, w),
        ((1.0 - alpha) * (1.0 - beta), sw),
    ])
    t_eq = float(g.norm(t - x)) <= cfg.stop_tol

    phi_x0_xn = float(g.phi(x0, x))
    phi_star = lem3 = prop_i = prop_ii = None
    if reference is not None:
        xs = np.asarray(reference, dtype=float)
        phi_star = float(g.phi(xs, x))
        lem3 = phi_star - float(g.phi(xs, t))
        if cfg.sigma_variant == "squared_norm":
            gnorm2 = float(g.dual_norm(gsub)) ** 2
            coef = (2.0 / cfg.nu - 4.0 / g.c ** 2) * sigma ** 2 * gnorm2
            prop_i = phi_star - coef - float(g.phi(xs, w))
            prop_ii = phi_star - (1.0 - alpha) * coef - float(g.phi(xs, t))

    record = LinesearchRecord(
        n=n, x=x, y=y, z=z, t=t,
        alpha=float(alpha), beta=float(beta), lam=float(lam),
        phi_x0_xn=phi_x0_xn, phi_star_xn=phi_star,
        lem1_slack=None, lem3_slack=lem3,
        retract_residual=None, retract_iters=None,
        prox_path=pr.path, prox_iters=pr.iterations, prox_residual=pr.vi_residual,
        y_eq_x=y_eq, t_eq_x=t_eq,
        w=w, gsub=gsub, sigma=sigma, m=m, rho=rho, f_zx=float(fzx),
        prop41_slack=prop_i, prop41_t_slack=prop_ii,
        sigma_variant=cfg.sigma_variant,
    )
    if y_eq and t_eq:
        return record

    target, report, x_next = _cut_and_retract(problem, x0, x, t, rng, cfg.quantize)
    record.retract_residual = report.variational_residual
    record.retract_iters = report.iterations
    record.x_next = x_next
    record.cut_violation_xnext = violation(target, g, x_next)
    if reference is not None:
        record.cut_violation_xstar = violation(target, g, np.asarray(reference, float))
    return record


def ls_solve(
    problem: Problem,
    cfg: LinesearchConfig | None = None,
    x0=None,
    reference=None,
    rng: np.random.Generator | None = None,
) -> tuple[Trace, Status]:
    cfg = cfg or LinesearchConfig()
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

    trace = Trace(algorithm="linesearch", reference=reference, x0=x0)
    x = x0
    status = Status.MAX_ITER
    final = x0
    for n in range(cfg.max_outer):
        record = ls_iterate(problem, cfg, n, x, x0, reference=reference, rng=rng)
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
