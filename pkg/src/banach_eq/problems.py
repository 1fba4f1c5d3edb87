"""Problem data: equilibrium bifunctions with subgradient oracles and the
relatively nonexpansive mappings they are paired with.

A bifunction f must vanish on the diagonal (f(x, x) = 0) and be convex and
subdifferentiable in its second argument.  Oracles are pure: the solvers may
call them repeatedly and concurrently with identical results.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import ConfigError, MissingConstants
from .geometry import Geometry, pair
from .sets import Box, ConvexSet, as_interval, bounding_box, sample_feasible, set_dim
from .util import default_rng


class Bifunction:
    """Interface for equilibrium bifunctions.

    ``lipschitz`` optionally declares constants (c1, c2) of the phi-Lipschitz
    condition f(x,y) + f(y,z) >= f(x,z) - c1 phi(y,x) - c2 phi(z,y), which
    gate the extragradient step size.  ``subgrad2`` must return some element
    of the partial subdifferential of f(x, .) at y; when f(x, .) is
    differentiable the canonical gradient is returned and recorded.
    """

    lipschitz: Optional[Tuple[float, float]] = None

    def value(self, x, y) -> float:
        raise NotImplementedError

    def subgrad2(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def value_many(self, x, ys: np.ndarray) -> np.ndarray:
        return np.array([self.value(x, y) for y in ys])

    def y_quadratic(self, x) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """(A, ell) with f(x, y) = <y, A y> + <ell, y> + const, if available."""
        return None

    def exact_prox(self, x, lam: float, s: ConvexSet, g: Geometry):
        """Exact minimizer of lam f(x, .) + phi(., x)/2 over s, or None."""
        return self._exact_prox_impl(x, x, lam, s, g)

    def _exact_prox_impl(self, u, x, lam: float, s: ConvexSet, g: Geometry):
        return None

    def freeze_first(self, u) -> "Bifunction":
        return FrozenFirst(self, u)


class FrozenFirst(Bifunction):
    """View of a bifunction with its first argument pinned to ``u``.

    The solvers' second proximal step minimizes over f(y_n, .) while keeping
    the anchor x_n, which this wrapper expresses without a second interface.
    """

    def __init__(self, base: Bifunction, u):
        self.base = base
        self.u = np.asarray(u, dtype=float)
        self.lipschitz = base.lipschitz

    def value(self, x, y) -> float:
        return self.base.value(self.u, y)

    def subgrad2(self, x, y) -> np.ndarray:
        return self.base.subgrad2(self.u, y)

    def value_many(self, x, ys: np.ndarray) -> np.ndarray:
        return self.base.value_many(self.u, ys)

    def y_quadratic(self, x):
        return self.base.y_quadratic(self.u)

    def exact_prox(self, x, lam, s, g):
        return self.base._exact_prox_impl(self.u, x, lam, s, g)


class QuadraticBifunction(Bifunction):
    """f(x, y) = <y, A y> + <x, B y> + <x, C x> with A symmetric PSD.

    The diagonal condition f(x, x) = 0 constrains the symmetric part of
    A + B + C to vanish; construction verifies it on sampled points.
    """

    def __init__(self, A, B, C, lipschitz=None, validate: bool = True,
                 rng: np.random.Generator | None = None):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.B = np.atleast_2d(np.asarray(B, dtype=float))
        self.C = np.atleast_2d(np.asarray(C, dtype=float))
        if not (self.A.shape == self.B.shape == self.C.shape):
            raise ConfigError("A, B, C must share a square shape")
        if self.A.shape[0] != self.A.shape[1]:
            raise ConfigError("coefficient matrices must be square")
        self.lipschitz = tuple(float(v) for v in lipschitz) if lipschitz else None
        if validate:
            self._validate(default_rng(rng))

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def _validate(self, rng: np.random.Generator) -> None:
        sym_a = 0.5 * (self.A + self.A.T)
        scale = 1.0 + float(np.max(np.abs(self.A)))
        if float(np.min(np.linalg.eigvalsh(sym_a))) < -1e-10 * scale:
            raise ConfigError("A must be positive semidefinite (convexity in y)")
        xs = rng.standard_normal((64, self.dim))
        worst = float(np.max(np.abs(self.value_many_diag(xs))))
        if worst > 1e-8 * (1.0 + float(np.max(xs ** 2)) * 3.0 * scale):
            raise ConfigError(
                f"f(x, x) = 0 fails on sampled points (worst {worst:.3e}); "
                "the symmetric part of A + B + C must vanish"
            )

    def value(self, x, y) -> float:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return float(y @ self.A @ y + x @ self.B @ y + x @ self.C @ x)

    def value_many(self, x, ys: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ys = np.asarray(ys, dtype=float)
        quad = np.einsum("ki,ij,kj->k", ys, self.A, ys)
        cross = ys @ (self.B.T @ x)
        return quad + cross + float(x @ self.C @ x)

    def value_many_diag(self, xs: np.ndarray) -> np.ndarray:
        m = self.A + self.B + self.C
        return np.einsum("ki,ij,kj->k", xs, m, xs)

    def subgrad2(self, x, y) -> np.ndarray:
        return 2.0 * (self.A @ np.asarray(y, dtype=float)) + self.B.T @ np.asarray(x, dtype=float)

    def y_quadratic(self, x):
        return self.A, self.B.T @ np.asarray(x, dtype=float)

    def _exact_prox_impl(self, u, x, lam, s, g):
        # one dimension collapses every geometry to the real line, where the
        # box-constrained minimizer is the unconstrained one clamped
        if self.dim != 1 or set_dim(s) != 1:
            return None
        lo, hi = as_interval(s, g)
        a = float(self.A[0, 0])
        ell = float(self.B[0, 0]) * float(np.asarray(u, dtype=float)[0])
        x0 = float(np.asarray(x, dtype=float)[0])
        y = (x0 - lam * ell) / (1.0 + 2.0 * lam * a)
        return np.array([min(max(y, lo), hi)])


class OperatorBifunction(Bifunction):
    """Variational-inequality form f(x, y) = <F(x), y - x>.

    Satisfies f(x, x) = 0 identically; the partial subgradient in y is F(x),
    independent of y.
    """

    def __init__(self, operator: Callable[[np.ndarray], np.ndarray],
                 lipschitz=None):
        self.operator = operator
        self.lipschitz = tuple(float(v) for v in lipschitz) if lipschitz else None

    def value(self, x, y) -> float:
        x = np.asarray(x, dtype=float)
        return float(pair(self.operator(x), np.asarray(y, dtype=float) - x))

    def value_many(self, x, ys: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        fx = np.asarray(self.operator(x), dtype=float)
        return (np.asarray(ys, dtype=float) - x) @ fx

    def subgrad2(self, x, y) -> np.ndarray:
        return np.asarray(self.operator(np.asarray(x, dtype=float)), dtype=float)

    def y_quadratic(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros((x.size, x.size)), np.asarray(self.operator(x), dtype=float)


@dataclass(frozen=True)
class Mapping:
    """A self-mapping of the feasible set with declared fixed points used by
    the relative-nonexpansiveness spot check."""

    apply: Callable[[np.ndarray], np.ndarray]
    fixed_points: tuple = ()
    fixed_point_tol: float = 1e-9


def scaling_mapping(dim: int, scale) -> Mapping:
    scale_vec = np.atleast_1d(np.asarray(scale, dtype=float))
    if scale_vec.size == 1:
        scale_vec = np.full(dim, float(scale_vec[0]))
    if scale_vec.size != dim:
        raise ConfigError("mapping scale must be a scalar or match the dimension")

    def apply(x: np.ndarray) -> np.ndarray:
        return scale_vec * np.asarray(x, dtype=float)

    return Mapping(apply=apply, fixed_points=(np.zeros(dim),))


@dataclass(frozen=True)
class Problem:
    geometry: Geometry
    feasible_set: ConvexSet
    bifunction: Bifunction
    mapping: Mapping
    name: str = ""


# ------------------------------------------------------------- verification


@dataclass
class AssumptionReport:
    """Worst sampled slacks per assumption; negative slack means violation.

    ``a1_max_abs`` is the largest |f(x, x)|.  ``a2_max_reverse`` is the
    largest f(y, x) over sampled pairs with f(x, y) >= 0 (pseudomonotonicity
    wants it <= 0).  ``a4_min_slack`` is the smallest subgradient-inequality
    slack.  ``a5_min_slack`` is the smallest phi-Lipschitz slack under the
    declared constants, or None when not evaluated.
    """

    samples: int
    a1_max_abs: float
    a2_max_reverse: float
    a4_min_slack: float
    a5_min_slack: Optional[float] = None

    def gates_ok(self, tol: float = 1e-8) -> bool:
        return self.a1_max_abs <= tol and self.a4_min_slack >= -tol


def verify_assumptions(
    f: Bifunction,
    s: ConvexSet,
    g: Geometry,
    samples: int = 1000,
    rng: np.random.Generator | None = None,
    include_a5: Optional[bool] = None,
) -> AssumptionReport:
    """Sampled diagnostics for the bifunction assumptions.

    Pseudomonotonicity and joint continuity cannot be certified numerically;
    these are diagnostics, never gates.  The phi-Lipschitz check needs the
    declared (c1, c2): requesting it without them raises MissingConstants.
    """
    if samples < 1:
        raise ConfigError("samples must be >= 1")
    rng = default_rng(rng)
    if include_a5 is None:
        include_a5 = f.lipschitz is not None
    elif include_a5 and f.lipschitz is None:
        raise MissingConstants("the phi-Lipschitz check needs declared (c1, c2)")

    xs = sample_feasible(s, g, samples, rng=rng)
    ys = sample_feasible(s, g, samples, rng=rng)
    zs = sample_feasible(s, g, samples, rng=rng)
    count = min(len(xs), len(ys), len(zs))

    a1 = 0.0
    a2 = -np.inf
    a4 = np.inf
    a5 = np.inf if include_a5 else None
    if include_a5:
        c1, c2 = f.lipschitz
    for i in range(count):
        x, y, z = xs[i], ys[i], zs[i]
        fxy = f.value(x, y)
        a1 = max(a1, abs(f.value(x, x)))
        if fxy >= 0.0:
            a2 = max(a2, f.value(y, x))
        grad = f.subgrad2(x, y)
        a4 = min(a4, f.value(x, z) - fxy - float(pair(grad, z - y)))
        if include_a5:
            slack = fxy + f.value(y, z) - f.value(x, z) \
                + c1 * float(g.phi(y, x)) + c2 * float(g.phi(z, y))
            a5 = min(a5, slack)
    return AssumptionReport(
        samples=count,
        a1_max_abs=float(a1),
        a2_max_reverse=float(a2) if np.isfinite(a2) else 0.0,
        a4_min_slack=float(a4),
        a5_min_slack=float(a5) if include_a5 else None,
    )


def validate_problem(
    problem: Problem,
    rng: np.random.Generator | None = None,
    samples: int = 256,
    tol: float = 1e-8,
) -> None:
    """Gate a problem before a solver accepts it: sampled f(x,x)=0 and
    subgradient-inequality checks, plus the mapping's phi spot check."""
    rng = default_rng(rng)
    report = verify_assumptions(
        problem.bifunction, problem.feasible_set, problem.geometry,
        samples=samples, rng=rng, include_a5=False,
    )
    if not report.gates_ok(tol):
        raise ConfigError(
            "bifunction failed its gates: "
            f"max |f(x,x)| = {report.a1_max_abs:.3e}, "
            f"min subgradient slack = {report.a4_min_slack:.3e}"
        )
    g = problem.geometry
    points = sample_feasible(problem.feasible_set, g, min(samples, 128), rng=rng)
    for p in problem.mapping.fixed_points:
        p = np.asarray(p, dtype=float)
        sx = np.array([problem.mapping.apply(x) for x in points])
        slack = g.phi(p, points) - g.phi(p, sx)
        if float(np.min(slack)) < -tol:
            raise ConfigError(
                "mapping fails the relative-nonexpansiveness spot check at a "
                f"declared fixed point (worst slack {float(np.min(slack)):.3e})"
            )


# ----------------------------------------------------------------- instances


def example_problem() -> Problem:
    """Built-in 1-D instance: f(x, y) = y^2 - 4 x^2 + 3 x y on C = [-100, 100]
    with the scaling map S x = x / 5.

    The bifunction is pseudomonotone but not monotone and satisfies the
    phi-Lipschitz condition with c1 = c2 = 3/2; the common solution set is
    {0}.
    """
    g = Geometry.euclidean(1)
    box = Box(lo=[-100.0], hi=[100.0])
    f = QuadraticBifunction(A=[[1.0]], B=[[3.0]], C=[[-4.0]], lipschitz=(1.5, 1.5))
    return Problem(geometry=g, feasible_set=box, bifunction=f,
                   mapping=scaling_mapping(1, 0.2), name="quadratic1d")


_REGISTRY: dict[str, Callable[[], Problem]] = {
    "quadratic1d": example_problem,
}


def registered_problems() -> list[str]:
    return sorted(_REGISTRY)


def get_problem(
    spec,
    geometry: Geometry | None = None,
    feasible_set: ConvexSet | None = None,
) -> Problem:
    """Resolve a problem from a registry name or an inline description.

    Inline form: {"quadratic": {"A": ..., "B": ..., "C": ..., "c1": ?, "c2": ?},
    "mapping": {"scale": s}} plus explicit geometry and set.
    """
    if isinstance(spec, str):
        try:
            return _REGISTRY[spec]()
        except KeyError:
            raise ConfigError(
                f"unknown problem {spec!r}; registered: {registered_problems()}"
            ) from None
    if not isinstance(spec, dict) or "quadratic" not in spec:
        raise ConfigError("inline problems need a 'quadratic' block")
    if geometry is None or feasible_set is None:
        raise ConfigError("inline problems need explicit geometry and set blocks")
    quad = spec["quadratic"]
    lipschitz = None
    if "c1" in quad or "c2" in quad:
        if not ("c1" in quad and "c2" in quad):
            raise ConfigError("declare both c1 and c2 or neither")
        lipschitz = (float(quad["c1"]), float(quad["c2"]))
    f = QuadraticBifunction(quad["A"], quad["B"], quad["C"], lipschitz=lipschitz)
    if f.dim != geometry.dim:
        raise ConfigError("quadratic matrices do not match the geometry dimension")
    mapping_cfg = spec.get("mapping", {"scale": 1.0})
    mapping = scaling_mapping(geometry.dim, mapping_cfg.get("scale", 1.0))
    return Problem(geometry=geometry, feasible_set=feasible_set,
                   bifunction=f, mapping=mapping, name="inline")
