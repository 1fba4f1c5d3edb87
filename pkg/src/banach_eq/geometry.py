"""Finite-dimensional Banach-space substrate.

Everything the solvers need from the ambient space lives here: the p-norm,
the normalized duality mapping J and its inverse, the Lyapunov functional

    phi(x, y) = ||x||^2 - 2 <x, Jy> + ||y||^2,

and its dual-coordinate form V(x, u) = phi(x, J^{-1} u).  In the Euclidean
case J is the identity and phi(x, y) = ||x - y||^2 exactly.

All operations are pure functions of immutable data and accept trailing-axis
batches (shape (..., dim)), so sampled identity checks stay vectorized.
Geometry values are safe to share across concurrent tasks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

from .errors import ConfigError, DimensionMismatch

# Primal points x in E and functionals u in E* are both plain coordinate
# arrays; the distinction is carried by names and annotations, never by a
# runtime wrapper.
PrimalVector = np.ndarray
DualVector = np.ndarray

DEFAULT_IDENTITY_TOL = 1e-9


def pair(u, v) -> np.ndarray | float:
    """Duality pairing <u, v>: coordinate dot product over the last axis."""
    return np.sum(np.asarray(u, dtype=float) * np.asarray(v, dtype=float), axis=-1)


@dataclass(frozen=True)
class Geometry:
    """A concrete space: Euclidean(dim) or Lp(dim, p) with p in (1, inf).

    ``c`` is the 2-uniform-convexity constant in (0, 1].  It is 1 in the
    Euclidean case and defaults to sqrt(p - 1) for p in (1, 2].  Lp spaces
    with p > 2 are not 2-uniformly convex, so ``c`` is None there and the
    linesearch solver refuses such geometries at configuration time.
    """

    kind: str
    dim: int
    p: float = 2.0
    c: float | None = 1.0
    identity_tol: float = DEFAULT_IDENTITY_TOL

    @staticmethod
    def euclidean(dim: int) -> "Geometry":
        if dim < 1:
            raise ConfigError(f"dim must be >= 1, got {dim}")
        return Geometry(kind="euclidean", dim=dim, p=2.0, c=1.0)

    @staticmethod
    def lp(dim: int, p: float, c: float | None = None) -> "Geometry":
        if dim < 1:
            raise ConfigError(f"dim must be >= 1, got {dim}")
        if not (1.0 < p < math.inf):
            raise ConfigError(f"p must lie in (1, inf), got {p}")
        if c is None:
            c = math.sqrt(p - 1.0) if p <= 2.0 else None
        else:
            if p > 2.0:
                raise ConfigError(
                    "an Lp space with p > 2 is not 2-uniformly convex; "
                    "a convexity constant cannot be declared for it"
                )
            if not (0.0 < c <= 1.0):
                raise ConfigError(f"c must lie in (0, 1], got {c}")
        return Geometry(kind="lp", dim=dim, p=float(p), c=c)

    @staticmethod
    def from_config(cfg: dict) -> "Geometry":
        kind = cfg.get("kind")
        dim = cfg.get("dim")
        if kind == "euclidean":
            return Geometry.euclidean(int(dim))
        if kind == "lp":
            if "p" not in cfg:
                raise ConfigError("lp geometry requires 'p'")
            return Geometry.lp(int(dim), float(cfg["p"]), cfg.get("c"))
        raise ConfigError(f"unknown geometry kind {kind!r}")

    # ----------------------------------------------------------------- basics

    @property
    def is_euclidean(self) -> bool:
        return self.kind == "euclidean"

    @property
    def q(self) -> float:
        """Conjugate exponent; the dual space of lp is lq with q = p/(p-1)."""
        return self.p / (self.p - 1.0)

    def _checked(self, v) -> np.ndarray:
        arr = np.asarray(v, dtype=float)
        if arr.ndim == 0 or arr.shape[-1] != self.dim:
            raise DimensionMismatch(
                f"expected trailing dimension {self.dim}, got shape {arr.shape}"
            )
        return arr

    def norm(self, x) -> np.ndarray | float:
        x = self._checked(x)
        if self.is_euclidean:
            return np.linalg.norm(x, axis=-1)
        return np.sum(np.abs(x) ** self.p, axis=-1) ** (1.0 / self.p)

    def dual_norm(self, u) -> np.ndarray | float:
        u = self._checked(u)
        if self.is_euclidean:
            return np.linalg.norm(u, axis=-1)
        q = self.q
        return np.sum(np.abs(u) ** q, axis=-1) ** (1.0 / q)

    # ---------------------------------------------------------- duality maps

    def duality_map(self, x) -> DualVector:
        """Normalized duality mapping J, characterized by
        <x, Jx> = ||x||^2 = ||Jx||_*^2.

        For lp the closed form is (Jx)_i = ||x||^{2-p} |x_i|^{p-1} sign(x_i),
        with J(0) = 0 (the defining identities force it).
        """
        x = self._checked(x)
        if self.is_euclidean:
            return np.array(x, dtype=float, copy=True)
        return _power_map(x, self.p)

    def inverse_duality_map(self, u) -> PrimalVector:
        """Inverse of J; equals the duality mapping of lq with q = p/(p-1)."""
        u = self._checked(u)
        if self.is_euclidean:
            return np.array(u, dtype=float, copy=True)
        return _power_map(u, self.q)

    # ------------------------------------------------------------ functionals

    def phi(self, x, y) -> np.ndarray | float:
        """Lyapunov functional ||x||^2 - 2 <x, Jy> + ||y||^2 (>= 0)."""
        x = self._checked(x)
        y = self._checked(y)
        if self.is_euclidean:
            d = x - y
            return np.sum(d * d, axis=-1)
        return self.norm(x) ** 2 - 2.0 * pair(x, self.duality_map(y)) + self.norm(y) ** 2

    def lyapunov(self, x, u) -> np.ndarray | float:
        """V(x, u) = phi(x, J^{-1} u), the dual-coordinate form of phi."""
        return self.phi(x, self.inverse_duality_map(u))

    def dual_convex_combination(
        self, weighted_points: Iterable[Tuple[float, np.ndarray]]
    ) -> PrimalVector:
        """J^{-1}(sum_i w_i J(x_i)) for weights w_i summing to one."""
        acc = None
        for w, point in weighted_points:
            jp = self.duality_map(point)
            acc = w * jp if acc is None else acc + w * jp
        if acc is None:
            raise ValueError("empty combination")
        return self.inverse_duality_map(acc)


def _power_map(v: np.ndarray, exponent: float) -> np.ndarray:
    """sign(v_i) |v_i|^{e-1} scaled by ||v||_e^{2-e}, with 0 mapped to 0."""
    n = np.sum(np.abs(v) ** exponent, axis=-1, keepdims=True) ** (1.0 / exponent)
    scale = np.zeros_like(n)
    pos = n > 0.0
    # guard the 0^{negative} branch of ||v||^{2-e} explicitly
    scale[pos] = n[pos] ** (2.0 - exponent)
    return scale * np.sign(v) * np.abs(v) ** (exponent - 1.0)
