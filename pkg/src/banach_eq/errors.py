"""Exception types shared across the library."""


class BanachEqError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(BanachEqError):
    """A vector's trailing dimension does not match the geometry."""


class ConfigError(BanachEqError):
    """Invalid or inconsistent run / solver configuration."""


class InfeasibleSet(BanachEqError):
    """The feasibility solver certified that the set has no point."""


class InfeasibleStart(BanachEqError):
    """A starting point lies outside the feasible set."""


class NoConvergence(BanachEqError):
    """An iterative routine hit its cap with the residual above tolerance."""


class MissingConstants(BanachEqError):
    """A check requiring declared Lipschitz-type constants was requested
    for a bifunction that does not declare them."""


class LinesearchExhausted(BanachEqError):
    """The backtracking search ran out of trial exponents.  The theory
    guarantees a finite exponent exists, so this signals an oracle or
    tolerance problem rather than a normal outcome."""


class ZeroSubgradient(BanachEqError):
    """A zero subgradient appeared where the descent step needs to divide
    by its norm."""


class InfeasibleCut(BanachEqError):
    """The per-iteration cut intersection came back empty.  The solution
    set is contained in every cut, so this is a fatal diagnostic."""


class MissingRows(BanachEqError):
    """A golden-table comparison asked for iteration rows the trace does
    not contain."""
