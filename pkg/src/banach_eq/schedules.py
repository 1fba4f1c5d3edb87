"""Parameter schedules n -> value for the outer iterations."""
from __future__ import annotations

from typing import Callable

from .errors import ConfigError

Schedule = Callable[[int], float]


def constant(value: float) -> Schedule:
    value = float(value)
    return lambda n: value


def harmonic(base: float, offset: float) -> Schedule:
    """base + 1 / (offset + n), the decaying form the worked example uses."""
    base = float(base)
    offset = float(offset)
    return lambda n: base + 1.0 / (offset + n)


def from_config(cfg) -> Schedule:
    if isinstance(cfg, (int, float)):
        return constant(float(cfg))
    if not isinstance(cfg, dict):
        raise ConfigError(f"cannot build a schedule from {cfg!r}")
    kind = cfg.get("kind")
    if kind == "constant":
        return constant(cfg["value"])
    if kind == "harmonic":
        return harmonic(cfg["base"], cfg["offset"])
    raise ConfigError(f"unknown schedule kind {kind!r}")
