"""Small shared helpers: seeding and grid quantization."""
from __future__ import annotations

import os

import numpy as np

SEED_ENV_VAR = "BANACH_EQ_SEED"
DEFAULT_SEED = 42


def env_seed() -> int:
    """Seed for all sampled diagnostics, overridable via BANACH_EQ_SEED."""
    return int(os.environ.get(SEED_ENV_VAR, DEFAULT_SEED))


def default_rng(rng: np.random.Generator | None = None) -> np.random.Generator:
    if rng is not None:
        return rng
    return np.random.default_rng(env_seed())


def quantize_toward_zero(x: np.ndarray, step: float) -> np.ndarray:
    """Truncate each coordinate to the grid {k * step}, rounding toward zero.

    Values within 1e-9 grid units below a grid line are snapped up so that
    quantization is idempotent on already-quantized values.
    """
    if step <= 0.0:
        raise ValueError(f"quantization step must be positive, got {step}")
    v = np.asarray(x, dtype=float)
    r = np.abs(v) / step
    k = np.floor(r)
    k = np.where(r - k > 1.0 - 1e-9, k + 1.0, k)
    return np.sign(v) * k * step
