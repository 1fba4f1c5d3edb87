"""Iterate records, run traces, and their CSV serialization.

Real columns are serialized with ``repr``, whose shortest round-trip form is
exact for IEEE doubles, so a trace re-read from CSV reproduces the in-memory
values bit for bit.  Vector columns join coordinates with ';'.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class Status(str, enum.Enum):
    STOPPED_AT_SOLUTION = "stopped_at_solution"
    CONVERGED = "converged"
    MAX_ITER = "max_iter"


@dataclass
class IterateRecord:
    """One outer iteration's full state and monitors.

    Monitors referencing a known solution (phi_star_xn and the inequality
    slacks) are None unless a reference solution was configured.  x_next and
    the cut violations describe the retraction step taken after this row;
    they stay None on a terminal stopped row.
    """

    n: int
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    t: np.ndarray
    alpha: float
    beta: float
    lam: float
    phi_x0_xn: float
    phi_star_xn: Optional[float]
    lem1_slack: Optional[float]
    lem3_slack: Optional[float]
    retract_residual: Optional[float]
    retract_iters: Optional[int]
    prox_path: str
    prox_iters: int
    prox_residual: float
    y_eq_x: bool
    t_eq_x: bool
    x_next: Optional[np.ndarray] = None
    cut_violation_xstar: Optional[float] = None
    cut_violation_xnext: Optional[float] = None


@dataclass
class LinesearchRecord(IterateRecord):
    w: Optional[np.ndarray] = None
    gsub: Optional[np.ndarray] = None
    sigma: Optional[float] = None
    m: Optional[int] = None
    rho: Optional[float] = None
    f_zx: Optional[float] = None
    prop41_slack: Optional[float] = None
    prop41_t_slack: Optional[float] = None
    sigma_variant: Optional[str] = None


BASE_COLUMNS = [
    "n", "x", "y", "z", "t", "alpha", "beta", "lambda",
    "phi_x0_xn", "phi_star_xn", "lem1_slack", "lem3_slack",
    "retract_residual", "retract_iters",
    "prox_path", "prox_iters", "prox_residual",
]
LINESEARCH_COLUMNS = BASE_COLUMNS + [
    "w", "g", "sigma", "m", "rho", "f_zx", "prop41_slack", "sigma_variant",
]

_COLUMN_ATTR = {"lambda": "lam", "g": "gsub"}
_INT_COLUMNS = {"n", "retract_iters", "prox_iters", "m"}
_TEXT_COLUMNS = {"prox_path", "sigma_variant"}


def _attr_for(column: str) -> str:
    return _COLUMN_ATTR.get(column, column)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, np.ndarray):
        flat = np.atleast_1d(value)
        if flat.size == 1:
            return repr(float(flat[0]))
        return ";".join(repr(float(v)) for v in flat)
    return repr(float(value))


def _parse_cell(column: str, text: str):
    if text == "":
        return None
    if column in _TEXT_COLUMNS:
        return text
    if column in _INT_COLUMNS:
        return int(text)
    if ";" in text:
        return np.array([float(tok) for tok in text.split(";")])
    return float(text)


@dataclass
class Trace:
    """All records of one run plus run-level metadata."""

    algorithm: str
    records: list = field(default_factory=list)
    final_x: Optional[np.ndarray] = None
    reference: Optional[np.ndarray] = None
    x0: Optional[np.ndarray] = None
    status: Optional[Status] = None

    @property
    def columns(self) -> list[str]:
        return LINESEARCH_COLUMNS if self.algorithm == "linesearch" else BASE_COLUMNS

    def row_values(self, record) -> list[str]:
        return [_format_cell(getattr(record, _attr_for(col))) for col in self.columns]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(self.columns)
            for record in self.records:
                writer.writerow(self.row_values(record))

    def summary(self) -> dict:
        """Worst monitor values over the whole run (None when absent)."""
        def collect(attr):
            vals = [getattr(r, attr, None) for r in self.records]
            return [v for v in vals if v is not None]

        def agg(attr, fn):
            vals = collect(attr)
            return float(fn(vals)) if vals else None

        phi_x0 = [r.phi_x0_xn for r in self.records]
        monotone = None
        if len(phi_x0) >= 2:
            diffs = np.diff(np.asarray(phi_x0))
            monotone = float(np.min(diffs))
        fz = [r.f_zx for r in self.records
              if getattr(r, "f_zx", None) is not None and not r.y_eq_x]
        return {
            "iterations": len(self.records),
            "lem1_slack_min": agg("lem1_slack", min),
            "lem3_slack_min": agg("lem3_slack", min),
            "prop41_slack_min": agg("prop41_slack", min),
            "prop41_t_slack_min": agg("prop41_t_slack", min),
            "f_zx_min": float(min(fz)) if fz else None,
            "phi_x0_monotone_min": monotone,
            "cut_violation_xstar_max": agg("cut_violation_xstar", max),
            "cut_violation_xnext_max": agg("cut_violation_xnext", max),
            "retract_residual_max": agg("retract_residual", max),
            "prox_residual_max": agg("prox_residual", max),
        }


def read_csv(path) -> list[dict]:
    """Parse a trace CSV back into per-row dicts keyed by column name."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        return [
            {col: _parse_cell(col, cell) for col, cell in zip(header, row)}
            for row in reader
        ]
