"""Configuration-driven experiment runner.

Loads a problem and solver configuration from a JSON file, executes the run,
writes the iterate trace as CSV, optionally compares against a golden table,
and emits plot-ready convergence data.  Exit codes:

    0   converged or stopped at a solution
    2   iteration cap reached
    3   an invariant or golden-table check failed beyond tolerance
    4   configuration error
"""
from __future__ import annotations

import json
import sys
from concurrent import futures
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import BanachEqError, ConfigError, MissingRows
from .extragradient import ExtragradientConfig, eg_solve
from .extragradient import validate_config as validate_eg
from .geometry import Geometry
from .linesearch import LinesearchConfig, ls_solve
from .linesearch import validate_config as validate_ls
from .problems import Problem, get_problem, verify_assumptions
from .schedules import from_config as schedule_from_config
from .sets import set_from_config
from .trace import Status, Trace
from .util import default_rng

EXIT_OK = 0
EXIT_MAX_ITER = 2
EXIT_VIOLATION = 3
EXIT_CONFIG = 4

SLACK_FLOOR = -1e-7
MONOTONE_FLOOR = -1e-9
MEMBERSHIP_TOL = 1e-8


def bundled_config_path(name: str) -> Path:
    """Path of a packaged configuration or golden-table fixture."""
    stem = name if name.endswith(".json") else name + ".json"
    path = resources.files("banach_eq").joinpath("configs", stem)
    with resources.as_file(path) as concrete:
        return Path(concrete)


def _resolve(path_or_name: str) -> Path:
    p = Path(path_or_name)
    if p.exists():
        return p
    try:
        bundled = bundled_config_path(path_or_name)
    except (FileNotFoundError, ModuleNotFoundError):
        raise ConfigError(f"no such config file or bundled name: {path_or_name}")
    if bundled.exists():
        return bundled
    raise ConfigError(f"no such config file or bundled name: {path_or_name}")


@dataclass
class RunConfig:
    problem: object
    algorithm: str
    params: dict = field(default_factory=dict)
    x0: Optional[list] = None
    geometry: Optional[dict] = None
    feasible_set: Optional[dict] = None
    reference_solution: Optional[list] = None
    output_csv: Optional[str] = None
    output_plot: Optional[str] = None
    golden_table: Optional[str] = None
    quantization: Optional[float] = None

    @staticmethod
    def parse(raw: dict) -> "RunConfig":
        if "problem" not in raw:
            raise ConfigError("config needs a 'problem' entry")
        algorithm = raw.get("algorithm")
        if algorithm not in ("extragradient", "linesearch"):
            raise ConfigError(
                f"algorithm must be 'extragradient' or 'linesearch', got {algorithm!r}"
            )
        if "x0" not in raw:
            raise ConfigError("config needs an 'x0' entry")
        output = raw.get("output", {}) or {}
        return RunConfig(
            problem=raw["problem"],
            algorithm=algorithm,
            params=raw.get("params", {}) or {},
            x0=raw["x0"],
            geometry=raw.get("geometry"),
            feasible_set=raw.get("set"),
            reference_solution=raw.get("reference_solution"),
            output_csv=output.get("csv"),
            output_plot=output.get("plot"),
            golden_table=raw.get("golden_table"),
            quantization=raw.get("quantization"),
        )

    @staticmethod
    def load(path_or_name: str) -> "RunConfig":
        path = _resolve(path_or_name)
        with open(path) as handle:
            return RunConfig.parse(json.load(handle))


def build_problem(rc: RunConfig) -> Problem:
    geometry = Geometry.from_config(rc.geometry) if rc.geometry else None
    feasible = set_from_config(rc.feasible_set) if rc.feasible_set else None
    problem = get_problem(rc.problem, geometry=geometry, feasible_set=feasible)
    if geometry is not None and geometry.dim != problem.geometry.dim:
        raise ConfigError("geometry block disagrees with the resolved problem")
    return problem


def build_solver_config(rc: RunConfig, quantize_override: Optional[float] = None):
    params = dict(rc.params)
    quantize = quantize_override if quantize_override is not None else rc.quantization
    kwargs = {}
    for key in ("alpha", "beta"):
        if key in params:
            kwargs[key] = schedule_from_config(params.pop(key))
    if "lambda" in params:
        kwargs["lam"] = schedule_from_config(params.pop("lambda"))
    for key in ("max_outer", "m_max"):
        if key in params:
            kwargs[key] = int(params.pop(key))
    for key in ("stop_tol", "armijo_alpha", "gamma", "nu"):
        if key in params:
            kwargs[key] = float(params.pop(key))
    if "sigma_variant" in params:
        kwargs["sigma_variant"] = str(params.pop("sigma_variant"))
    if params:
        raise ConfigError(f"unknown solver parameters: {sorted(params)}")
    kwargs["quantize"] = quantize
    if rc.algorithm == "extragradient":
        return ExtragradientConfig(**kwargs)
    return LinesearchConfig(**kwargs)


# ---------------------------------------------------------------- golden table


@dataclass
class GoldenTable:
    """Expected iterate values with per-column tolerances.

    Cells whose expected magnitude is at most ``tail_threshold`` use the
    looser ``tail_tolerance`` (tiny tail entries are printed with fewer
    digits than the leading rows).
    """

    columns: list
    rows: list
    default_tolerance: float = 0.01
    tolerances: dict = field(default_factory=dict)
    tail_threshold: float = 1e-4
    tail_tolerance: float = 1e-3

    def __post_init__(self):
        indices = [row["n"] for row in self.rows]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ConfigError("golden table rows must have strictly increasing n")

    @staticmethod
    def load(path_or_name: str) -> "GoldenTable":
        path = _resolve(path_or_name)
        with open(path) as handle:
            raw = json.load(handle)
        return GoldenTable(
            columns=list(raw["columns"]),
            rows=list(raw["rows"]),
            default_tolerance=float(raw.get("default_tolerance", 0.01)),
            tolerances={k: float(v) for k, v in raw.get("tolerances", {}).items()},
            tail_threshold=float(raw.get("tail_threshold", 1e-4)),
            tail_tolerance=float(raw.get("tail_tolerance", 1e-3)),
        )

    def cell_tolerance(self, column: str, expected: float) -> float:
        if abs(expected) <= self.tail_threshold:
            return self.tail_tolerance
        return self.tolerances.get(column, self.default_tolerance)


@dataclass
class CellDiff:
    n: int
    column: str
    expected: float
    actual: float
    diff: float
    tolerance: float
    ok: bool


@dataclass
class GoldenReport:
    cells: list

    @property
    def passed(self) -> bool:
        return all(cell.ok for cell in self.cells)

    def failures(self) -> list:
        return [cell for cell in self.cells if not cell.ok]

    def describe(self) -> str:
        if self.passed:
            return f"golden comparison passed ({len(self.cells)} cells)"
        lines = [f"golden comparison FAILED ({len(self.failures())} of {len(self.cells)} cells):"]
        for cell in self.failures():
            lines.append(
                f"  n={cell.n} {cell.column}: expected {cell.expected} "
                f"got {cell.actual:.6f} (|diff| {cell.diff:.4f} > {cell.tolerance})"
            )
        return "\n".join(lines)


_GOLDEN_ATTRS = {"x": "x", "y": "y", "z": "z", "t": "t", "w": "w"}


def compare_golden(trace: Trace, table: GoldenTable, max_n: Optional[int] = None) -> GoldenReport:
    """Per-cell absolute comparison of a (1-D) trace against a golden table."""
    by_n = {record.n: record for record in trace.records}
    cells = []
    for row in table.rows:
        n = int(row["n"])
        if max_n is not None and n > max_n:
            continue
        if n not in by_n:
            raise MissingRows(f"trace has no iteration row n={n}")
        record = by_n[n]
        for column in table.columns:
            if column not in row:
                continue
            value = getattr(record, _GOLDEN_ATTRS[column], None)
            if value is None:
                raise MissingRows(f"trace rows carry no column {column!r}")
            actual = float(np.atleast_1d(value)[0])
            expected = float(row[column])
            tol = table.cell_tolerance(column, expected)
            diff = abs(actual - expected)
            cells.append(CellDiff(n=n, column=column, expected=expected,
                                  actual=actual, diff=diff, tolerance=tol,
                                  ok=diff <= tol))
    return GoldenReport(cells=cells)


# ------------------------------------------------------------------- execution


def _collect_violations(trace: Trace, quantize: Optional[float]) -> list:
    """Monitor values beyond their tolerances, as human-readable strings."""
    s = trace.summary()
    out = []
    for key in ("lem1_slack_min", "prop41_slack_min", "prop41_t_slack_min"):
        if s[key] is not None and s[key] < SLACK_FLOOR:
            out.append(f"{key} = {s[key]:.3e} < {SLACK_FLOOR}")
    # the phi(x*, t) <= phi(x*, x) estimate is only guaranteed for the
    # extragradient solver and the squared_norm linesearch variant
    gate_lem3 = trace.algorithm == "extragradient" or any(
        getattr(r, "sigma_variant", None) == "squared_norm" for r in trace.records
    )
    if gate_lem3 and s["lem3_slack_min"] is not None and s["lem3_slack_min"] < SLACK_FLOOR:
        out.append(f"lem3_slack_min = {s['lem3_slack_min']:.3e} < {SLACK_FLOOR}")
    if s["f_zx_min"] is not None and s["f_zx_min"] < -1e-10:
        out.append(f"f_zx_min = {s['f_zx_min']:.3e} < -1e-10")
    if s["phi_x0_monotone_min"] is not None and s["phi_x0_monotone_min"] < MONOTONE_FLOOR:
        out.append(
            f"phi_x0_monotone_min = {s['phi_x0_monotone_min']:.3e} < {MONOTONE_FLOOR}"
        )
    membership_tol = max(MEMBERSHIP_TOL, quantize or 0.0)
    for key in ("cut_violation_xstar_max", "cut_violation_xnext_max"):
        if s[key] is not None and s[key] > membership_tol:
            out.append(f"{key} = {s[key]:.3e} > {membership_tol}")
    return out


def execute(
    rc: RunConfig,
    csv_path: Optional[str] = None,
    golden_path: Optional[str] = None,
    quantize: Optional[float] = None,
) -> int:
    """Run one configuration; returns the process exit code."""
    try:
        problem = build_problem(rc)
        cfg = build_solver_config(rc, quantize_override=quantize)
        if rc.algorithm == "extragradient":
            validate_eg(cfg, problem)
        else:
            validate_ls(cfg, problem)
    except BanachEqError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    rng = default_rng(None)
    try:
        if rc.algorithm == "extragradient":
            trace, status = eg_solve(problem, cfg, rc.x0,
                                     reference=rc.reference_solution, rng=rng)
        else:
            trace, status = ls_solve(problem, cfg, rc.x0,
                                     reference=rc.reference_solution, rng=rng)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    csv_target = csv_path or rc.output_csv
    if csv_target:
        trace.to_csv(csv_target)
    plot_target = rc.output_plot
    if plot_target is None and csv_target and trace.reference is not None:
        plot_target = str(Path(csv_target).with_suffix(".conv.dat"))
    if plot_target and trace.reference is not None:
        _write_plot_data(trace, problem.geometry, plot_target)

    violations = _collect_violations(trace, cfg.quantize)

    golden_target = golden_path or rc.golden_table
    golden_report = None
    if golden_target:
        try:
            golden_report = compare_golden(trace, GoldenTable.load(golden_target))
        except MissingRows as exc:
            violations.append(f"golden comparison impossible: {exc}")
        else:
            print(golden_report.describe(), file=sys.stderr)
            if not golden_report.passed:
                violations.append("golden table mismatch")

    summary = {
        "algorithm": trace.algorithm,
        "status": status.value,
        "iterations": len(trace.records),
        "final_x": [float(v) for v in np.atleast_1d(trace.final_x)],
        "worst": trace.summary(),
        "violations": violations,
        "csv": csv_target,
    }
    if trace.reference is not None:
        gap = problem.geometry.norm(trace.final_x - trace.reference)
        summary["final_distance_to_reference"] = float(gap)
    code = EXIT_OK if status in (Status.CONVERGED, Status.STOPPED_AT_SOLUTION) \
        else EXIT_MAX_ITER
    if violations:
        code = EXIT_VIOLATION
    summary["exit_code"] = code
    print(json.dumps(summary, indent=2))
    return code


def _write_plot_data(trace: Trace, g: Geometry, path: str) -> None:
    with open(path, "w") as handle:
        handle.write("# n  distance_to_reference\n")
        for record in trace.records:
            gap = float(g.norm(record.x - trace.reference))
            handle.write(f"{record.n} {gap!r}\n")


def run_file(
    config_path: str,
    csv_path: Optional[str] = None,
    golden_path: Optional[str] = None,
    quantize: Optional[float] = None,
) -> int:
    try:
        rc = RunConfig.load(config_path)
    except (BanachEqError, json.JSONDecodeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return execute(rc, csv_path=csv_path, golden_path=golden_path, quantize=quantize)


def _sweep_one(args) -> int:
    config_path, out_dir = args
    csv_path = str(Path(out_dir) / (Path(config_path).stem + ".trace.csv"))
    return run_file(config_path, csv_path=csv_path)


def sweep_dir(directory: str, jobs: Optional[int] = None, out: Optional[str] = None) -> int:
    """Run every *.json config in a directory concurrently."""
    configs = sorted(Path(directory).glob("*.json"))
    if not configs:
        print(f"no .json configs under {directory}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(out) if out else Path.cwd()
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = jobs or min(4, len(configs))
    tasks = [(str(c), str(out_dir)) for c in configs]
    with futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        codes = list(pool.map(_sweep_one, tasks))
    for config, code in zip(configs, codes):
        print(f"{config.name}: exit {code}", file=sys.stderr)
    return max(codes)


def verify_file(config_path: str, samples: int = 10_000) -> int:
    """Assumption checks only; no solver run."""
    try:
        rc = RunConfig.load(config_path)
        problem = build_problem(rc)
    except (BanachEqError, json.JSONDecodeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rng = default_rng(None)
    report = verify_assumptions(problem.bifunction, problem.feasible_set,
                                problem.geometry, samples=samples, rng=rng)
    print(f"samples: {report.samples}")
    print(f"diagonal      max |f(x,x)|        = {report.a1_max_abs:.3e}")
    print(f"pseudomono    max f(y,x) given    = {report.a2_max_reverse:.3e}")
    print(f"subgradient   min slack           = {report.a4_min_slack:.3e}")
    if report.a5_min_slack is not None:
        print(f"phi-Lipschitz min slack           = {report.a5_min_slack:.3e}")
    ok = report.gates_ok() and report.a2_max_reverse <= 1e-9
    if report.a5_min_slack is not None:
        ok = ok and report.a5_min_slack >= -1e-9
    print("verdict: " + ("PASS" if ok else "FAIL"))
    return EXIT_OK if ok else EXIT_VIOLATION
