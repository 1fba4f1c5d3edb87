"""Strong-convergence solvers for common equilibrium / fixed-point problems
over finite-dimensional Banach geometries."""

from .errors import (
    BanachEqError,
    ConfigError,
    DimensionMismatch,
    InfeasibleCut,
    InfeasibleSet,
    InfeasibleStart,
    LinesearchExhausted,
    MissingConstants,
    MissingRows,
    NoConvergence,
    ZeroSubgradient,
)
from .extragradient import EgState, ExtragradientConfig, eg_iterate, eg_solve
from .geometry import DualVector, Geometry, PrimalVector, pair
from .linesearch import LinesearchConfig, armijo_search, gradient_step, ls_solve
from .problems import (
    AssumptionReport,
    Bifunction,
    Mapping,
    OperatorBifunction,
    Problem,
    QuadraticBifunction,
    example_problem,
    get_problem,
    scaling_mapping,
    validate_problem,
    verify_assumptions,
)
from .prox import ProxRequest, ProxResult, prox
from .runner import (
    GoldenReport,
    GoldenTable,
    RunConfig,
    bundled_config_path,
    compare_golden,
    run_file,
)
from .sets import (
    Box,
    ConvexSet,
    DualLinearHalfspace,
    Intersection,
    PrimalHalfspace,
    RetractionReport,
    anchor_cut,
    contains,
    phi_cut,
    sample_feasible,
    sunny_retract,
    violation,
)
from .trace import IterateRecord, LinesearchRecord, Status, Trace, read_csv
from .util import SEED_ENV_VAR, default_rng, quantize_toward_zero

__version__ = "0.1.0"
