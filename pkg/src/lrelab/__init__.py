"""Likelihood-ratio exponential families: duality, divergences, TI bounds,
hypothesis testing, and rate-distortion on exactly computable densities."""

__version__ = "0.1.0"

from .density import (
    Density,
    FiniteDensity,
    GaussianDensity,
    GridDensity,
    Quadratic,
    SampleBatch,
    expect,
    geometric_mixture,
    log_density_eval,
    log_partition_exact,
    normalized,
    sample,
)
from .divergence import (
    ChernoffResult,
    alpha_skew_jsd,
    chernoff_point,
    dual_gap_argmax,
    jensen_gap_dual,
    jensen_gap_primal,
    renyi,
)
from .errors import (
    BoundaryError,
    ConvergenceError,
    DegeneratePathError,
    DomainError,
    LreError,
    RangeError,
    SchemaError,
)
from .family import BetaPoint, LrePath
from .hyptest import (
    BarResult,
    LRTest,
    WorkSamples,
    bar_estimate,
    bar_log_likelihood,
    mc_error_rates,
    np_decide,
    sanov_exponents,
    variational_solution,
)
from .rdib import (
    RDCSolution,
    RDProblem,
    ba_solve,
    encoder_update,
    ib_distortion_from_classifier,
    rd_curve,
    rdc_surface,
    solve_beta_for_D,
)
from .ti import BetaSchedule, TiReport, chernoff_on_integrand, gap_decomposition, make_schedule, ti_bounds
