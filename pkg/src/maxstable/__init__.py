"""Exact simulation and unbiased density estimation for Gaussian-driven
max-stable vectors."""

from .errors import MaxStableError
from .estimator import (
    DEFAULT_SCHEDULE,
    EstimatorDraw,
    KernelConstants,
    LevelSchedule,
    draw_estimator,
    sample_level,
)
from .gaussian import (
    CovarianceSpec,
    GaussianDesign,
    GaussianVector,
    build_design,
    precision_apply,
    sample_exceedance,
    sample_gaussian,
)
from .inference import (
    EstimateReport,
    ModelBundle,
    kde_estimate,
    kde_report,
    rate_factor,
    run_budget,
    sample_max_stable,
)
from .oracle import cdf_mc, density_fd, finite_level_density, gumbel_marginal_cdf
from .records import RecordParams, algorithm_x, choose_n0
from .sampler import ExactSample, algorithm_m, compute_n_a, cost_of
from .streams import available_backends, default_backend, make_stream
from .walk import TiltParams, algorithm_s, cramer_root

__version__ = "0.1.0"

__all__ = [
    "CovarianceSpec", "GaussianDesign", "GaussianVector", "build_design",
    "precision_apply", "sample_exceedance", "sample_gaussian",
    "TiltParams", "cramer_root", "algorithm_s",
    "RecordParams", "choose_n0", "algorithm_x",
    "ExactSample", "algorithm_m", "compute_n_a", "cost_of",
    "KernelConstants", "LevelSchedule", "DEFAULT_SCHEDULE", "EstimatorDraw",
    "draw_estimator", "sample_level",
    "EstimateReport", "ModelBundle", "run_budget", "sample_max_stable",
    "kde_estimate", "kde_report", "rate_factor",
    "cdf_mc", "density_fd", "finite_level_density", "gumbel_marginal_cdf",
    "make_stream", "available_backends", "default_backend",
    "MaxStableError",
]
