"""Renyi-DP posterior sampling for conjugate exponential families and GLMs."""

from .calibrate import CalibrationResult, find_m, find_r
from .expfam import (
    BetaBernoulli,
    DirichletCategorical,
    GaussianMean,
    PrivacyBudget,
    fold_public_data,
    lambda_star,
    log_partition,
    posterior_update,
    renyi_divergence,
    sup_neighbor_divergence,
)
from .mechanisms import (
    MechanismOutput,
    ReleaseRefusedError,
    RngStream,
    beta_stat_query,
    gaussian_baseline,
    sample_concentrated,
    sample_diffused,
    sample_direct,
)

__version__ = "0.1.0"
