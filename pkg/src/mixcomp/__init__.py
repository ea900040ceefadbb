"""Estimate the number of components of a nonparametric finite mixture.

The estimator thresholds tail norms of the singular values of a kernel
estimate of the integral operator linking two conditionally independent
components of the data.
"""

from .data import ComponentSample, PairData, Sample
from .estimator import (
    Estimate,
    EstimatorConfig,
    MixtureRankEstimator,
    PairEstimate,
    estimate,
    estimate_deltas,
    estimate_pair,
    silverman_bandwidth,
)
from .kernels import KernelSpec, analytic_L, hs_dist_sq, phi, phi_quadrature, phi_vec
from .linalg import Spectrum, psd_sqrt, singular_values, tail_norms
from .operator import build_ahat, build_gram, spectrum
from .threshold import (
    ConcentrationStats,
    closed_form_threshold,
    concentration_stats,
    solve_threshold,
)

__version__ = "0.1.0"

__all__ = [
    "ComponentSample",
    "ConcentrationStats",
    "Estimate",
    "EstimatorConfig",
    "KernelSpec",
    "MixtureRankEstimator",
    "PairData",
    "PairEstimate",
    "Sample",
    "Spectrum",
    "analytic_L",
    "build_ahat",
    "build_gram",
    "closed_form_threshold",
    "concentration_stats",
    "estimate",
    "estimate_deltas",
    "estimate_pair",
    "hs_dist_sq",
    "phi",
    "phi_quadrature",
    "phi_vec",
    "psd_sqrt",
    "silverman_bandwidth",
    "singular_values",
    "solve_threshold",
    "spectrum",
    "tail_norms",
]
