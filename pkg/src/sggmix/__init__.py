"""Bayesian nonparametric mixtures of shifted gamma-gamma kernels.

The mixing measure is a normalised stable process; posterior inference
uses a marginal MCMC sampler with adaptive random-walk Metropolis-Hastings.
"""

from ._backend import kernels as _kernels
from .diagnostics import (
    FitReport,
    PredictiveBand,
    cpo_lpml,
    fit_report,
    m_posterior,
    posterior_ic,
    predictive_density,
    tail_report,
)
from .distributions import (
    GpdParams,
    ParameterError,
    SggParams,
    gg_logpdf,
    gpd_logpdf,
    gpd_pdf,
    rng_stream,
    sgg_logpdf,
    sgg_mean,
    sgg_pdf,
    sgg_sample,
    sgg_variance,
)
from .sampler import (
    BaseMeasure,
    BetaNu,
    ChainConfig,
    ClusterState,
    FixedNu,
    GammaHyper,
    Trace,
    run_chain,
)
from .simulate import MixtureSpec, mixture_pdf, sample_mixture, simulation_study_spec
from .stable_process import PartitionCounts, eppf_log, urn_predictive_weights

__version__ = "0.1.0"

BACKEND = _kernels.NAME

__all__ = [
    "BACKEND",
    "BaseMeasure",
    "BetaNu",
    "ChainConfig",
    "ClusterState",
    "FitReport",
    "FixedNu",
    "GammaHyper",
    "GpdParams",
    "MixtureSpec",
    "ParameterError",
    "PartitionCounts",
    "PredictiveBand",
    "SggParams",
    "Trace",
    "cpo_lpml",
    "eppf_log",
    "fit_report",
    "gg_logpdf",
    "gpd_logpdf",
    "gpd_pdf",
    "m_posterior",
    "mixture_pdf",
    "posterior_ic",
    "predictive_density",
    "rng_stream",
    "run_chain",
    "sample_mixture",
    "sgg_logpdf",
    "sgg_mean",
    "sgg_pdf",
    "sgg_sample",
    "sgg_variance",
    "simulation_study_spec",
    "tail_report",
    "urn_predictive_weights",
]
