"""Posterior summaries and model-fit measures computed from a ``Trace``."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .sampler import Trace

__all__ = [
    "FitReport",
    "PredictiveBand",
    "TailReport",
    "marginal_loglik",
    "cpo_lpml",
    "posterior_ic",
    "predictive_density",
    "m_posterior",
    "nu_summary",
    "tail_report",
    "histogram",
    "fit_report",
]


def _sgg_logpdf_rows(x, theta):
    """Vectorised SGG log-density; ``theta[..., k]`` broadcast against ``x``."""
    mu, g, a, b = (theta[..., k] for k in range(4))
    d = x - mu
    with np.errstate(divide="ignore", invalid="ignore"):
        const = a * np.log(b) + gammaln(a + g) - gammaln(a) - gammaln(g)
        body = np.where(g == 1.0, 0.0, (g - 1.0) * np.log(d)) - (a + g) * np.log(b + d)
        return np.where(d < 0, -np.inf, const + body)


def marginal_loglik(trace: Trace) -> np.ndarray:
    """``log SGG(x_i | theta_i^(l))`` for every retained iteration, shape ``(L, n)``."""
    return _sgg_logpdf_rows(trace.data[None, :], trace.observation_params())


def cpo_lpml(trace: Trace, likelihood: str = "marginal") -> tuple[np.ndarray, float]:
    """Harmonic-mean CPO per observation and the LPML.

    ``CPO_i = (mean_l 1 / f_i^(l))^(-1)``, evaluated in log space.  With
    ``likelihood="augmented"`` the terms are the stored
    ``f(x_i, y_i^(l) | theta_i^(l))``; with ``"marginal"`` (default) they
    are the SGG densities ``f(x_i | theta_i^(l))``.
    """
    if likelihood == "augmented":
        ll = trace.loglik
    elif likelihood == "marginal":
        ll = marginal_loglik(trace)
    else:
        raise ValueError(f"likelihood must be 'marginal' or 'augmented', got {likelihood!r}")
    L = ll.shape[0]
    log_cpo = -(logsumexp(-ll, axis=0) - math.log(L))
    zero = int(np.sum(np.isneginf(log_cpo)))
    if zero:
        warnings.warn(f"{zero} observations have a zero-likelihood draw; their CPO is 0",
                      RuntimeWarning, stacklevel=2)
    return np.exp(log_cpo), float(np.sum(log_cpo))


def posterior_ic(trace: Trace) -> tuple[float, float]:
    """Posterior expected AIC and BIC.

    Per draw, deviance ``-2 sum_i log SGG(x_i | theta_i)`` plus
    ``2p`` (AIC) or ``p log n`` (BIC) with ``p = 4m + 1``: four kernel
    parameters per cluster plus the stable index.
    """
    dev = -2.0 * marginal_loglik(trace).sum(axis=1)
    p = 4.0 * trace.m + 1.0
    aic = dev + 2.0 * p
    bic = dev + p * math.log(trace.n)
    return float(aic.mean()), float(bic.mean())


@dataclass(frozen=True)
class PredictiveBand:
    grid: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


def predictive_density(trace: Trace, grid, n_base_draws: int = 100,
                       rng: np.random.Generator | None = None, level: float = 0.95) -> PredictiveBand:
    """Posterior predictive density of a new observation with a pointwise band.

    Per retained draw the density is the urn mixture
    ``(nu m / n) E_g0[SGG(x | theta)] + sum_j ((n_j - nu) / n) SGG(x | theta_j)``,
    the base-measure expectation approximated by ``n_base_draws`` fresh
    draws.  The band is the equal-tailed ``level`` interval over draws.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-d array")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise ValueError("grid must be strictly increasing")
    if rng is None:
        rng = np.random.default_rng(0)
    g0 = trace.config.base_measure
    n = trace.n
    dens = np.empty((trace.length, grid.size))
    for l in range(trace.length):
        theta, sizes = trace.clusters(l)
        nu = trace.nu[l]
        w = (sizes - nu) / n
        f = w @ np.exp(_sgg_logpdf_rows(grid[None, :], theta[:, None, :]))
        base = g0.sample_many(n_base_draws, rng)
        f0 = np.exp(_sgg_logpdf_rows(grid[None, :], base[:, None, :])).mean(axis=0)
        dens[l] = nu * len(sizes) / n * f0 + f
    tail = 100.0 * (1.0 - level) / 2.0
    lower, upper = np.percentile(dens, [tail, 100.0 - tail], axis=0)
    return PredictiveBand(grid, dens.mean(axis=0), lower, upper)


def m_posterior(trace: Trace) -> dict[int, float]:
    vals, counts = np.unique(trace.m, return_counts=True)
    return {int(v): float(c) / trace.length for v, c in zip(vals, counts)}


def nu_summary(trace: Trace, level: float = 0.95) -> tuple[float, float, float]:
    """Posterior mean of ``nu`` and its equal-tailed credible interval."""
    tail = 100.0 * (1.0 - level) / 2.0
    lo, hi = np.percentile(trace.nu, [tail, 100.0 - tail])
    return float(trace.nu.mean()), float(lo), float(hi)


def histogram(values, bins: int = 100, range_=None) -> np.ndarray:
    """Columns ``lower, upper, count, density`` of a histogram of ``values``."""
    counts, edges = np.histogram(values, bins=bins, range=range_)
    width = np.diff(edges)
    dens = counts / (counts.sum() * width) if counts.sum() else np.zeros_like(width)
    return np.column_stack([edges[:-1], edges[1:], counts, dens])


@dataclass(frozen=True)
class TailReport:
    """Pooled tail-index probabilities and histogram data.

    Buckets: ``alpha < 1`` (no finite mean), ``1 <= alpha < 2`` (finite
    mean, infinite variance), ``alpha >= 2``.
    """

    p_heavy: float
    p_finite_mean: float
    p_finite_variance: float
    alpha_hist: np.ndarray
    mu_hist: np.ndarray


def tail_report(trace: Trace, bins: int = 100) -> TailReport:
    th = trace.observation_params()
    alpha = th[..., 2].ravel()
    mu = th[..., 0].ravel()
    total = alpha.size
    heavy = int(np.count_nonzero(alpha < 1.0))
    mid = int(np.count_nonzero((alpha >= 1.0) & (alpha < 2.0)))
    light = total - heavy - mid
    a_hi = max(float(np.quantile(alpha, 0.995)), 1.0)
    m_hi = max(float(trace.data.max()), float(mu.max()), 1e-12)
    return TailReport(heavy / total, mid / total, light / total,
                      histogram(alpha, bins, (0.0, a_hi)), histogram(mu, bins, (0.0, m_hi)))


@dataclass(frozen=True)
class FitReport:
    lpml: float
    aic: float
    bic: float
    m_posterior: dict
    nu_mean: float
    nu_lower: float
    nu_upper: float
    p_heavy: float
    p_finite_mean: float
    p_finite_variance: float
    cpo_likelihood: str = "marginal"
    zero_cpo_terms: int = 0
    retained: int = 0

    @property
    def m_mode(self) -> int:
        return max(self.m_posterior.items(), key=lambda kv: (kv[1], -kv[0]))[0]


def fit_report(trace: Trace, likelihood: str = "marginal") -> FitReport:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cpo, lpml = cpo_lpml(trace, likelihood)
    for w in caught:
        warnings.warn(w.message, w.category, stacklevel=2)
    aic, bic = posterior_ic(trace)
    nu_mean, nu_lo, nu_hi = nu_summary(trace)
    tails = tail_report(trace)
    return FitReport(
        lpml=lpml, aic=aic, bic=bic, m_posterior=m_posterior(trace),
        nu_mean=nu_mean, nu_lower=nu_lo, nu_upper=nu_hi,
        p_heavy=tails.p_heavy, p_finite_mean=tails.p_finite_mean,
        p_finite_variance=tails.p_finite_variance, cpo_likelihood=likelihood,
        zero_cpo_terms=int(np.count_nonzero(cpo == 0.0)), retained=trace.length,
    )
