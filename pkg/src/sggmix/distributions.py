"""Shifted gamma-gamma (SGG) kernel and its GPD / GG special cases.

``SGG(mu, gamma, alpha, beta)`` is the law of ``X`` when
``X - mu | Y ~ Ga(gamma, Y)`` and ``Y ~ Ga(alpha, beta)`` (shape/rate).
Its density is

    f(x) = beta^alpha Gamma(alpha+gamma) / (Gamma(alpha) Gamma(gamma))
           (x-mu)^(gamma-1) / (beta + x - mu)^(alpha+gamma),   x >= mu

``SGG(0, g, a, b)`` is the gamma-gamma law ``GG(g, a, b)`` and
``SGG(mu, 1, a, b)`` is the generalised Pareto law ``GPD(mu, b/a, 1/a)``.

All densities are evaluated in log space through ``gammaln``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "ParameterError",
    "SggParams",
    "GpdParams",
    "RngStream",
    "rng_stream",
    "sgg_logpdf",
    "sgg_pdf",
    "gpd_logpdf",
    "gpd_pdf",
    "gg_logpdf",
    "sgg_sample",
    "sgg_mean",
    "sgg_variance",
    "gamma_sample",
    "beta_sample",
    "latent_conditional_sample",
]

RngStream = np.random.Generator


class ParameterError(ValueError):
    """Raised when distribution parameters fall outside their domain."""


def rng_stream(seed: int) -> np.random.Generator:
    """Seedable random stream; equal seeds give identical draw sequences."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def _check_positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0):
        raise ParameterError(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class SggParams:
    """Kernel parameter ``(mu, gamma, alpha, beta)``: location, shape, tail, scale."""

    mu: float
    gamma: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and self.mu >= 0):
            raise ParameterError(f"mu must be finite and >= 0, got {self.mu!r}")
        _check_positive("gamma", self.gamma)
        _check_positive("alpha", self.alpha)
        _check_positive("beta", self.beta)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.mu, self.gamma, self.alpha, self.beta)

    def to_gpd(self) -> GpdParams:
        """GPD equivalent; only defined for ``gamma == 1``."""
        if self.gamma != 1.0:
            raise ParameterError("SGG reduces to a GPD only when gamma == 1")
        return GpdParams(self.mu, self.beta / self.alpha, 1.0 / self.alpha)


@dataclass(frozen=True)
class GpdParams:
    """Generalised Pareto parameters with nonnegative tail index ``xi``."""

    mu: float
    sigma: float
    xi: float

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ParameterError(f"mu must be finite, got {self.mu!r}")
        _check_positive("sigma", self.sigma)
        if not (math.isfinite(self.xi) and self.xi >= 0):
            raise ParameterError(f"xi must be finite and >= 0, got {self.xi!r}")


def sgg_logpdf(x, p: SggParams):
    """Log-density of ``SGG(p)`` at ``x`` (scalar or array).

    Returns ``-inf`` below the support.  At ``x == mu`` the value is
    ``-inf`` for ``gamma > 1``, the finite limit ``log(alpha/beta)`` for
    ``gamma == 1`` and ``+inf`` for ``gamma < 1``.
    """
    mu, g, a, b = p.mu, p.gamma, p.alpha, p.beta
    const = a * math.log(b) + float(gammaln(a + g) - gammaln(a) - gammaln(g))
    xa = np.asarray(x, dtype=float)
    d = xa - mu
    with np.errstate(divide="ignore", invalid="ignore"):
        if g == 1.0:
            body = -(a + g) * np.log(b + d)
        else:
            body = (g - 1.0) * np.log(d) - (a + g) * np.log(b + d)
        out = np.where(d < 0, -np.inf, const + body)
    if np.ndim(out) == 0:
        return float(out)
    return out


def sgg_pdf(x, p: SggParams):
    return np.exp(sgg_logpdf(x, p))


def gg_logpdf(x, gamma: float, alpha: float, beta: float):
    """Gamma-gamma log-density, i.e. the SGG with zero location."""
    return sgg_logpdf(x, SggParams(0.0, gamma, alpha, beta))


def gpd_logpdf(x, p: GpdParams):
    """Generalised Pareto log-density; ``xi == 0`` is the shifted exponential."""
    xa = np.asarray(x, dtype=float)
    z = (xa - p.mu) / p.sigma
    with np.errstate(divide="ignore", invalid="ignore"):
        if p.xi == 0.0:
            body = -z
        else:
            body = -(1.0 + 1.0 / p.xi) * np.log1p(p.xi * z)
        out = np.where(z < 0, -np.inf, body - math.log(p.sigma))
    if np.ndim(out) == 0:
        return float(out)
    return out


def gpd_pdf(x, p: GpdParams):
    return np.exp(gpd_logpdf(x, p))


def sgg_mean(p: SggParams) -> float:
    """``mu + beta*gamma/(alpha-1)``; infinite when ``alpha <= 1``."""
    if p.alpha <= 1.0:
        return math.inf
    return p.mu + p.beta * p.gamma / (p.alpha - 1.0)


def sgg_variance(p: SggParams) -> float:
    """``beta^2 gamma (gamma+alpha-1) / ((alpha-1)^2 (alpha-2))`` for ``alpha > 2``."""
    if p.alpha <= 2.0:
        return math.inf
    a, g, b = p.alpha, p.gamma, p.beta
    return b * b * g * (g + a - 1.0) / ((a - 1.0) ** 2 * (a - 2.0))


def gamma_sample(shape: float, rate: float, rng: np.random.Generator, size=None):
    """Gamma draw(s) in the shape/rate parametrisation.

    Delegates to numpy's C sampler, which is valid for ``shape < 1``.
    """
    _check_positive("shape", shape)
    _check_positive("rate", rate)
    return rng.standard_gamma(shape, size) / rate


def beta_sample(a: float, b: float, rng: np.random.Generator, size=None):
    _check_positive("a", a)
    _check_positive("b", b)
    return rng.beta(a, b, size)


def sgg_sample(p: SggParams, rng: np.random.Generator, size=None):
    """Draw from ``SGG(p)`` through the gamma mixture representation."""
    y = rng.standard_gamma(p.alpha, size) / p.beta
    return p.mu + rng.standard_gamma(p.gamma, size) / y


def latent_conditional_sample(x: float, p: SggParams, rng: np.random.Generator) -> float:
    """Draw the latent rate ``y | x ~ Ga(gamma + alpha, x - mu + beta)``."""
    if not x >= p.mu:
        raise ParameterError(f"x={x!r} lies below the support start mu={p.mu!r}")
    return rng.standard_gamma(p.gamma + p.alpha) / (x - p.mu + p.beta)
