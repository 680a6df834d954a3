"""Normalised stable process: weights, Polya urn and partition probabilities.

The sampler only ever touches the marginal quantities (the urn and the
EPPF).  The two weight constructions are kept for prior simulation and for
cross-checking each other in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .distributions import ParameterError

__all__ = [
    "PartitionCounts",
    "check_nu",
    "urn_predictive_weights",
    "eppf_log",
    "stick_breaking_weights",
    "normalised_form_weights",
    "prior_partition_sample",
    "prior_partition_labels",
]


def check_nu(nu: float) -> float:
    nu = float(nu)
    if not 0.0 < nu < 1.0:
        raise ParameterError(f"stable index nu must lie in (0, 1), got {nu!r}")
    return nu


@dataclass(frozen=True)
class PartitionCounts:
    """Block sizes ``n_1*, ..., n_m*`` of a partition of ``n`` items."""

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if not counts:
            raise ParameterError("a partition needs at least one block")
        if min(counts) < 1:
            raise ParameterError(f"block sizes must be >= 1, got {counts}")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def m(self) -> int:
        return len(self.counts)


def _as_counts(pc) -> tuple[int, ...]:
    if isinstance(pc, PartitionCounts):
        return pc.counts
    return PartitionCounts(tuple(pc)).counts


def urn_predictive_weights(sizes_excluding_i, nu: float) -> tuple[float, np.ndarray]:
    """Predictive weights for one item given the other ``n - 1`` items.

    Returns ``(new_weight, existing_weights)`` where the new-block weight is
    ``nu * m / (n - 1)`` and block ``j`` gets ``(n_j - nu) / (n - 1)``.
    """
    nu = check_nu(nu)
    counts = np.asarray(_as_counts(sizes_excluding_i), dtype=float)
    total = counts.sum()
    new = nu * len(counts) / total
    return new, (counts - nu) / total


def eppf_log(pc, nu: float) -> float:
    """Log probability of a specific partition with block sizes ``pc``.

    ``(m-1)!/Gamma(n) * nu^(m-1) * prod_j Gamma(n_j - nu)/Gamma(1 - nu)``.
    """
    nu = check_nu(nu)
    counts = np.asarray(_as_counts(pc), dtype=float)
    m = len(counts)
    n = counts.sum()
    return float(
        gammaln(m) - gammaln(n) + (m - 1) * math.log(nu)
        + np.sum(gammaln(counts - nu)) - m * gammaln(1.0 - nu)
    )


def stick_breaking_weights(nu: float, truncation: int, rng: np.random.Generator):
    """First ``truncation`` stick-breaking weights with ``V_j ~ Be(1-nu, j*nu)``.

    Returns ``(weights, residual)`` with ``residual = 1 - sum(weights)``.
    """
    nu = check_nu(nu)
    if truncation < 1:
        raise ParameterError("truncation must be >= 1")
    j = np.arange(1, truncation + 1)
    v = rng.beta(1.0 - nu, j * nu)
    remaining = np.concatenate(([1.0], np.cumprod(1.0 - v)[:-1]))
    w = v * remaining
    return w, float(remaining[-1] * (1.0 - v[-1]))


def normalised_form_weights(nu: float, truncation: int, rng: np.random.Generator) -> np.ndarray:
    """Weights ``U_j^(-1/nu) / sum_k U_k^(-1/nu)`` with ``U_j`` unit-rate arrival times.

    Truncated at ``truncation`` terms and renormalised, so only an
    approximation of the infinite sequence; used for test cross-checks.
    """
    nu = check_nu(nu)
    if truncation < 1:
        raise ParameterError("truncation must be >= 1")
    u = np.cumsum(rng.standard_exponential(truncation))
    logw = -np.log(u) / nu
    w = np.exp(logw - logw.max())
    return w / w.sum()


def prior_partition_labels(n: int, nu: float, rng: np.random.Generator, size: int | None = None):
    """Seat ``n`` items sequentially by the urn; returns block labels.

    Labels are in order of first appearance (a restricted growth string),
    so they identify the set partition uniquely.  With ``size`` given,
    ``size`` independent partitions are simulated at once, shape ``(size, n)``.
    """
    nu = check_nu(nu)
    if n < 1:
        raise ParameterError("n must be >= 1")
    single = size is None
    reps = 1 if single else int(size)
    labels = np.zeros((reps, n), dtype=np.int64)
    counts = np.zeros((reps, n), dtype=float)
    counts[:, 0] = 1.0
    m = np.ones(reps, dtype=np.int64)
    rows = np.arange(reps)
    for t in range(1, n):
        # unnormalised: block j -> n_j - nu (occupied only), new -> nu * m
        occupied = np.arange(n)[None, :] < m[:, None]
        w = np.where(occupied, counts - nu, 0.0)
        cum = np.cumsum(w, axis=1)
        u = rng.random(reps) * t
        choice = np.sum(cum <= u[:, None], axis=1)
        choice = np.minimum(choice, m)  # past every occupied block -> new block
        labels[:, t] = choice
        counts[rows, choice] += 1.0
        m += choice == m
    return labels[0] if single else labels


def prior_partition_sample(n: int, nu: float, rng: np.random.Generator) -> PartitionCounts:
    """Partition of ``n`` items drawn from the prior by sequential urn draws."""
    labels = prior_partition_labels(n, nu, rng)
    return PartitionCounts(tuple(np.bincount(labels)))
