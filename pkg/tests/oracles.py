"""Independent reference computations shared by the test modules."""

import math

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from sggmix.distributions import SggParams, sgg_pdf


def sgg_quad_mass(p: SggParams) -> float:
    # near mu the (x-mu)^(gamma-1) factor goes to QUADPACK's algebraic weight,
    # which integrates the pole for gamma < 1 exactly; the tail is a plain quad
    mid = p.mu + p.beta
    const = math.exp(p.alpha * math.log(p.beta) + gammaln(p.alpha + p.gamma)
                     - gammaln(p.alpha) - gammaln(p.gamma))
    smooth = lambda x: const * (p.beta + x - p.mu) ** (-(p.alpha + p.gamma))
    a, _ = integrate.quad(smooth, p.mu, mid, weight="alg", wvar=(p.gamma - 1.0, 0.0),
                          epsabs=1e-13, epsrel=1e-12)
    f = lambda x: float(sgg_pdf(x, p))
    b, _ = integrate.quad(f, mid, np.inf, limit=200, epsabs=1e-13, epsrel=1e-12)
    return a + b


def set_partitions(n):
    """Every set partition of ``range(n)`` as a list of blocks (brute force)."""
    if n == 0:
        yield []
        return
    for part in set_partitions(n - 1):
        for j in range(len(part)):
            yield part[:j] + [part[j] + [n - 1]] + part[j + 1:]
        yield part + [[n - 1]]


def restricted_growth(part, n):
    """Canonical label tuple of a partition: blocks numbered by first element."""
    labels = [0] * n
    for j, block in enumerate(sorted(part, key=min)):
        for i in block:
            labels[i] = j
    return tuple(labels)


def eppf_direct(counts, nu):
    """Stable EPPF from its product form, without log-gamma."""
    m = len(counts)
    n = sum(counts)
    num = math.factorial(m - 1) * nu ** (m - 1)
    for c in counts:
        # (1 - nu)_(c - 1) rising factorial
        r = 1.0
        for k in range(1, c):
            r *= k - nu
        num *= r
    return num / math.factorial(n - 1)


def nu_posterior_moments(counts, a, b):
    """Mean and variance of nu given block sizes under a Be(a, b) prior, by quadrature."""
    # algebraic end-point weights absorb the Be(a, b) singularities
    def body(v):
        return eppf_direct(counts, v)
    w = (a - 1.0, b - 1.0)
    z, _ = integrate.quad(body, 0, 1, weight="alg", wvar=w, epsabs=1e-14, epsrel=1e-12)
    m1, _ = integrate.quad(lambda v: v * body(v), 0, 1, weight="alg", wvar=w, epsabs=1e-14, epsrel=1e-12)
    m2, _ = integrate.quad(lambda v: v * v * body(v), 0, 1, weight="alg", wvar=w, epsabs=1e-14, epsrel=1e-12)
    mean = m1 / z
    return mean, m2 / z - mean * mean


def batch_means_se(draws, batches=50):
    """Standard error of the mean of a correlated sequence by non-overlapping batch means."""
    draws = np.asarray(draws, dtype=float)
    k = draws.size // batches
    means = draws[: k * batches].reshape(batches, k).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(batches))


def run_nu_chain(counts, iterations, *, hastings=True, delta=0.3, seed=0, a=0.5, b=0.5):
    """Run only the stable-index MH step with the partition and kernels frozen."""
    from sggmix.distributions import rng_stream
    from sggmix.sampler import AdaptState, BetaNu, ChainConfig, ClusterState, step_nu

    n, m = sum(counts), len(counts)
    sizes = np.zeros(n, dtype=np.int64)
    sizes[:m] = counts
    state = ClusterState(np.zeros(n, dtype=np.int64), np.zeros((n, 4)), sizes, m, np.ones(n), 0.5)
    cfg = ChainConfig(nu_spec=BetaNu(a, b), hastings_correction=hastings)
    adapt = AdaptState.start(delta)
    rng = rng_stream(seed)
    out = np.empty(iterations)
    for t in range(iterations):
        step_nu(state, cfg, adapt, rng)
        out[t] = state.nu
    return out
