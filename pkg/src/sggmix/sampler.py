"""Marginal MCMC for the normalised-stable mixture of SGG kernels.

One iteration runs, in order:

1. latent rates ``y_i | x_i, theta_i ~ Ga(gamma_i + alpha_i, x_i - mu_i + beta_i)``;
2. cluster reassignment of every observation against the existing
   clusters and ``r`` fresh auxiliary values drawn from the base measure;
3. random-walk Metropolis-Hastings refresh of each cluster's
   ``(mu, gamma, alpha, beta)``;
4. random-walk MH for the stable index ``nu`` (when it has a prior).

Random-walk widths are rescaled at the end of every batch of iterations
towards a target acceptance interval.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaln

from . import _backend
from .distributions import ParameterError, SggParams, rng_stream
from .stable_process import PartitionCounts

__all__ = [
    "GammaHyper",
    "BaseMeasure",
    "FixedNu",
    "BetaNu",
    "ChainConfig",
    "ClusterState",
    "AdaptState",
    "Trace",
    "FAMILIES",
    "init_state",
    "step_latents",
    "step_assignments",
    "step_unique_values",
    "step_nu",
    "nu_log_target",
    "unique_value_log_target",
    "adapt_tuning",
    "run_chain",
]

log = logging.getLogger(__name__)

FAMILIES = ("mu", "gamma", "alpha", "beta", "nu")
NU = 4
PARAM_FLOOR = 1e-8
INIT_REJECTIONS = 100


@dataclass(frozen=True)
class GammaHyper:
    shape: float
    rate: float

    def __post_init__(self):
        object.__setattr__(self, "shape", float(self.shape))
        object.__setattr__(self, "rate", float(self.rate))
        if not (self.shape > 0 and self.rate > 0 and math.isfinite(self.shape) and math.isfinite(self.rate)):
            raise ParameterError(f"gamma hyperparameters must be positive, got {self}")


def _half():
    return GammaHyper(0.5, 0.5)


@dataclass(frozen=True)
class BaseMeasure:
    """Independent gamma priors on the four kernel parameters."""

    mu: GammaHyper = field(default_factory=_half)
    gamma: GammaHyper = field(default_factory=_half)
    alpha: GammaHyper = field(default_factory=_half)
    beta: GammaHyper = field(default_factory=_half)

    def as_array(self) -> np.ndarray:
        return np.array([self.mu.shape, self.mu.rate, self.gamma.shape, self.gamma.rate,
                         self.alpha.shape, self.alpha.rate, self.beta.shape, self.beta.rate])

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """One ``(mu, gamma, alpha, beta)`` draw, in that order."""
        p = self.as_array()
        return np.array([float(rng.standard_gamma(p[2 * k])) / p[2 * k + 1] for k in range(4)])

    def sample_many(self, size: int, rng: np.random.Generator) -> np.ndarray:
        p = self.as_array()
        return np.column_stack([rng.standard_gamma(p[2 * k], size) / p[2 * k + 1] for k in range(4)])

    def logpdf(self, theta) -> float:
        p = self.as_array()
        out = 0.0
        for k in range(4):
            a, b, v = p[2 * k], p[2 * k + 1], float(theta[k])
            if v <= 0:
                return -math.inf if not (v == 0 and a < 1) else math.inf
            out += a * math.log(b) - float(gammaln(a)) + (a - 1) * math.log(v) - b * v
        return out


@dataclass(frozen=True)
class FixedNu:
    value: float

    def __post_init__(self):
        if not 0 < self.value < 1:
            raise ParameterError(f"fixed nu must lie in (0, 1), got {self.value}")


@dataclass(frozen=True)
class BetaNu:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ParameterError(f"beta prior parameters must be positive, got {self}")


@dataclass(frozen=True)
class ChainConfig:
    """Sampler, prior and adaptation settings.

    Defaults reproduce the simulation-study settings: 15,000 iterations,
    burn-in 1,000, thinning 4, batches of 50, target acceptance
    ``[0.3, 0.4]`` and ``Ga(1/2, 1/2)`` priors on every kernel parameter.
    """

    iterations: int = 15000
    burn_in: int = 1000
    thinning: int = 4
    r_aux: int = 3
    batch_size: int = 50
    target_rate_low: float = 0.3
    target_rate_high: float = 0.4
    base_measure: BaseMeasure = field(default_factory=BaseMeasure)
    nu_spec: FixedNu | BetaNu = field(default_factory=lambda: BetaNu(0.5, 0.5))
    seed: int = 0
    data_scale: float = 1.0
    initial_delta: float = 1.0
    reuse_aux: bool = False
    hastings_correction: bool = False
    adapt_after_burn_in: bool = True
    single_component: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ParameterError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ParameterError("need 0 <= burn_in < iterations")
        if self.thinning < 1 or self.r_aux < 1 or self.batch_size < 1:
            raise ParameterError("thinning, r_aux and batch_size must be positive")
        if not 0 < self.target_rate_low < self.target_rate_high < 1:
            raise ParameterError("need 0 < target_rate_low < target_rate_high < 1")
        if not (self.data_scale > 0 and math.isfinite(self.data_scale)):
            raise ParameterError("data_scale must be a positive finite number")
        if not self.initial_delta > 0:
            raise ParameterError("initial_delta must be positive")

    @property
    def retained(self) -> int:
        return (self.iterations - self.burn_in) // self.thinning

    def retained_iterations(self) -> np.ndarray:
        """1-based iteration numbers of the retained draws."""
        return self.burn_in + self.thinning * np.arange(1, self.retained + 1)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ClusterState:
    """Current partition, cluster parameters, latent rates and ``nu``.

    ``theta`` and ``sizes`` are capacity-``n`` buffers; rows ``[:m]`` are live.
    """

    assignment: np.ndarray
    theta: np.ndarray
    sizes: np.ndarray
    m: int
    latents: np.ndarray
    nu: float
    zero_weight_events: int = 0

    @property
    def unique_values(self) -> list[SggParams]:
        return [SggParams(*map(float, row)) for row in self.theta[: self.m]]

    @property
    def partition(self) -> PartitionCounts:
        return PartitionCounts(tuple(self.sizes[: self.m]))

    def observation_params(self) -> np.ndarray:
        return self.theta[self.assignment]

    def copy(self) -> ClusterState:
        return ClusterState(self.assignment.copy(), self.theta.copy(), self.sizes.copy(),
                            self.m, self.latents.copy(), self.nu, self.zero_weight_events)


@dataclass
class AdaptState:
    """Random-walk widths and per-batch acceptance counters.

    One width per family (``mu, gamma, alpha, beta, nu``), shared by all
    clusters.  ``batch`` is the 1-based index of the batch in progress.
    """

    delta: np.ndarray
    accepted: np.ndarray
    proposed: np.ndarray
    batch: int = 1
    low: float = 0.3
    high: float = 0.4
    history: list = field(default_factory=list)

    @classmethod
    def start(cls, initial: float = 1.0, low: float = 0.3, high: float = 0.4) -> AdaptState:
        return cls(np.full(5, float(initial)), np.zeros(5, dtype=np.int64),
                   np.zeros(5, dtype=np.int64), 1, low, high)


def adapt_tuning(adapt: AdaptState) -> AdaptState:
    """Close the current batch: rescale widths whose rate left ``[low, high]``.

    ``delta <- delta * 1.1**(-sqrt(b))`` below the interval and
    ``delta * 1.1**sqrt(b)`` above it.  Rates are pooled over every
    proposal of a family made during the batch.  Families with no
    proposals keep their width; their rate is recorded as NaN.
    """
    b = adapt.batch
    step = math.sqrt(b)
    for k in range(5):
        used = adapt.delta[k]
        if adapt.proposed[k] == 0:
            rate = math.nan
        else:
            rate = adapt.accepted[k] / adapt.proposed[k]
            if rate < adapt.low:
                adapt.delta[k] = used * 1.1 ** (-step)
            elif rate > adapt.high:
                adapt.delta[k] = used * 1.1 ** step
        adapt.history.append((b, FAMILIES[k], rate, float(used)))
    adapt.accepted[:] = 0
    adapt.proposed[:] = 0
    adapt.batch = b + 1
    return adapt


def _validate_data(data) -> np.ndarray:
    x = np.ascontiguousarray(data, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ParameterError("data must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(x)):
        raise ParameterError("data contain non-finite values")
    if np.any(x < 0):
        raise ParameterError("data must be nonnegative: the location prior lives on [0, inf)")
    return x


def init_state(data, cfg: ChainConfig, rng: np.random.Generator, kernels=None) -> ClusterState:
    """Every observation in its own cluster with parameters drawn from the base measure.

    The location of cluster ``i`` is redrawn until it falls below ``x_i``
    (at most 100 tries, then ``x_i * U(0, 1)``) so the likelihood is
    positive.  In single-component mode one shared cluster is drawn
    with location below ``min(x)``.
    """
    x = _validate_data(data)
    n = x.size
    g0 = cfg.base_measure
    theta = np.zeros((n, 4))
    sizes = np.zeros(n, dtype=np.int64)
    if cfg.single_component:
        theta[0] = _draw_below(float(x.min()), g0, rng)
        sizes[0] = n
        z = np.zeros(n, dtype=np.int64)
        m = 1
    else:
        for i in range(n):
            theta[i] = _draw_below(float(x[i]), g0, rng)
        sizes[:] = 1
        z = np.arange(n, dtype=np.int64)
        m = n
    if isinstance(cfg.nu_spec, FixedNu):
        nu = cfg.nu_spec.value
    else:
        nu = float(rng.beta(cfg.nu_spec.a, cfg.nu_spec.b))
        nu = min(max(nu, PARAM_FLOOR), 1.0 - PARAM_FLOOR)
    y = np.empty(n)
    (kernels or _backend.kernels).sweep_latents(x, y, z, theta, rng)
    return ClusterState(z, theta, sizes, m, y, nu)


def _draw_below(bound: float, g0: BaseMeasure, rng: np.random.Generator) -> np.ndarray:
    th = g0.sample(rng)
    for _ in range(INIT_REJECTIONS):
        if th[0] < bound:
            break
        th[0] = float(rng.standard_gamma(g0.mu.shape)) / g0.mu.rate
    else:
        th[0] = bound * float(rng.random())
    return th


def step_latents(state: ClusterState, data, rng: np.random.Generator, kernels=None) -> ClusterState:
    kernels = kernels or _backend.kernels
    kernels.sweep_latents(data, state.latents, state.assignment, state.theta, rng)
    return state


def step_assignments(state: ClusterState, data, cfg: ChainConfig, rng: np.random.Generator,
                     kernels=None) -> ClusterState:
    """Reassign every observation in turn (auxiliary-value scheme).

    Candidate weights are ``(n_j - nu) f(x_i, y_i | theta_j)`` for the
    existing clusters and ``(nu m_i / r) f(x_i, y_i | theta_aux)`` for the
    ``r`` auxiliary draws.  If every weight is zero the observation keeps
    its cluster and the event is counted.
    """
    kernels = kernels or _backend.kernels
    m, events = kernels.sweep_assignments(
        data, state.latents, state.assignment, state.theta, state.sizes, state.m,
        state.nu, cfg.r_aux, cfg.reuse_aux, cfg.base_measure.as_array(), rng)
    state.m = int(m)
    state.zero_weight_events += int(events)
    return state


def step_unique_values(state: ClusterState, data, cfg: ChainConfig, adapt: AdaptState,
                       rng: np.random.Generator, kernels=None) -> ClusterState:
    kernels = kernels or _backend.kernels
    acc = np.zeros(4, dtype=np.int64)
    prop = np.zeros(4, dtype=np.int64)
    kernels.sweep_unique(data, state.latents, state.assignment, state.theta, state.sizes,
                         state.m, np.ascontiguousarray(adapt.delta[:4]),
                         cfg.base_measure.as_array(), cfg.hastings_correction, PARAM_FLOOR,
                         acc, prop, rng)
    adapt.accepted[:4] += acc
    adapt.proposed[:4] += prop
    return state


def nu_log_target(nu: float, counts, a: float, b: float) -> float:
    """Unnormalised log posterior of ``nu`` given block sizes, under ``Be(a, b)``."""
    if not 0 < nu < 1:
        return -math.inf
    c = np.asarray(counts, dtype=float)
    m = c.size
    return float((a + m - 2) * math.log(nu) + (b - 1) * math.log1p(-nu)
                 + np.sum(gammaln(c - nu)) - m * gammaln(1.0 - nu))


def step_nu(state: ClusterState, cfg: ChainConfig, adapt: AdaptState,
            rng: np.random.Generator) -> ClusterState:
    """Random-walk MH for ``nu`` on ``(0, 1)``; a no-op when ``nu`` is fixed."""
    spec = cfg.nu_spec
    if isinstance(spec, FixedNu):
        return state
    counts = state.sizes[: state.m]
    delta = float(adapt.delta[NU])
    v = state.nu
    lo, hi = max(v - delta, 0.0), min(v + delta, 1.0)
    vp = lo + float(rng.random()) * (hi - lo)
    vp = min(max(vp, PARAM_FLOOR), 1.0 - PARAM_FLOOR)
    ua = float(rng.random())
    adapt.proposed[NU] += 1
    diff = nu_log_target(vp, counts, spec.a, spec.b) - nu_log_target(v, counts, spec.a, spec.b)
    if cfg.hastings_correction:
        lo2, hi2 = max(vp - delta, 0.0), min(vp + delta, 1.0)
        diff += math.log(hi - lo) - math.log(hi2 - lo2)
    if diff >= 0.0 or ua < math.exp(diff):
        state.nu = vp
        adapt.accepted[NU] += 1
    return state


def unique_value_log_target(theta, xs, ys, base_measure: BaseMeasure) -> float:
    """``log g0(theta) + sum_i log f(x_i, y_i | theta)`` for one cluster's members."""
    mu, g, a, b = map(float, theta)
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if np.any(x < mu):
        return -math.inf
    d = x - mu
    ll = (g * np.log(y) - gammaln(g) + (g - 1) * np.log(d) - y * d
          + a * math.log(b) - gammaln(a) + (a - 1) * np.log(y) - b * y)
    return base_measure.logpdf((mu, g, a, b)) + float(np.sum(ll))


@dataclass
class Trace:
    """Retained draws of one chain.

    Cluster-level draws are stored flat: iteration ``l`` owns rows
    ``offsets[l]:offsets[l+1]`` of ``cluster_theta``/``cluster_sizes``.
    ``assignment[l, i]`` indexes into that block.  ``loglik`` holds the
    augmented log-likelihood ``log f(x_i, y_i | theta_i)`` per retained
    iteration and observation.
    """

    data: np.ndarray
    config: ChainConfig
    m: np.ndarray
    nu: np.ndarray
    offsets: np.ndarray
    cluster_theta: np.ndarray
    cluster_sizes: np.ndarray
    assignment: np.ndarray
    latents: np.ndarray
    loglik: np.ndarray
    acceptance: list
    zero_weight_events: int = 0
    backend: str = ""

    @property
    def n(self) -> int:
        return int(self.data.size)

    @property
    def length(self) -> int:
        return int(self.m.size)

    def clusters(self, l: int) -> tuple[np.ndarray, np.ndarray]:
        if not -self.length <= l < self.length:
            raise IndexError(f"retained draw {l} out of range")
        l %= self.length
        s, e = self.offsets[l], self.offsets[l + 1]
        return self.cluster_theta[s:e], self.cluster_sizes[s:e]

    def observation_params(self) -> np.ndarray:
        """Per-iteration, per-observation parameters, shape ``(L, n, 4)``."""
        rows = self.offsets[:-1, None] + self.assignment
        return self.cluster_theta[rows]


def _canonical(state: ClusterState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # relabel clusters by first appearance so stored traces do not depend on slot order
    m = state.m
    first = np.full(m, state.assignment.size, dtype=np.int64)
    np.minimum.at(first, state.assignment, np.arange(state.assignment.size))
    order = np.argsort(first, kind="stable")
    relabel = np.empty(m, dtype=np.int64)
    relabel[order] = np.arange(m)
    return relabel[state.assignment], state.theta[:m][order], state.sizes[:m][order]


def run_chain(data, cfg: ChainConfig, *, kernels=None,
              callback: Callable[[int, ClusterState], None] | None = None) -> Trace:
    """Run one chain and return its retained draws.

    Data are divided by ``cfg.data_scale`` first.  Fully deterministic
    given ``cfg.seed``.
    """
    kernels = kernels or _backend.kernels
    x = _validate_data(data) / cfg.data_scale
    n = x.size
    rng = rng_stream(cfg.seed)
    state = init_state(x, cfg, rng, kernels)
    adapt = AdaptState.start(cfg.initial_delta, cfg.target_rate_low, cfg.target_rate_high)

    L = cfg.retained
    m_tr = np.zeros(L, dtype=np.int64)
    nu_tr = np.zeros(L)
    offsets = np.zeros(L + 1, dtype=np.int64)
    thetas, sizes = [], []
    z_tr = np.zeros((L, n), dtype=np.int64)
    y_tr = np.zeros((L, n))
    ll_tr = np.zeros((L, n))
    adapting = True
    l = 0
    for t in range(1, cfg.iterations + 1):
        step_latents(state, x, rng, kernels)
        if not cfg.single_component:
            step_assignments(state, x, cfg, rng, kernels)
        step_unique_values(state, x, cfg, adapt, rng, kernels)
        if not cfg.single_component:
            step_nu(state, cfg, adapt, rng)
        if t % cfg.batch_size == 0:
            if adapting:
                adapt_tuning(adapt)
            else:
                _record_frozen(adapt)
        if not cfg.adapt_after_burn_in and t == cfg.burn_in:
            adapting = False
        if t > cfg.burn_in and (t - cfg.burn_in) % cfg.thinning == 0 and l < L:
            z, th, sz = _canonical(state)
            m_tr[l] = state.m
            nu_tr[l] = state.nu
            offsets[l + 1] = offsets[l] + state.m
            thetas.append(th.copy())
            sizes.append(sz.copy())
            z_tr[l] = z
            y_tr[l] = state.latents
            kernels.aug_loglik(x, state.latents, state.assignment, state.theta, ll_tr[l])
            l += 1
        if callback is not None:
            callback(t, state)

    rate = state.zero_weight_events / (cfg.iterations * n)
    if rate > 0.01:
        warnings.warn(f"{rate:.2%} of reassignment steps had no candidate with positive "
                      "likelihood; assignments were kept", RuntimeWarning, stacklevel=2)
    return Trace(
        data=x, config=cfg, m=m_tr, nu=nu_tr, offsets=offsets,
        cluster_theta=np.concatenate(thetas) if thetas else np.zeros((0, 4)),
        cluster_sizes=np.concatenate(sizes) if sizes else np.zeros(0, dtype=np.int64),
        assignment=z_tr, latents=y_tr, loglik=ll_tr, acceptance=list(adapt.history),
        zero_weight_events=state.zero_weight_events, backend=kernels.NAME,
    )


def _record_frozen(adapt: AdaptState) -> None:
    # widths frozen: keep the acceptance record, leave delta alone
    b = adapt.batch
    for k in range(5):
        rate = adapt.accepted[k] / adapt.proposed[k] if adapt.proposed[k] else math.nan
        adapt.history.append((b, FAMILIES[k], rate, float(adapt.delta[k])))
    adapt.accepted[:] = 0
    adapt.proposed[:] = 0
    adapt.batch = b + 1
