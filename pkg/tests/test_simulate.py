import math

import numpy as np
import pytest
from scipy import integrate, stats

from sggmix.distributions import ParameterError, SggParams, rng_stream, sgg_pdf, sgg_sample
from sggmix.simulate import (
    MixtureSpec,
    mixture_pdf,
    read_mixture_spec,
    sample_mixture,
    simulation_study_spec,
)


def test_spec_validation():
    with pytest.raises(ParameterError):
        MixtureSpec(((0.5, SggParams(0, 1, 1, 1)), (0.4, SggParams(0, 1, 1, 1))))
    with pytest.raises(ParameterError):
        MixtureSpec(())
    with pytest.raises(ParameterError):
        MixtureSpec(((1.0, (0, 1, 1, 1)),))


def test_single_component_equals_sgg_sample():
    p = SggParams(1.0, 2.0, 3.0, 1.0)
    x, labels = sample_mixture(MixtureSpec(((1.0, p),)), 1000, rng_stream(4))
    assert np.all(labels == 0)
    # one uniform per draw for the component choice, then the SGG draws
    rng = rng_stream(4)
    rng.random(1000)
    assert np.array_equal(x, sgg_sample(p, rng, size=1000))


def test_component_two_never_below_five():
    x, labels = sample_mixture(simulation_study_spec(), 1_000_000, rng_stream(0))
    assert np.sum(x[labels == 1] < 5.0) == 0
    frac = np.mean(labels == 0)
    assert abs(frac - 0.7) < 4 * math.sqrt(0.21 / labels.size)


def test_component_one_mean():
    x, labels = sample_mixture(simulation_study_spec(), 400_000, rng_stream(1))
    c1 = x[labels == 0]
    # SGG(0,3,3,2): mean 2*3/2 = 3, variance 4*3*5/(4*1) = 15
    assert abs(c1.mean() - 3.0) < 3 * math.sqrt(15.0 / c1.size)


def test_mixture_pdf():
    spec = simulation_study_spec()
    assert mixture_pdf(spec, -0.1) == 0.0
    p = SggParams(2.0, 1.5, 2.0, 1.0)
    x = np.linspace(2.5, 9, 7)
    assert np.allclose(mixture_pdf(MixtureSpec(((1.0, p),)), x), sgg_pdf(x, p), rtol=1e-15)
    # pole-free pieces: split at the second component's location
    f = lambda t: mixture_pdf(spec, t)
    mass = (integrate.quad(f, 0, 5, limit=200, epsabs=1e-12)[0]
            + integrate.quad(f, 5, 100, limit=200, epsabs=1e-12)[0]
            + integrate.quad(f, 100, np.inf, limit=200, epsabs=1e-12)[0])
    assert mass == pytest.approx(1.0, abs=1e-6)


def test_ks_against_mixture_cdf():
    spec = simulation_study_spec()
    x, _ = sample_mixture(spec, 100_000, rng_stream(2))

    def cdf(t):
        t = np.atleast_1d(t)
        out = np.zeros_like(t, dtype=float)
        for w, p in spec.components:
            d = np.clip(t - p.mu, 0, None)
            out += w * stats.beta(p.gamma, p.alpha).cdf(d / (p.beta + d))
        return out

    # cross-check the closed-form CDF against quadrature of mixture_pdf at a few points
    for q in (1.0, 4.0, 7.5):
        val = (integrate.quad(lambda t: mixture_pdf(spec, t), 0, min(q, 5), limit=200)[0]
               + (integrate.quad(lambda t: mixture_pdf(spec, t), 5, q, limit=200)[0] if q > 5 else 0))
        assert val == pytest.approx(cdf(q)[0], abs=1e-8)
    res = stats.kstest(x, cdf)
    crit = 1.628 / math.sqrt(x.size)  # 1% asymptotic critical value
    assert res.statistic < crit


def test_read_mixture_spec():
    spec = read_mixture_spec(["# weight mu gamma alpha beta", "0.7, 0, 3, 3, 2", "0.3 5 1 0.5 3", ""])
    assert spec == simulation_study_spec()
    with pytest.raises(ParameterError):
        read_mixture_spec(["1 0 1 1"])
    with pytest.raises(ParameterError):
        read_mixture_spec(["1 0 one 1 1"])
    with pytest.raises(ParameterError):
        read_mixture_spec(["1 0 1 1 inf"])


def test_n_must_be_positive():
    with pytest.raises(ParameterError):
        sample_mixture(simulation_study_spec(), 0, rng_stream(0))
