import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import eppf_direct, restricted_growth, set_partitions
from sggmix.distributions import ParameterError, rng_stream
from sggmix.stable_process import (
    PartitionCounts,
    check_nu,
    eppf_log,
    normalised_form_weights,
    prior_partition_labels,
    prior_partition_sample,
    stick_breaking_weights,
    urn_predictive_weights,
)


def test_enumerator_counts_bell_numbers():
    assert [sum(1 for _ in set_partitions(n)) for n in range(1, 8)] == [1, 2, 5, 15, 52, 203, 877]


@pytest.mark.parametrize("nu", [0.1, 0.5, 0.9])
def test_eppf_sums_to_one(nu):
    for n in range(1, 8):
        total = sum(math.exp(eppf_log([len(b) for b in p], nu)) for p in set_partitions(n))
        assert total == pytest.approx(1.0, abs=1e-12)


def test_eppf_matches_product_form():
    for counts in [(1,), (3,), (2, 1), (4, 2, 1), (1, 1, 1, 1), (5, 3)]:
        for nu in (0.05, 0.3, 0.77):
            assert math.exp(eppf_log(counts, nu)) == pytest.approx(eppf_direct(counts, nu), rel=1e-12)


def test_eppf_two_items():
    # P(two items share a block) = 1 - nu
    assert math.exp(eppf_log((2,), 0.3)) == pytest.approx(0.7)
    assert math.exp(eppf_log((1, 1), 0.3)) == pytest.approx(0.3)


def test_eppf_is_symmetric_in_blocks():
    assert eppf_log((3, 1, 2), 0.4) == pytest.approx(eppf_log((1, 2, 3), 0.4), rel=1e-15)


def test_urn_weights():
    new, old = urn_predictive_weights((3, 1), 0.25)
    assert new == pytest.approx(0.25 * 2 / 4)
    assert old == pytest.approx([2.75 / 4, 0.75 / 4])
    assert new + old.sum() == pytest.approx(1.0)


def test_urn_is_eppf_ratio():
    counts, nu = (3, 2, 1), 0.35
    new, old = urn_predictive_weights(counts, nu)
    base = eppf_log(counts, nu)
    assert new == pytest.approx(math.exp(eppf_log(counts + (1,), nu) - base), rel=1e-12)
    for j in range(3):
        bumped = list(counts)
        bumped[j] += 1
        assert old[j] == pytest.approx(math.exp(eppf_log(bumped, nu) - base), rel=1e-12)


@pytest.mark.parametrize("nu", [0.0, 1.0, -0.2, 1.5, math.nan])
def test_nu_domain(nu):
    with pytest.raises(ParameterError):
        check_nu(nu)
    with pytest.raises(ParameterError):
        eppf_log((1, 2), nu)


def test_partition_counts_validation():
    pc = PartitionCounts((3, 1))
    assert (pc.n, pc.m) == (4, 2)
    with pytest.raises(ParameterError):
        PartitionCounts(())
    with pytest.raises(ParameterError):
        PartitionCounts((2, 0))


def test_urn_frequencies_match_eppf():
    n, nu, reps = 4, 0.4, 200_000
    labels = prior_partition_labels(n, nu, rng_stream(1), size=reps)
    freq = Counter(map(tuple, labels))
    for part in set_partitions(n):
        p = math.exp(eppf_log([len(b) for b in part], nu))
        key = restricted_growth(part, n)
        se = math.sqrt(p * (1 - p) / reps)
        assert abs(freq[key] / reps - p) < 4 * se


def test_single_partition_sample():
    pc = prior_partition_sample(10, 0.5, rng_stream(2))
    assert pc.n == 10
    labels = prior_partition_labels(10, 0.5, rng_stream(2))
    assert labels[0] == 0 and all(labels[i] <= labels[:i].max() + 1 for i in range(1, 10))


def test_expected_number_of_blocks():
    # E[m] for n=5 computed from the EPPF over all 52 partitions
    n, nu = 5, 0.6
    exact = sum(len(p) * math.exp(eppf_log([len(b) for b in p], nu)) for p in set_partitions(n))
    labels = prior_partition_labels(n, nu, rng_stream(9), size=100_000)
    m = labels.max(axis=1) + 1
    assert abs(m.mean() - exact) < 4 * m.std() / math.sqrt(m.size)


def test_stick_breaking_weights_sum_and_residual():
    w, res = stick_breaking_weights(0.3, 50, rng_stream(4))
    assert np.all(w >= 0)
    assert w.sum() + res == pytest.approx(1.0, abs=1e-12)


def test_stick_breaking_and_normalised_form_agree():
    # E[sum_j w_j^2] = P(two draws tie) = 1 - nu under both constructions
    nu, reps = 0.4, 4000
    rng = rng_stream(6)
    sb = np.array([np.sum(stick_breaking_weights(nu, 2000, rng)[0] ** 2) for _ in range(reps)])
    nf = np.array([np.sum(np.sort(normalised_form_weights(nu, 2000, rng)) ** 2) for _ in range(reps)])
    for v in (sb, nf):
        assert abs(v.mean() - (1 - nu)) < 4 * v.std() / math.sqrt(reps) + 2e-3
    assert abs(sb.mean() - nf.mean()) < 4 * math.hypot(sb.std(), nf.std()) / math.sqrt(reps) + 2e-3


def test_stick_breaking_first_weight_is_beta():
    rng = rng_stream(10)
    v = np.array([stick_breaking_weights(0.3, 1, rng)[0][0] for _ in range(20_000)])
    assert v.mean() == pytest.approx(0.7 / (0.7 + 0.3), abs=0.01)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 30), min_size=1, max_size=8), st.floats(0.01, 0.99))
def test_urn_weights_are_a_distribution(counts, nu):
    new, old = urn_predictive_weights(counts, nu)
    assert new > 0 and np.all(old > 0)
    assert new + old.sum() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 12), min_size=1, max_size=6), st.floats(0.01, 0.99))
def test_eppf_consistency_under_addition(counts, nu):
    # marginalising item n+1 out of the (n+1)-item EPPF recovers the n-item EPPF
    base = eppf_log(counts, nu)
    total = math.exp(eppf_log(counts + [1], nu) - base)
    for j in range(len(counts)):
        bumped = list(counts)
        bumped[j] += 1
        total += math.exp(eppf_log(bumped, nu) - base)
    assert total == pytest.approx(1.0, abs=1e-10)
