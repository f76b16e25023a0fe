# tests/unit/test_orbit.py

import numpy as np
import pytest

from src.detection.oracles import brute_force_glrt, brute_force_mlr, labeled_type_probs, sigma_invariance_gap
from src.detection.orbit import allocations, count_allocations, orbit_log_table, symmetrized_log_measure
from src.detection.statistics import glrt, log_mlr, max_log_likelihood, mlr
from src.errors import InvalidProfileError, UndefinedRatioError
from src.probability.distributions import Dist, Profile
from src.probability.types import CompositeType, type_list


def _random_profile(rng, nu, d=2):
    K = len(nu)
    return Profile.from_counts([Dist(p) for p in rng.dirichlet(np.ones(d), size=K)],
                               [Dist(p) for p in rng.dirichlet(np.ones(d), size=K)], nu)


def test_single_group_reduces_to_type_class():
    p = 0.35
    profile = Profile.from_counts([Dist.bernoulli(p)], [Dist.bernoulli(0.5)], (2,))
    value = symmetrized_log_measure(0, CompositeType((1, 1)), profile)
    assert value == pytest.approx(np.log2(2 * p * (1 - p)))


def test_two_singleton_groups():
    a, b = 0.3, 0.7
    profile = Profile.from_counts([Dist.bernoulli(a), Dist.bernoulli(b)], [Dist.bernoulli(0.5)] * 2, (1, 1))
    value = symmetrized_log_measure(0, CompositeType((1, 1)), profile)
    assert value == pytest.approx(np.log2(a * (1 - b) + b * (1 - a)))


@pytest.mark.parametrize("nu,d", [((2, 1), 2), ((2, 2), 3), ((1, 2, 1), 2)])
def test_orbit_table_matches_dp_and_brute_force(nu, d):
    rng = np.random.default_rng(sum(nu) * 10 + d)
    profile = _random_profile(rng, nu, d)
    n = sum(nu)
    for theta in (0, 1):
        table = orbit_log_table(theta, profile)
        dp = np.array([symmetrized_log_measure(theta, CompositeType(t), profile) for t in type_list(n, d)])
        np.testing.assert_allclose(table, dp, atol=1e-10)
        labeling = tuple(k for k, m in enumerate(nu) for _ in range(m))
        brute = labeled_type_probs(theta, profile, labeling)
        np.testing.assert_allclose(np.exp2(table), brute, atol=1e-12)
        assert float(np.exp2(table).sum()) == pytest.approx(1.0)


def test_labeling_invariance():
    rng = np.random.default_rng(4)
    profile = _random_profile(rng, (2, 2))
    assert sigma_invariance_gap(0, profile) <= 1e-12
    assert sigma_invariance_gap(1, profile) <= 1e-12


def test_allocation_counting():
    assert count_allocations((2, 1), (1, 2)) == len(list(allocations((2, 1), (1, 2))))
    assert count_allocations((3, 2, 1), (2, 2, 2)) == len(list(allocations((3, 2, 1), (2, 2, 2))))
    assert count_allocations((2, 0), (1, 2)) == 0


def test_orbit_needs_counts(binary_profile):
    with pytest.raises(InvalidProfileError):
        orbit_log_table(0, binary_profile)


def test_mlr_two_labelings():
    p0 = [Dist.bernoulli(0.3), Dist.bernoulli(0.6)]
    p1 = [Dist.bernoulli(0.7), Dist.bernoulli(0.2)]
    profile = Profile.from_counts(p0, p1, (1, 1))

    def pair(dists):
        return dists[0].p[0] * dists[1].p[1] + dists[0].p[1] * dists[1].p[0]

    assert mlr(CompositeType((1, 1)), profile) == pytest.approx(pair(p1) / pair(p0))


def test_single_sensor_mlr():
    profile = Profile.from_counts([Dist([0.2, 0.8])], [Dist([0.6, 0.4])], (1,))
    assert mlr(CompositeType((1, 0)), profile) == pytest.approx(3.0)
    assert glrt(CompositeType((1, 0)), profile) == pytest.approx(3.0)


def test_mlr_and_glrt_match_brute_force():
    rng = np.random.default_rng(11)
    profile = _random_profile(rng, (3, 2))
    for seq in ([0, 0, 1, 1, 1], [1, 0, 0, 0, 0], [1, 1, 1, 1, 0]):
        V = CompositeType.of_sequence(seq, 2)
        assert mlr(V, profile) == pytest.approx(brute_force_mlr(seq, profile), rel=1e-10)
        assert glrt(V, profile) == pytest.approx(brute_force_glrt(seq, profile), rel=1e-10)


def test_glrt_equals_mlr_for_one_group():
    profile = Profile.from_counts([Dist([0.5, 0.3, 0.2])], [Dist([0.2, 0.3, 0.5])], (4,))
    V = CompositeType((1, 1, 2))
    assert glrt(V, profile) == pytest.approx(mlr(V, profile))


def test_transport_lp_agrees_with_enumeration(monkeypatch):
    from src.detection import statistics

    rng = np.random.default_rng(5)
    profile = _random_profile(rng, (3, 2, 2), d=3)
    V = CompositeType((3, 2, 2))
    exhaustive = max_log_likelihood(1, V, profile)
    monkeypatch.setattr(statistics, "EXHAUSTIVE_ALLOCATION_LIMIT", 0)
    assert max_log_likelihood(1, V, profile) == pytest.approx(exhaustive, abs=1e-10)


def test_undefined_ratio():
    profile = Profile.from_counts([Dist.point_mass(2, 0)], [Dist.point_mass(2, 0)], (1,))
    with pytest.raises(UndefinedRatioError):
        log_mlr(CompositeType((0, 1)), profile)
    assert log_mlr(CompositeType((1, 0)), profile) == 0.0
