# tests/unit/test_distributions.py

import numpy as np
import pytest

from src.errors import InvalidDistributionError, InvalidProfileError
from src.probability.distributions import Alphabet, Dist, Profile, kl, mixture


def test_kl_examples():
    assert kl(Dist.bernoulli(0.5), Dist.bernoulli(0.5)) == 0.0
    assert kl(Dist.bernoulli(0.9), Dist.bernoulli(0.1)) == pytest.approx(2.53594, abs=1e-5)
    assert kl(Dist.bernoulli(0.5), Dist.point_mass(2, 0)) == np.inf


def test_kl_nonnegative_on_random_pairs():
    rng = np.random.default_rng(1)
    for _ in range(500):
        p, q = rng.dirichlet(np.ones(4), size=2)
        assert kl(p, q) >= 0.0, "KL must be nonnegative"
        assert kl(p, p) == pytest.approx(0.0, abs=1e-12)


def test_dist_validation():
    with pytest.raises(InvalidDistributionError):
        Dist([0.5, 0.6])
    with pytest.raises(InvalidDistributionError):
        Dist([1.2, -0.2])
    with pytest.raises(InvalidDistributionError):
        Dist.bernoulli(1.5)
    np.testing.assert_allclose(Dist.bernoulli(0.3).p, [0.7, 0.3])
    assert Dist.from_weights([1, 3]) == Dist([0.25, 0.75])


def test_dist_is_immutable():
    d = Dist.uniform(3)
    with pytest.raises(ValueError):
        d.p[0] = 1.0


def test_alphabet_rejects_duplicates():
    assert Alphabet.of_size(3).d == 3
    with pytest.raises(InvalidDistributionError):
        Alphabet(("a", "a"))


def test_mixture_examples():
    single = Profile([Dist.bernoulli(0.3)], [Dist.bernoulli(0.6)], alpha=[1.0])
    assert mixture(single, 0).p[1] == pytest.approx(0.3)

    sym = Profile([Dist.bernoulli(0.2), Dist.bernoulli(0.8)], [Dist.bernoulli(0.5)] * 2, alpha=[0.5, 0.5])
    assert mixture(sym, 0).p[1] == pytest.approx(0.5)

    extreme = Profile([Dist.bernoulli(0.0), Dist.bernoulli(1.0)], [Dist.bernoulli(0.5)] * 2, alpha=[0.25, 0.75])
    assert mixture(extreme, 0).p[1] == pytest.approx(0.75)


def test_profile_from_counts_sets_alpha():
    profile = Profile.from_counts([Dist.bernoulli(0.1), Dist.bernoulli(0.2)],
                                  [Dist.bernoulli(0.3), Dist.bernoulli(0.4)], (3, 1))
    assert profile.n == 4
    np.testing.assert_allclose(profile.alpha, [0.75, 0.25])
    assert profile.P(1).shape == (2, 2)


def test_profile_validation():
    with pytest.raises(InvalidProfileError):
        Profile([Dist.bernoulli(0.1)], [Dist.bernoulli(0.2), Dist.bernoulli(0.3)], alpha=[1.0])
    with pytest.raises(InvalidProfileError):
        Profile([Dist.bernoulli(0.1)], [Dist.uniform(3)], alpha=[1.0])
    with pytest.raises(InvalidProfileError):
        Profile([Dist.bernoulli(0.1)] * 2, [Dist.bernoulli(0.2)] * 2, alpha=[0.7, 0.7])
    with pytest.raises(InvalidProfileError):
        Profile([Dist.bernoulli(0.1)], [Dist.bernoulli(0.2)], alpha=[1.0]).n


def test_at_n_rounds_to_counts(binary_profile):
    assert binary_profile.at_n(10).nu == (5, 5)
    assert sum(binary_profile.at_n(7).nu) == 7
    skewed = binary_profile.with_alpha([0.3, 0.7])
    assert skewed.at_n(10).nu == (3, 7)


def test_swapped_and_restrict(binary_profile):
    swapped = binary_profile.swapped()
    assert swapped.p0 == binary_profile.p1
    sub = binary_profile.restrict([1])
    assert sub.K == 1
    np.testing.assert_allclose(sub.alpha, [1.0])
