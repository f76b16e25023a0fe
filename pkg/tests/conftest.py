# tests/conftest.py
import pytest

from src.analysis.byzantine import ByzantineInstance
from src.probability.distributions import Dist, Profile


@pytest.fixture
def binary_profile() -> Profile:
    """Two binary groups, H1 shifts both towards symbol 1."""
    return Profile(
        p0=[Dist.bernoulli(0.2), Dist.bernoulli(0.4)],
        p1=[Dist.bernoulli(0.6), Dist.bernoulli(0.8)],
        alpha=[0.5, 0.5],
    )


@pytest.fixture
def crossed_profile() -> Profile:
    """Mixtures coincide under both hypotheses, so the anonymous exponent is 0."""
    return Profile(
        p0=[Dist.bernoulli(0.2), Dist.bernoulli(0.8)],
        p1=[Dist.bernoulli(0.8), Dist.bernoulli(0.2)],
        alpha=[0.5, 0.5],
    )


@pytest.fixture
def glrt_profile() -> Profile:
    return Profile.from_counts(
        [Dist.bernoulli(0.5), Dist.bernoulli(0.5)],
        [Dist.bernoulli(0.6), Dist.bernoulli(0.1)],
        (1, 1),
    )


@pytest.fixture
def byzantine_instance() -> ByzantineInstance:
    return ByzantineInstance(Dist.bernoulli(0.2), Dist.bernoulli(0.8), 0.1)
