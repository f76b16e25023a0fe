# tests/unit/test_types.py

import numpy as np
import pytest

from src.probability.distributions import Dist
from src.probability.types import (
    CompositeType,
    enumerate_types,
    type_class_bounds,
    type_class_log_prob,
    type_count,
    type_count_bound,
    type_list,
)


def test_enumerate_types_small_cases():
    assert type_list(2, 2) == [(2, 0), (1, 1), (0, 2)]
    assert type_list(0, 3) == [(0, 0, 0)]
    assert len(list(enumerate_types(10, 2))) == 11
    assert type_count(10, 2) == 11 <= type_count_bound(10, 2) == 121


@pytest.mark.parametrize("n,d", [(3, 3), (5, 4), (7, 2)])
def test_type_count_matches_enumeration(n, d):
    types = type_list(n, d)
    assert len(types) == type_count(n, d)
    assert len(set(types)) == len(types), "types must be distinct"
    assert all(sum(t) == n for t in types)


def test_type_class_log_prob_examples():
    p = 0.3
    q = Dist.bernoulli(p)
    assert type_class_log_prob(CompositeType((1, 1)), q) == pytest.approx(np.log2(2 * p * (1 - p)))
    assert type_class_log_prob(CompositeType((4, 0)), q) == pytest.approx(4 * np.log2(0.7))
    assert type_class_log_prob(CompositeType((3, 2)), Dist.bernoulli(0.4)) == pytest.approx(
        np.log2(10 * 0.6**3 * 0.4**2))
    assert type_class_log_prob(CompositeType((1, 1)), Dist.point_mass(2, 0)) == -np.inf


def test_type_class_bounds_sandwich():
    q = Dist([0.2, 0.5, 0.3])
    for U in enumerate_types(6, 3):
        lower, upper = type_class_bounds(U, q)
        exact = type_class_log_prob(U, q)
        assert lower - 1e-9 <= exact <= upper + 1e-9


def test_composite_type_of_sequence():
    V = CompositeType.of_sequence([0, 2, 2, 1], 3)
    assert V.counts == (1, 1, 2)
    assert V.n == 4
    np.testing.assert_allclose(V.as_dist().p, [0.25, 0.25, 0.5])
