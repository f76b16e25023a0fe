# tests/unit/test_partial_info.py

import numpy as np
import pytest

from src.analysis.partial_info import (
    CONVERGED,
    EXHAUSTIVE,
    Clustering,
    best_clustering,
    cluster_beta_star,
    cluster_exponent,
    partial_info_profile,
    refine,
    set_partitions,
    stirling2,
)
from src.detection.decision import beta_star
from src.errors import InvalidProfileError
from src.projection.exponents import exponent_informed, exponent_np
from src.simulation.decay import decay_fit, extrapolated_exponent


@pytest.mark.parametrize("K,m,expected", [(4, 2, 7), (5, 3, 25), (6, 1, 1), (6, 6, 1), (3, 4, 0), (10, 4, 34105)])
def test_stirling_numbers(K, m, expected):
    assert stirling2(K, m) == expected


def test_set_partitions_are_distinct_and_complete():
    parts = list(set_partitions(5, 3))
    assert len(parts) == len(set(parts)) == stirling2(5, 3)
    assert all(set(p) == {0, 1, 2} for p in parts)


def test_clustering_helpers():
    c = Clustering.from_blocks([[1, 3], [0, 2]])
    assert c.assign == (1, 0, 1, 0)
    assert c.canonical().assign == (0, 1, 0, 1)
    assert [sorted(b) for b in c.blocks()] == [[1, 3], [0, 2]]
    with pytest.raises(InvalidProfileError):
        Clustering((0, 2), 2)


def test_extreme_clusterings(binary_profile):
    assert cluster_exponent(binary_profile, Clustering.trivial(2)) == pytest.approx(exponent_np(binary_profile))
    assert cluster_exponent(binary_profile, Clustering.singletons(2)) == pytest.approx(
        exponent_informed(binary_profile), abs=1e-9)
    with pytest.raises(InvalidProfileError):
        cluster_exponent(binary_profile, Clustering.trivial(3))


def test_construction_grids():
    interior = partial_info_profile(4)
    np.testing.assert_allclose([p.p[1] for p in interior.p0], [0.2, 0.4, 0.6, 0.8])
    assert np.isfinite(exponent_informed(interior))
    assert exponent_informed(partial_info_profile(4, grid="endpoint")) == np.inf
    with pytest.raises(ValueError):
        partial_info_profile(4, grid="other")


def test_local_search_matches_exhaustive():
    profile = partial_info_profile(8)
    exhaustive = best_clustering(profile, 1, exhaustive=True)
    searched = best_clustering(profile, 1, exhaustive=False, seed=5)
    assert exhaustive.status == EXHAUSTIVE
    assert searched.status == CONVERGED
    assert searched.exponent == pytest.approx(exhaustive.exponent, abs=1e-12)


def test_more_bits_never_hurt():
    profile = partial_info_profile(8)
    values, previous = [], None
    for L in range(4):
        result = best_clustering(profile, L, warm_start=previous)
        values.append(result.exponent)
        previous = result.clustering
    assert values[0] == pytest.approx(exponent_np(profile))
    assert all(b > a for a, b in zip(values, values[1:])), values
    assert values[-1] == pytest.approx(exponent_informed(profile), abs=1e-9)


def test_too_many_super_groups(binary_profile):
    with pytest.raises(InvalidProfileError):
        best_clustering(binary_profile, 2)


def test_refine_reaches_the_requested_block_count():
    profile = partial_info_profile(6)
    refined = refine(Clustering.trivial(6), profile, 4)
    assert refined.m == 4
    assert len(refined.blocks()) == 4


def test_finite_n_cluster_test(binary_profile):
    profile = binary_profile.with_counts((2, 3))
    anonymous = beta_star(profile, 0.1)
    assert cluster_beta_star(profile, Clustering.trivial(2), 0.1) == pytest.approx(anonymous, abs=1e-12)
    assert cluster_beta_star(profile, Clustering.singletons(2), 0.1) <= anonymous + 1e-12


def test_cluster_exponent_matches_finite_n_decay(binary_profile):
    # K=2, L=1: each group is its own super-group
    clustering = Clustering.singletons(2)
    target = cluster_exponent(binary_profile, clustering)
    assert target == pytest.approx(exponent_informed(binary_profile), abs=1e-9)
    points = [(n, float(np.log2(cluster_beta_star(binary_profile.at_n(n), clustering, 0.1))))
              for n in range(20, 201, 20)]
    assert decay_fit(points).slope == pytest.approx(target, abs=0.1)
    assert extrapolated_exponent(points) == pytest.approx(target, abs=0.05)
