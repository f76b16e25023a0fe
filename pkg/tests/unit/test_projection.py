# tests/unit/test_projection.py

import numpy as np
import pytest

from src.probability.distributions import Dist, Profile, kl, mixture
from src.projection.domain import domain_interval, in_domain, support_mask
from src.projection.exponents import divergence_alpha, exponent_informed, exponent_np, price_of_anonymity
from src.projection.solver import BOUNDARY, CONVERGED, INFEASIBLE, brute_force_project, f_project, f_value


def test_single_group_is_kl():
    T, Q = Dist([0.1, 0.3, 0.6]), Dist([0.3, 0.3, 0.4])
    assert f_value(T, [Q], [1.0]) == pytest.approx(kl(T, Q), abs=1e-9)


def test_mixture_itself_costs_nothing(binary_profile):
    result = f_project(mixture(binary_profile, 1), binary_profile.p1, binary_profile.alpha)
    assert result.value == pytest.approx(0.0, abs=1e-10)
    assert result.status == CONVERGED


@pytest.mark.parametrize("t1,q,alpha", [
    (0.6, [0.2, 0.4], [0.5, 0.5]),
    (0.05, [0.3, 0.9], [0.3, 0.7]),
    (0.9, [0.5, 0.1], [0.25, 0.75]),
])
def test_two_groups_match_grid_search(t1, q, alpha):
    T = Dist.bernoulli(t1)
    Q = [Dist.bernoulli(x) for x in q]
    assert f_value(T, Q, alpha) == pytest.approx(brute_force_project(T, Q, alpha), abs=1e-4)


@pytest.mark.slow
def test_three_groups_match_grid_search():
    T = Dist.bernoulli(0.55)
    Q = [Dist.bernoulli(0.1), Dist.bernoulli(0.3), Dist.bernoulli(0.7)]
    alpha = [0.2, 0.3, 0.5]
    assert f_value(T, Q, alpha) == pytest.approx(brute_force_project(T, Q, alpha), abs=1e-4)


def test_optimizers_reproduce_target():
    T = Dist([0.2, 0.5, 0.3])
    Q = [Dist([0.6, 0.3, 0.1]), Dist([0.1, 0.2, 0.7])]
    alpha = np.array([0.4, 0.6])
    result = f_project(T, Q, alpha)
    mixed = alpha @ np.vstack([u.p for u in result.u])
    np.testing.assert_allclose(mixed, T.p, atol=1e-9)
    primal = sum(a * kl(u, q) for a, u, q in zip(alpha, result.u, Q))
    assert result.value == pytest.approx(primal, abs=1e-9)
    assert result.gap <= 1e-8


def test_tilt_is_infinite_off_support():
    result = f_project(Dist([0.5, 0.5, 0.0]), [Dist([0.2, 0.3, 0.5]), Dist([0.4, 0.4, 0.2])], [0.5, 0.5])
    assert result.tilt[2] == np.inf
    assert np.all(np.isfinite(result.tilt[:2]))


def test_outside_domain_is_infinite():
    Q = [Dist.point_mass(2, 0), Dist.point_mass(2, 0)]
    assert not in_domain(Dist.bernoulli(0.5), Q, [0.5, 0.5])
    result = f_project(Dist.bernoulli(0.5), Q, [0.5, 0.5])
    assert result.value == np.inf
    assert result.status == INFEASIBLE
    assert not result.feasible


def test_edge_of_domain_reports_boundary():
    Q = [Dist.point_mass(2, 0), Dist.bernoulli(0.5)]
    alpha = [0.5, 0.5]
    assert domain_interval(Q, alpha) == (0.0, 0.5)
    mask = support_mask(Dist.bernoulli(0.5), Q, alpha)
    assert mask.feasible and mask.reduced
    assert not mask.cells[1, 0], "group 2 must put all its mass on symbol 1"
    result = f_project(Dist.bernoulli(0.5), Q, alpha)
    assert result.status == BOUNDARY
    assert result.value == pytest.approx(0.5, abs=1e-8)
    assert not in_domain(Dist.bernoulli(0.6), Q, alpha)


def test_domain_interval_needs_binary():
    with pytest.raises(ValueError):
        domain_interval([Dist.uniform(3)], [1.0])
    with pytest.raises(ValueError):
        brute_force_project(Dist.uniform(3), [Dist.uniform(3)], [1.0])


def test_convex_in_target():
    Q = [Dist([0.6, 0.3, 0.1]), Dist([0.1, 0.2, 0.7])]
    alpha = [0.5, 0.5]
    A, B = np.array([0.7, 0.2, 0.1]), np.array([0.1, 0.3, 0.6])
    for w in (0.25, 0.5, 0.75):
        mid = f_value(w * A + (1 - w) * B, Q, alpha)
        assert mid <= w * f_value(A, Q, alpha) + (1 - w) * f_value(B, Q, alpha) + 1e-9


def test_crossed_groups_have_no_anonymous_exponent(crossed_profile):
    assert exponent_np(crossed_profile) == pytest.approx(0.0, abs=1e-10)
    assert exponent_informed(crossed_profile) == pytest.approx(1.2)
    assert price_of_anonymity(crossed_profile) == pytest.approx(1.2)


def test_single_group_exponents():
    profile = Profile([Dist.bernoulli(0.2)], [Dist.bernoulli(0.8)], alpha=[1.0])
    assert exponent_np(profile) == pytest.approx(1.2, abs=1e-9)
    assert exponent_informed(profile) == pytest.approx(1.2)


def test_anonymity_never_helps(binary_profile):
    rng = np.random.default_rng(2)
    for _ in range(5):
        alpha = rng.dirichlet(np.ones(2))
        profile = binary_profile.with_alpha(alpha)
        assert price_of_anonymity(profile) >= -1e-9
    assert divergence_alpha(binary_profile.p0, binary_profile.p1, binary_profile.alpha) == pytest.approx(
        exponent_np(binary_profile))


def test_single_group_with_extreme_tilt():
    T, Q = Dist([0.99086, 0.00914]), Dist([0.00151, 0.99849])
    result = f_project(T, [Q], [1.0])
    assert result.value == pytest.approx(kl(T, Q), rel=1e-12)
    np.testing.assert_allclose(result.u[0].p, T.p)
    assert result.residual == 0.0


def _random_instance(rng):
    K, d = int(rng.integers(1, 4)), int(rng.integers(2, 5))
    t = rng.dirichlet(np.full(d, 0.5))
    q = rng.dirichlet(np.full(d, 0.3), size=K)
    if rng.random() < 0.3:
        q[rng.integers(K), rng.integers(d)] = 0.0
    q = q / q.sum(axis=1, keepdims=True)
    alpha = rng.dirichlet(np.ones(K))
    return Dist(t), [Dist(row) for row in q], alpha


def test_solver_is_robust_on_random_instances():
    rng = np.random.default_rng(11)
    for _ in range(300):
        T, Q, alpha = _random_instance(rng)
        result = f_project(T, Q, alpha)
        if not result.feasible:
            assert not in_domain(T, Q, alpha)
            continue
        mixed = alpha @ np.vstack([u.p for u in result.u])
        np.testing.assert_allclose(mixed, T.p, atol=1e-8)
        assert result.gap <= 1e-8
        # joint convexity of KL: f_Q(T) >= D(T || sum_k alpha_k Q_k)
        mix = alpha @ np.vstack([q.p for q in Q])
        assert result.value >= kl(T, mix / mix.sum()) - 1e-9
        if all(np.all(q.p[T.p > 0] > 0) for q in Q):
            assert result.value <= sum(a * kl(T, q) for a, q in zip(alpha, Q)) + 1e-9
