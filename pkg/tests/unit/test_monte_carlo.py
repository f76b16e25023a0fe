# tests/unit/test_monte_carlo.py

import numpy as np
import pytest

from src.errors import UnknownTestError
from src.probability.distributions import Dist, Profile
from src.simulation.monte_carlo import CHUNK_SIZE, TestSpec, parse_test_id, simulate_errors


@pytest.mark.parametrize("text,expected", [
    ("mlrt(0.1)", TestSpec("mlrt", 0.1)),
    (" glrt( 0.25 ) ", TestSpec("glrt", 0.25)),
    ("hoeffding(0.05)", TestSpec("hoeffding", 0.05)),
    ("phi_eff", TestSpec("phi_eff")),
    ("phi_lambda(-0.2)", TestSpec("phi_lambda", -0.2)),
])
def test_parse_test_id(text, expected):
    assert parse_test_id(text) == expected


@pytest.mark.parametrize("text", ["mlrt", "phi_eff(1)", "neyman", "mlrt(x)", ""])
def test_parse_test_id_rejects(text):
    with pytest.raises(UnknownTestError):
        parse_test_id(text)


def test_test_id_round_trip():
    assert parse_test_id("mlrt(0.1)").test_id == "mlrt(0.1)"
    assert parse_test_id("phi_eff").test_id == "phi_eff"


def test_same_seed_same_report(binary_profile):
    profile = binary_profile.with_counts((3, 3))
    trials = CHUNK_SIZE + 500
    first = simulate_errors(profile, "mlrt(0.1)", trials, seed=7)
    again = simulate_errors(profile, "mlrt(0.1)", trials, seed=7, n_jobs=2)
    other = simulate_errors(profile, "mlrt(0.1)", trials, seed=8)
    assert first == again, "worker count must not change the estimate"
    assert (first.pf, first.pm) != (other.pf, other.pm)


def test_identical_hypotheses():
    same = [Dist.bernoulli(0.3), Dist.bernoulli(0.6)]
    profile = Profile.from_counts(same, same, (2, 2))
    report = simulate_errors(profile, "mlrt(0.1)", 20_000, seed=1)
    assert report.exact_pf == pytest.approx(0.1)
    assert report.exact_pm == pytest.approx(0.9)
    assert abs(report.pf - 0.1) < 0.02
    assert abs(report.pm - 0.9) < 0.02


@pytest.mark.parametrize("test_id", ["mlrt(0.1)", "glrt(0.1)", "phi_eff", "hoeffding(0.05)"])
def test_estimates_agree_with_exact_errors(binary_profile, test_id):
    profile = binary_profile.with_counts((3, 3))
    trials = 20_000
    report = simulate_errors(profile, test_id, trials, seed=3)
    for estimate, exact in ((report.pf, report.exact_pf), (report.pm, report.exact_pm)):
        sd = np.sqrt(max(exact * (1 - exact), 1e-4) / trials)
        assert abs(estimate - exact) <= 6 * sd, (test_id, estimate, exact)
    assert report.pf_ci[0] <= report.pf <= report.pf_ci[1]
    assert report.pm_ci[0] <= report.pm <= report.pm_ci[1]


def test_any_labeling_gives_the_same_errors(binary_profile):
    profile = binary_profile.with_counts((2, 3))
    trials = 20_000
    report = simulate_errors(profile, "mlrt(0.2)", trials, seed=4, labeling=(1, 0, 1, 0, 1))
    assert report.labeling == (1, 0, 1, 0, 1)
    sd = np.sqrt(report.exact_pm * (1 - report.exact_pm) / trials)
    assert abs(report.pm - report.exact_pm) <= 6 * sd


def test_bad_arguments(binary_profile):
    profile = binary_profile.with_counts((2, 2))
    with pytest.raises(ValueError):
        simulate_errors(profile, "mlrt(0.1)", 0, seed=0)
    with pytest.raises(ValueError):
        simulate_errors(profile, "mlrt(0.1)", 10, seed=0, labeling=(0, 0, 0, 1))
    with pytest.raises(UnknownTestError):
        simulate_errors(profile, "bayes", 10, seed=0)


def test_report_serialises(binary_profile):
    report = simulate_errors(binary_profile.with_counts((1, 1)), "phi_eff", 100, seed=0)
    out = report.as_dict()
    assert out["labeling"] == [0, 1]
    assert out["trials"] == 100
    assert len(out["pf_ci"]) == 2
