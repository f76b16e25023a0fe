# tests/unit/test_byzantine.py

import numpy as np
import pytest

from src.analysis.byzantine import (
    ByzantineInstance,
    alternating_worst_exponent,
    attack_threshold,
    byzantine_iid_exponent,
    byzantine_iid_oracle,
    byzantine_worst_exponent,
    byzantine_worst_oracle,
    total_variation,
)
from src.errors import InvalidProfileError
from src.probability.distributions import Dist, kl


def test_no_attackers_is_plain_kl(byzantine_instance):
    clean = byzantine_instance.with_alpha(0.0)
    assert byzantine_worst_exponent(clean) == pytest.approx(1.2)
    assert byzantine_iid_exponent(clean) == pytest.approx(1.2)


def test_all_attackers_blind_the_detector(byzantine_instance):
    captured = byzantine_instance.with_alpha(1.0)
    assert byzantine_worst_exponent(captured) == 0.0
    assert byzantine_iid_exponent(captured) == 0.0


def test_reference_values(byzantine_instance):
    assert byzantine_worst_exponent(byzantine_instance) == pytest.approx(0.7248, abs=1e-4)
    assert byzantine_iid_exponent(byzantine_instance) == pytest.approx(0.5995, abs=1e-4)


def test_attack_threshold(byzantine_instance):
    assert total_variation(Dist.bernoulli(0.2), Dist.bernoulli(0.8)) == pytest.approx(0.6)
    assert attack_threshold(byzantine_instance) == pytest.approx(0.375)
    at_threshold = byzantine_instance.with_alpha(0.375)
    assert byzantine_worst_exponent(at_threshold) == pytest.approx(0.0, abs=1e-12)
    assert byzantine_iid_exponent(at_threshold) == pytest.approx(0.0, abs=1e-12)
    assert byzantine_worst_exponent(byzantine_instance.with_alpha(0.37)) > 0.0


@pytest.mark.slow
def test_closed_forms_match_oracles(byzantine_instance):
    assert byzantine_iid_exponent(byzantine_instance) == pytest.approx(
        byzantine_iid_oracle(byzantine_instance), abs=1e-3)
    assert byzantine_worst_exponent(byzantine_instance) == pytest.approx(
        byzantine_worst_oracle(byzantine_instance), abs=1e-3)
    assert byzantine_worst_exponent(byzantine_instance) == pytest.approx(
        alternating_worst_exponent(byzantine_instance), abs=1e-3)


def test_composite_dominates_iid(byzantine_instance):
    for a in np.linspace(0.0, 1.0, 21):
        inst = byzantine_instance.with_alpha(float(a))
        assert byzantine_worst_exponent(inst) >= byzantine_iid_exponent(inst) - 1e-9, a


def test_ternary_alphabet():
    inst = ByzantineInstance(Dist([0.6, 0.3, 0.1]), Dist([0.1, 0.3, 0.6]), 0.05)
    worst = byzantine_worst_exponent(inst)
    iid = byzantine_iid_exponent(inst)
    assert 0.0 < iid <= worst + 1e-4
    assert worst <= (1 - inst.alpha) * kl(inst.p0, inst.p1) + 1e-9
    assert byzantine_worst_exponent(inst.with_alpha(0.5)) == 0.0


def test_invalid_instances():
    with pytest.raises(InvalidProfileError):
        ByzantineInstance(Dist.bernoulli(0.2), Dist.bernoulli(0.8), 1.5)
    with pytest.raises(InvalidProfileError):
        ByzantineInstance(Dist.bernoulli(0.2), Dist.uniform(3), 0.1)
    with pytest.raises(InvalidProfileError):
        byzantine_iid_oracle(ByzantineInstance(Dist.uniform(3), Dist([0.2, 0.3, 0.5]), 0.1))
