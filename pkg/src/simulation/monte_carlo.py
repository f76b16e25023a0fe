# src/simulation/monte_carlo.py
"""Monte Carlo estimates of the error probabilities of symmetric tests."""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from loguru import logger
from scipy.stats import binomtest

from src.chernoff.efficient_test import phi_eff_table, phi_lambda_table
from src.detection.decision import TestTable, calibrate_glrt, calibrate_np, exact_errors, hoeffding_table
from src.detection.orbit import require_counts
from src.errors import UnknownTestError
from src.probability.distributions import Profile

# Trials per generator stream; each chunk is one Philox key.
CHUNK_SIZE = 4096

_TEST_ID = re.compile(r"^\s*(mlrt|glrt|hoeffding|phi_eff|phi_lambda)\s*(?:\(\s*([^)]*?)\s*\))?\s*$")
_NEEDS_PARAMETER = {"mlrt", "glrt", "hoeffding", "phi_lambda"}


@dataclass(frozen=True)
class TestSpec:
    """Parsed test identifier such as ``mlrt(0.1)`` or ``phi_eff``."""

    kind: str
    parameter: Optional[float] = None

    __test__ = False  # not a pytest collection target

    @property
    def test_id(self) -> str:
        return self.kind if self.parameter is None else f"{self.kind}({self.parameter:g})"


def parse_test_id(test_id: str) -> TestSpec:
    match = _TEST_ID.match(test_id or "")
    if not match:
        raise UnknownTestError(f"unknown test id {test_id!r}")
    kind, raw = match.group(1), match.group(2)
    if kind in _NEEDS_PARAMETER:
        if not raw:
            raise UnknownTestError(f"test {kind} needs a parameter, e.g. {kind}(0.1)")
        try:
            return TestSpec(kind, float(raw))
        except ValueError as e:
            raise UnknownTestError(f"bad parameter in {test_id!r}") from e
    if raw:
        raise UnknownTestError(f"test {kind} takes no parameter")
    return TestSpec(kind)


def build_test_table(profile: Profile, spec: TestSpec) -> TestTable:
    if spec.kind == "mlrt":
        return calibrate_np(profile, spec.parameter)
    if spec.kind == "glrt":
        return calibrate_glrt(profile, spec.parameter)
    if spec.kind == "hoeffding":
        return hoeffding_table(profile, spec.parameter)
    if spec.kind == "phi_eff":
        return phi_eff_table(profile)
    if spec.kind == "phi_lambda":
        return phi_lambda_table(profile, spec.parameter)
    raise UnknownTestError(f"unknown test kind {spec.kind!r}")


@dataclass(frozen=True)
class TrialReport:
    n: int
    trials: int
    seed: int
    test_id: str
    labeling: Tuple[int, ...]
    pf: float
    pm: float
    pf_ci: Tuple[float, float]
    pm_ci: Tuple[float, float]
    exact_pf: float = float("nan")
    exact_pm: float = float("nan")
    meta: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = asdict(self)
        out["labeling"] = list(self.labeling)
        out["pf_ci"] = list(self.pf_ci)
        out["pm_ci"] = list(self.pm_ci)
        return out


def default_labeling(nu: Sequence[int]) -> Tuple[int, ...]:
    """Sensors ordered by group: nu_1 zeros, then nu_2 ones, ..."""
    return tuple(k for k, n_k in enumerate(nu) for _ in range(n_k))


def _type_lookup(types, n: int, d: int) -> np.ndarray:
    lookup = np.full((n + 1,) * (d - 1), -1, dtype=int)
    for i, counts in enumerate(types):
        lookup[counts[:-1]] = i
    return lookup


def _chunk_errors(
    theta: int,
    chunk: int,
    size: int,
    seed: int,
    cdf: np.ndarray,
    lookup: np.ndarray,
    values: np.ndarray,
) -> int:
    """Number of errors in one chunk of trials under hypothesis theta."""
    rng = np.random.Generator(np.random.Philox(key=[seed, 2 * chunk + theta]))
    n, d = cdf.shape
    draws = rng.random((size, n + 1))
    # inverse-CDF sampling per sensor; the last column randomises the decision
    symbols = (draws[:, :n, None] >= cdf[None, :, :-1]).sum(axis=2)
    counts = np.stack([(symbols == a).sum(axis=1) for a in range(d)], axis=1)
    idx = lookup[tuple(counts[:, :-1].T)]
    decisions = draws[:, n] < values[idx]
    return int(np.sum(decisions if theta == 0 else ~decisions))


def _interval(errors: int, trials: int) -> Tuple[float, float]:
    ci = binomtest(errors, trials).proportion_ci(confidence_level=0.95, method="exact")
    return float(ci.low), float(ci.high)


def simulate_errors(
    profile: Profile,
    test_id: str,
    trials: int,
    seed: int,
    labeling: Optional[Sequence[int]] = None,
    n_jobs: int = 1,
) -> TrialReport:
    """Estimate (P_F, P_M) of a symmetric test under one labeling.

    Results depend only on (profile, test_id, trials, seed, labeling); the
    worker count does not change them.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    spec = parse_test_id(test_id)
    nu = require_counts(profile)
    labeling = tuple(int(k) for k in (labeling if labeling is not None else default_labeling(nu)))
    if sorted(labeling) != sorted(default_labeling(nu)):
        raise ValueError(f"labeling {labeling} does not match group counts {nu}")

    table = build_test_table(profile, spec)
    n, d = profile.n, profile.d
    cdf = np.cumsum(np.vstack([profile.P(0)[list(labeling)], profile.P(1)[list(labeling)]]), axis=1)
    cdfs = (cdf[:n], cdf[n:])
    lookup = _type_lookup(table.types, n, d)

    sizes = [min(CHUNK_SIZE, trials - start) for start in range(0, trials, CHUNK_SIZE)]
    jobs = [(theta, c, size) for theta in (0, 1) for c, size in enumerate(sizes)]
    counts = Parallel(n_jobs=n_jobs)(
        delayed(_chunk_errors)(theta, c, size, seed, cdfs[theta], lookup, table.values) for theta, c, size in jobs
    )
    errors0 = sum(c for (theta, _, _), c in zip(jobs, counts) if theta == 0)
    errors1 = sum(c for (theta, _, _), c in zip(jobs, counts) if theta == 1)

    exact = exact_errors(table, profile)
    logger.debug("simulated {} trials of {} at n={}: pf={}, pm={}", trials, spec.test_id, n, errors0, errors1)
    return TrialReport(
        n=n,
        trials=trials,
        seed=seed,
        test_id=spec.test_id,
        labeling=labeling,
        pf=errors0 / trials,
        pm=errors1 / trials,
        pf_ci=_interval(errors0, trials),
        pm_ci=_interval(errors1, trials),
        exact_pf=exact.pf,
        exact_pm=exact.pm,
    )
