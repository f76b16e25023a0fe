# app/validation.py
"""Acceptance suites behind ``anondet validate``.

Each suite returns checks of the form claim / expected / observed / tolerance /
pass. ``inject_failure`` replaces every numeric tolerance by -1 so the harness
can be seen to fail.
"""

import tempfile
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from app.core.config import Settings
from app.schemas import ExperimentConfig
from src.analysis.byzantine import (
    ByzantineInstance,
    attack_threshold,
    byzantine_iid_exponent,
    byzantine_iid_oracle,
    byzantine_worst_exponent,
    byzantine_worst_oracle,
)
from src.analysis.partial_info import best_clustering, partial_info_profile
from src.chernoff.efficient_test import (
    average_error,
    lambda_range,
    packing_radius,
    packing_radius_bisection,
    phi_eff_table,
)
from src.chernoff.region import region_boundary
from src.detection.decision import calibrate_glrt, calibrate_np, exact_errors, log_beta_star
from src.detection.oracles import find_dominating_test
from src.probability.distributions import Dist, Profile
from src.projection.domain import in_domain
from src.projection.exponents import exponent_informed, exponent_np
from src.projection.solver import CONVERGED, brute_force_project, f_project
from src.simulation.decay import decay_fit, extrapolated_exponent
from src.simulation.monte_carlo import simulate_errors
from src.simulation.sanov import divergence_exterior, half_space, sanov_check, whole_simplex

FMT = "{:.12g}"


@dataclass(frozen=True)
class Check:
    suite: int
    claim: str
    expected: str
    observed: str
    tolerance: str
    passed: bool


class _Recorder:
    def __init__(self, suite: int, inject_failure: bool):
        self.suite = suite
        self.inject_failure = inject_failure
        self.checks: List[Check] = []

    def _tol(self, tol: float) -> float:
        return -1.0 if self.inject_failure else tol

    def _add(self, claim, expected, observed, tolerance, passed) -> None:
        self.checks.append(Check(self.suite, claim, str(expected), str(observed), str(tolerance), bool(passed)))

    def close(self, claim: str, observed: float, expected: float, tol: float) -> None:
        tol = self._tol(tol)
        both_inf = np.isinf(observed) and np.isinf(expected) and np.sign(observed) == np.sign(expected)
        passed = both_inf or abs(observed - expected) <= tol
        self._add(claim, FMT.format(expected), FMT.format(observed), FMT.format(tol), passed)

    def at_least(self, claim: str, observed: float, bound: float, tol: float = 0.0) -> None:
        tol = self._tol(tol)
        self._add(claim, ">= " + FMT.format(bound), FMT.format(observed), FMT.format(tol), observed >= bound - tol)

    def holds(self, claim: str, passed: bool, observed: str = "") -> None:
        self._add(claim, "true", observed or str(bool(passed)).lower(), "-", passed)


def _binary_pair(rng: np.random.Generator, nu: Optional[Sequence[int]] = None) -> Profile:
    p = rng.uniform(0.05, 0.95, size=(2, 2))
    p0 = [Dist.bernoulli(x) for x in p[0]]
    p1 = [Dist.bernoulli(x) for x in p[1]]
    if nu is not None:
        return Profile.from_counts(p0, p1, nu)
    return Profile(p0, p1, alpha=[0.5, 0.5])


SHIPPED_PAIRS = [
    ((0.2, 0.4), (0.6, 0.8)),
    ((0.1, 0.3), (0.5, 0.4)),
    ((0.3, 0.5), (0.7, 0.6)),
    ((0.25, 0.15), (0.45, 0.55)),
    ((0.4, 0.2), (0.8, 0.5)),
]


def _shipped(i: int) -> Profile:
    (a0, b0), (a1, b1) = SHIPPED_PAIRS[i]
    return Profile([Dist.bernoulli(a0), Dist.bernoulli(b0)], [Dist.bernoulli(a1), Dist.bernoulli(b1)],
                   alpha=[0.5, 0.5])


def suite_optimality(rec: _Recorder, quick: bool, seed: int) -> None:
    rng = np.random.default_rng(seed)
    count, n_random = (4, 1000) if quick else (20, 10_000)
    for i in range(count):
        n = (4, 5, 6)[i % 3]
        nu1 = int(rng.integers(1, n))
        profile = _binary_pair(rng, (nu1, n - nu1))
        reference = exact_errors(calibrate_np(profile, 0.1), profile)
        found = find_dominating_test(profile, reference, n_random=n_random, seed=seed + i)
        rec.holds(f"no symmetric test dominates the MLRT (n={n}, nu=({nu1},{n - nu1}))", found is None,
                  "none found" if found is None else "dominated")


def suite_glrt(rec: _Recorder, quick: bool, seed: int) -> None:
    profile = Profile.from_counts([Dist.bernoulli(0.5), Dist.bernoulli(0.5)],
                                  [Dist.bernoulli(0.6), Dist.bernoulli(0.1)], (1, 1))
    for epsilon in (0.1, 0.25):
        mlrt = exact_errors(calibrate_np(profile, epsilon), profile)
        glrt = exact_errors(calibrate_glrt(profile, epsilon), profile)
        rec.close(f"GLRT pf matches epsilon={epsilon}", glrt.pf, mlrt.pf, 1e-12)
        rec.at_least(f"GLRT pm - beta* at epsilon={epsilon}", glrt.pm - mlrt.pm, 1e-3)


def suite_exponent(rec: _Recorder, quick: bool, seed: int) -> None:
    """Decay of beta*(0.1) matches the anonymous exponent."""
    n_list = list(range(20, 201, 20))
    for i in range(2 if quick else 5):
        profile = _shipped(i)
        target = exponent_np(profile)
        points = [(n, log_beta_star(profile.at_n(n), 0.1)) for n in n_list]
        rec.close(f"beta* decay slope, instance {i}", decay_fit(points).slope, target, 0.1)
        rec.close(f"extrapolated exponent, instance {i}", extrapolated_exponent(points), target, 0.03)


def _random_instance(rng: np.random.Generator, K: int, d: int):
    q = rng.dirichlet(np.ones(d), size=K)
    q[rng.random((K, d)) < 0.15] = 0.0
    for k in range(K):
        if q[k].sum() == 0:
            q[k, rng.integers(d)] = 1.0
    q = q / q.sum(axis=1, keepdims=True)
    alpha = rng.dirichlet(np.ones(K))
    if rng.random() < 0.7:
        u = [rng.dirichlet(np.ones(int((row > 0).sum()))) for row in q]
        target = np.zeros(d)
        for k in range(K):
            full = np.zeros(d)
            full[q[k] > 0] = u[k]
            target += alpha[k] * full
    else:
        target = rng.dirichlet(np.ones(d))
    return target / target.sum(), q, alpha


def suite_projection(rec: _Recorder, quick: bool, seed: int) -> None:
    """f_project against a primal grid search; KKT residuals on converged solves."""
    rng = np.random.default_rng(seed)
    worst_gap, worst_residual, count = 0.0, 0.0, 20 if quick else 100
    for i in range(count):
        K = 1 + i % 3
        target, q, alpha = _random_instance(rng, K, 2)
        result = f_project(target, q, alpha)
        oracle = brute_force_project(target, q, alpha)
        if np.isinf(result.value) != np.isinf(oracle):
            worst_gap = np.inf
        elif np.isfinite(oracle):
            worst_gap = max(worst_gap, abs(result.value - oracle))
        if result.status == CONVERGED:
            worst_residual = max(worst_residual, result.residual)
    rec.close(f"max |f_project - grid oracle| over {count} instances", worst_gap, 0.0, 1e-4)
    rec.close("max KKT residual on converged solves", worst_residual, 0.0, 1e-9)


def suite_convexity(rec: _Recorder, quick: bool, seed: int) -> None:
    rng = np.random.default_rng(seed)
    count = 10 if quick else 50
    worst_t, worst_alpha, closure = -np.inf, -np.inf, True
    for _ in range(count):
        t1, q, alpha = _random_instance(rng, 2, 3)
        t2, _, _ = _random_instance(rng, 2, 3)
        f1, f2 = f_project(t1, q, alpha).value, f_project(t2, q, alpha).value
        if np.isfinite(f1) and np.isfinite(f2):
            mid = f_project(0.5 * (t1 + t2), q, alpha).value
            worst_t = max(worst_t, mid - 0.5 * (f1 + f2))
        if in_domain(t1, q, alpha) and in_domain(t2, q, alpha):
            closure &= in_domain(0.5 * (t1 + t2), q, alpha)

        p0 = [Dist(x) for x in rng.dirichlet(np.ones(3), size=2)]
        p1 = [Dist(x) for x in rng.dirichlet(np.ones(3), size=2)]
        a1, a2 = rng.uniform(0.05, 0.95, size=2)
        e1 = exponent_np(Profile(p0, p1, alpha=[a1, 1 - a1]))
        e2 = exponent_np(Profile(p0, p1, alpha=[a2, 1 - a2]))
        em = exponent_np(Profile(p0, p1, alpha=[0.5 * (a1 + a2), 1 - 0.5 * (a1 + a2)]))
        worst_alpha = max(worst_alpha, em - 0.5 * (e1 + e2))
    rec.close("max midpoint excess of f_Q in T (<= 0)", max(worst_t, 0.0), 0.0, 1e-7)
    rec.close("max midpoint excess of the exponent in alpha (<= 0)", max(worst_alpha, 0.0), 0.0, 1e-7)
    rec.holds("domain closed under midpoints", closure)


def suite_sanov(rec: _Recorder, quick: bool, seed: int) -> None:
    """Exact decay of region probabilities lies in the grid-infimum sandwich."""
    profile = _shipped(0)
    n_list = list(range(20, 121 if quick else 201, 20))
    for region in (whole_simplex(), half_space(0.5), divergence_exterior(profile, 0, 0.05)):
        report = sanov_check(profile, 0, region, n_list)
        rec.holds(f"sandwich for {region.name}", report.holds,
                  f"{FMT.format(report.slope)} in [{FMT.format(report.lower)}, {FMT.format(report.upper)}]")


def suite_chernoff(rec: _Recorder, quick: bool, seed: int) -> None:
    """Packing radius against bisection, phi_eff decay, region endpoints."""
    rng = np.random.default_rng(seed)
    for i in range(4 if quick else 10):
        profile = _binary_pair(rng)
        rec.close(f"packing radius vs bisection, instance {i}", packing_radius(profile),
                  packing_radius_bisection(profile), 1e-6)

    profile = _shipped(0)
    n_list = list(range(20, 121 if quick else 201, 20))
    points = []
    for n in n_list:
        instance = profile.at_n(n)
        points.append((n, float(np.log2(average_error(instance, phi_eff_table(instance))))))
    rec.close("phi_eff average-error decay vs r*", decay_fit(points).slope, packing_radius(profile), 0.05)

    low, high = lambda_range(profile)
    lower, upper = region_boundary(profile, lambdas=[low, high])
    rec.close("E_1 at the lower endpoint vs exponent_np", lower.e1, exponent_np(profile), 1e-4)
    rec.close("E_0 at the upper endpoint vs swapped exponent_np", upper.e0, exponent_np(profile.swapped()), 1e-4)


def suite_byzantine(rec: _Recorder, quick: bool, seed: int) -> None:
    base = ByzantineInstance(Dist.bernoulli(0.2), Dist.bernoulli(0.8), 0.0)
    gaps = []
    for a in np.linspace(0.0, 1.0, 21):
        inst = base.with_alpha(float(a))
        gaps.append(byzantine_worst_exponent(inst) - byzantine_iid_exponent(inst))
    rec.at_least("min (worst - iid) over the alpha grid", min(gaps), 0.0, 1e-9)
    rec.at_least("max (worst - iid) over the alpha grid", max(gaps), 1e-3)

    inst = base.with_alpha(0.1)
    rec.close("closed-form iid exponent vs grid oracle", byzantine_iid_exponent(inst), byzantine_iid_oracle(inst), 1e-3)
    rec.close("reduced composite exponent vs nested oracle", byzantine_worst_exponent(inst),
              byzantine_worst_oracle(inst), 1e-3)
    rec.close("composite exponent at the attack threshold",
              byzantine_worst_exponent(base.with_alpha(attack_threshold(base))), 0.0, 1e-12)


def suite_partial_info(rec: _Recorder, quick: bool, seed: int) -> None:
    K, L_list = (8, [0, 1, 2, 3]) if quick else (16, [0, 1, 2, 4])
    profile = partial_info_profile(K)
    values, previous = [], None
    for L in L_list:
        result = best_clustering(profile, L, seed=seed, warm_start=previous)
        values.append(result.exponent)
        previous = result.clustering
    steps = np.diff(values)
    rec.at_least(f"min exponent increase over L={L_list}", float(steps.min()), 1e-9)
    rec.close("full information equals the informed exponent", values[-1], exponent_informed(profile), 1e-6)

    small = partial_info_profile(8)
    exhaustive = best_clustering(small, 1, exhaustive=True)
    searched = best_clustering(small, 1, exhaustive=False, seed=seed)
    rec.close("local search matches exhaustive at K=8, L=1", searched.exponent, exhaustive.exponent, 1e-12)


def suite_determinism(rec: _Recorder, quick: bool, seed: int) -> None:
    from app.tasks.experiment_tasks import run_experiment

    instance = _shipped(0).at_n(10)
    first = simulate_errors(instance, "mlrt(0.1)", 5000, seed)
    second = simulate_errors(instance, "mlrt(0.1)", 5000, seed, n_jobs=2)
    rec.holds("Monte Carlo report independent of reruns and worker count", first == second)

    config = ExperimentConfig.model_validate({
        "kind": "byzantine-compare",
        "seed": seed,
        "byzantine": {"p0": [0.8, 0.2], "p1": [0.2, 0.8]},
        "sweep": {"alpha_grid": [0.0, 0.1, 0.2, 0.3]},
    })
    settings = Settings()
    blobs = []
    with tempfile.TemporaryDirectory() as tmp:
        for run in ("a", "b"):
            files = run_experiment(config, settings, Path(tmp) / run)
            blobs.append((files["results"].read_bytes(), files["plot"].read_bytes()))
    rec.holds("results.csv byte-identical across runs", blobs[0][0] == blobs[1][0])
    rec.holds("plot.svg byte-identical across runs", blobs[0][1] == blobs[1][1])


SUITES: Dict[int, Callable[[_Recorder, bool, int], None]] = {
    1: suite_optimality,
    2: suite_glrt,
    3: suite_exponent,
    4: suite_projection,
    5: suite_convexity,
    6: suite_sanov,
    7: suite_chernoff,
    8: suite_byzantine,
    9: suite_partial_info,
    10: suite_determinism,
}


@dataclass
class ValidationReport:
    checks: List[Check]

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(c) for c in self.checks])

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [asdict(c) for c in self.checks],
            "created_at": datetime.now(timezone.utc).isoformat(),
        }


def validate(
    quick: bool = False,
    inject_failure: bool = False,
    suites: Optional[Sequence[int]] = None,
    seed: int = 0,
) -> ValidationReport:
    checks: List[Check] = []
    for number in suites or sorted(SUITES):
        rec = _Recorder(number, inject_failure)
        logger.info("suite {}: {}", number, SUITES[number].__name__.replace("suite_", "", 1))
        try:
            SUITES[number](rec, quick, seed)
        except Exception as e:
            logger.error("suite {} raised {}: {}", number, type(e).__name__, e)
            rec.holds(f"suite {number} ran without error", False, f"{type(e).__name__}: {e}")
        checks.extend(rec.checks)
    return ValidationReport(checks)
