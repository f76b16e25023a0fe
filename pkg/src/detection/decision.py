# src/detection/decision.py
"""Symmetric tests as per-type tables: Neyman-Pearson calibration and exact worst-case errors."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from src.detection.orbit import orbit_log_table, require_counts
from src.detection.statistics import max_log_likelihood
from src.errors import CalibrationError, EnumerationLimitError, InvalidProfileError
from src.probability.distributions import Profile, kl, mixture
from src.probability.types import CompositeType, type_list
from src.utils import log2sumexp2

# Two log2 statistics closer than this are treated as one tie group.
TIE_TOLERANCE = 1e-9

# Largest |X|^n the sequence-level routines will enumerate.
ENUMERATION_LIMIT = 1 << 12


@dataclass(frozen=True)
class ErrorPoint:
    """Worst-case (type-I, type-II) error probabilities of a test."""

    pf: float
    pm: float
    log2_pf: float = float("nan")
    log2_pm: float = float("nan")

    def __post_init__(self):
        for name in ("pf", "pm"):
            value = getattr(self, name)
            if not -1e-12 <= value <= 1 + 1e-12:
                raise ValueError(f"{name}={value} is not a probability")
            object.__setattr__(self, name, float(min(max(value, 0.0), 1.0)))

    def dominates(self, other: "ErrorPoint", tol: float = 0.0) -> bool:
        """True when self is no worse in both coordinates (within tol)."""
        return self.pf <= other.pf + tol and self.pm <= other.pm + tol


@dataclass(frozen=True, eq=False)
class TestTable:
    """Acceptance probability of H1 for every type of length n, plus threshold data."""

    n: int
    d: int
    types: Tuple[Tuple[int, ...], ...]
    values: np.ndarray
    threshold: float = float("nan")
    randomization: float = float("nan")
    statistic: str = "custom"
    _index: Dict[Tuple[int, ...], int] = field(default_factory=dict, repr=False)

    __test__ = False  # not a pytest collection target

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (len(self.types),):
            raise ValueError("one acceptance value per type is required")
        if np.any(values < 0) or np.any(values > 1):
            raise ValueError("acceptance values must lie in [0, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.types)})

    def value(self, V: Union[CompositeType, Sequence[int]]) -> float:
        counts = V.counts if isinstance(V, CompositeType) else tuple(V)
        return float(self.values[self._index[tuple(counts)]])

    def decide(self, V, u: float) -> int:
        """Randomised decision given a uniform draw u."""
        return int(u < self.value(V))


def _canonical_types(profile: Profile) -> Tuple[Tuple[int, ...], ...]:
    require_counts(profile)
    return tuple(type_list(profile.n, profile.d))


def np_acceptance(log_stat: np.ndarray, log_p0: np.ndarray, epsilon: float) -> Tuple[np.ndarray, float, float]:
    """Neyman-Pearson acceptance values for a statistic over a finite outcome set.

    Outcomes are scanned in decreasing statistic order; the tie group that
    crosses epsilon is randomised with one shared gamma. NaN statistics
    (outcomes with zero mass under both hypotheses) get value 0.

    :return: (values, log2 threshold, gamma)
    """
    if not 0.0 < epsilon < 1.0:
        raise CalibrationError(f"epsilon must lie in (0, 1), got {epsilon}")
    log_stat = np.asarray(log_stat, dtype=float).ravel()
    log_p0 = np.asarray(log_p0, dtype=float).ravel()

    values = np.zeros(log_stat.size)
    defined = np.flatnonzero(~np.isnan(log_stat))
    order = defined[np.argsort(-log_stat[defined], kind="stable")]
    mass = np.exp2(log_p0)

    groups = []
    for idx in order:
        s = log_stat[idx]
        if groups:
            head = log_stat[groups[-1][0]]
            same = (s == head) or (np.isfinite(s) and np.isfinite(head) and abs(s - head) <= TIE_TOLERANCE)
            if same:
                groups[-1].append(idx)
                continue
        groups.append([idx])

    threshold, gamma, cumulative = -np.inf, 1.0, 0.0
    for group in groups:
        group_mass = float(mass[group].sum())
        if cumulative + group_mass < epsilon:
            values[group] = 1.0
            cumulative += group_mass
            continue
        gamma = min(max((epsilon - cumulative) / group_mass, 0.0), 1.0)
        values[group] = gamma
        threshold = float(log_stat[group[0]])
        if len(group) > 1:
            logger.debug("calibration threshold shared by {} tied types", len(group))
        break
    return values, threshold, gamma


def calibrate_statistic(
    log_stat: np.ndarray,
    log_p0: np.ndarray,
    epsilon: float,
    types: Sequence[Tuple[int, ...]],
    statistic: str = "custom",
) -> TestTable:
    """Threshold test on a per-type statistic with worst-case type-I error exactly epsilon."""
    types = tuple(tuple(t) for t in types)
    values, threshold, gamma = np_acceptance(log_stat, log_p0, epsilon)
    n, d = sum(types[0]), len(types[0])
    with np.errstate(over="ignore"):
        tau = float(np.exp2(threshold))
    return TestTable(n=n, d=d, types=types, values=values, threshold=tau,
                     randomization=gamma, statistic=statistic)


def log_mlr_table(profile: Profile) -> np.ndarray:
    """log2 MLR of every type (NaN where both orbit measures vanish)."""
    lp0 = orbit_log_table(0, profile)
    lp1 = orbit_log_table(1, profile)
    out = np.full(lp0.shape, np.nan)
    with np.errstate(invalid="ignore"):
        both = (lp0 == -np.inf) & (lp1 == -np.inf)
        out[~both] = lp1[~both] - lp0[~both]
    return out


def calibrate_np(profile: Profile, epsilon: float) -> TestTable:
    """Optimal (MLR threshold) test with worst-case type-I error epsilon."""
    types = _canonical_types(profile)
    return calibrate_statistic(log_mlr_table(profile), orbit_log_table(0, profile), epsilon, types, "mlrt")


def log_glrt_table(profile: Profile) -> np.ndarray:
    types = _canonical_types(profile)
    out = np.full(len(types), np.nan)
    for i, counts in enumerate(types):
        V = CompositeType(counts)
        num = max_log_likelihood(1, V, profile)
        den = max_log_likelihood(0, V, profile)
        if num == -np.inf and den == -np.inf:
            continue
        out[i] = np.inf if den == -np.inf else num - den
    return out


def calibrate_glrt(profile: Profile, epsilon: float) -> TestTable:
    """GLRT thresholded and randomised to worst-case type-I error epsilon."""
    types = _canonical_types(profile)
    return calibrate_statistic(log_glrt_table(profile), orbit_log_table(0, profile), epsilon, types, "glrt")


def exact_errors(test: TestTable, profile: Profile) -> ErrorPoint:
    """Exact worst-case errors of a symmetric test (the max over labelings is labeling-free)."""
    types = _canonical_types(profile)
    if test.types != types:
        raise InvalidProfileError(f"test table covers n={test.n}, d={test.d}; profile needs n={profile.n}, d={profile.d}")
    lp0 = orbit_log_table(0, profile)
    lp1 = orbit_log_table(1, profile)
    log2_pf = float(log2sumexp2(lp0, weights=test.values))
    log2_pm = float(log2sumexp2(lp1, weights=1.0 - test.values))
    return ErrorPoint(pf=float(np.exp2(log2_pf)), pm=float(np.exp2(log2_pm)),
                      log2_pf=log2_pf, log2_pm=log2_pm)


def beta_star(profile: Profile, epsilon: float) -> float:
    """Minimum worst-case type-II error at worst-case type-I level epsilon."""
    return exact_errors(calibrate_np(profile, epsilon), profile).pm


def log_beta_star(profile: Profile, epsilon: float) -> float:
    return exact_errors(calibrate_np(profile, epsilon), profile).log2_pm


def table_from_rule(profile: Profile, rule: Callable[[CompositeType], float], statistic: str) -> TestTable:
    """Tabulate a per-type decision rule (values in [0, 1])."""
    types = _canonical_types(profile)
    values = [float(rule(CompositeType(t))) for t in types]
    return TestTable(n=profile.n, d=profile.d, types=types, values=values, statistic=statistic)


def hoeffding_test(V: CompositeType, profile: Profile, delta: float) -> int:
    """1 iff D(V/n || M_0(alpha)) > delta."""
    if delta < 0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    return int(kl(V.frequencies(), mixture(profile, 0)) > delta)


def hoeffding_table(profile: Profile, delta: float) -> TestTable:
    return table_from_rule(profile, lambda V: hoeffding_test(V, profile, delta), "hoeffding")


SequenceTest = Union[Callable[[Tuple[int, ...]], float], Mapping[Tuple[int, ...], float]]


def check_enumerable(n: int, d: int, limit: Optional[int] = None) -> None:
    limit = ENUMERATION_LIMIT if limit is None else limit
    if d ** n > limit:
        raise EnumerationLimitError(f"|X|^n = {d}^{n} exceeds the enumeration limit {limit}")


def symmetrize(psi: SequenceTest, profile: Profile) -> TestTable:
    """Permutation-averaged version of a sequence-level test.

    Averaging psi over all n! reorderings equals averaging it uniformly over
    the type class, so the result depends on the type only.
    """
    n, d = profile.n, profile.d
    check_enumerable(n, d)
    rule = psi.__getitem__ if isinstance(psi, Mapping) else psi
    types = _canonical_types(profile)
    index = {t: i for i, t in enumerate(types)}
    totals = np.zeros(len(types))
    sizes = np.zeros(len(types))
    for seq in itertools.product(range(d), repeat=n):
        i = index[tuple(int(c) for c in np.bincount(seq, minlength=d))]
        totals[i] += float(rule(seq))
        sizes[i] += 1
    return TestTable(n=n, d=d, types=types, values=totals / sizes, statistic="symmetrized")
