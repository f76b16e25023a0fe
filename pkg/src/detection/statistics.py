# src/detection/statistics.py
"""Mixture (MLR) and generalized (GLRT) likelihood-ratio statistics of a type."""

from __future__ import annotations

import numpy as np
from loguru import logger
from scipy.optimize import linprog

from src.detection.orbit import allocations, count_allocations, require_counts, symmetrized_log_measure
from src.errors import UndefinedRatioError
from src.probability.distributions import Profile
from src.probability.types import CompositeType
from src.utils import safe_log2

# Above this many allocation matrices the GLRT maximisation goes through the LP.
EXHAUSTIVE_ALLOCATION_LIMIT = 10**6


def _log_ratio(num: float, den: float, V: CompositeType) -> float:
    if num == -np.inf and den == -np.inf:
        raise UndefinedRatioError(f"both hypotheses give zero mass to type {V.counts}")
    if den == -np.inf:
        return float("inf")
    if num == -np.inf:
        return float("-inf")
    return float(num - den)


def log_mlr(V: CompositeType, profile: Profile) -> float:
    """log2 of the mixture likelihood ratio of type V."""
    num = symmetrized_log_measure(1, V, profile)
    den = symmetrized_log_measure(0, V, profile)
    return _log_ratio(num, den, V)


def mlr(V: CompositeType, profile: Profile) -> float:
    """Mixture likelihood ratio sum_sigma P_{1;sigma}(x^n) / sum_sigma P_{0;sigma}(x^n) for x^n of type V."""
    with np.errstate(over="ignore"):
        return float(np.exp2(log_mlr(V, profile)))


def _exhaustive_max(counts, nu, log_p: np.ndarray) -> float:
    best = -np.inf
    for matrix in allocations(counts, nu):
        C = np.asarray(matrix)  # d x K
        if np.any((C > 0) & (log_p.T == -np.inf)):
            continue
        value = float(np.sum(np.where(C > 0, C * np.where(np.isfinite(log_p.T), log_p.T, 0.0), 0.0)))
        best = max(best, value)
    return best


def _transport_max(counts, nu, log_p: np.ndarray) -> float:
    """Transportation LP over allocation matrices; its vertices are integral."""
    d, K = len(counts), len(nu)
    weights = log_p.T  # d x K
    allowed = np.isfinite(weights)
    cost = -np.where(allowed, weights, 0.0).ravel()
    bounds = [(0, None) if ok else (0, 0) for ok in allowed.ravel()]
    A_eq = np.zeros((d + K, d * K))
    for a in range(d):
        A_eq[a, a * K:(a + 1) * K] = 1.0
    for k in range(K):
        A_eq[d + k, k::K] = 1.0
    b_eq = np.concatenate([np.asarray(counts, float), np.asarray(nu, float)])
    res = linprog(cost, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs-ds")
    if res.status == 2:
        return float("-inf")
    if not res.success:
        raise UndefinedRatioError(f"transportation LP failed: {res.message}")
    C = np.rint(res.x).reshape(d, K)
    return float(np.sum(C * np.where(allowed, weights, 0.0)))


def max_log_likelihood(theta: int, V: CompositeType, profile: Profile) -> float:
    """log2 max_sigma P_{theta;sigma}(x^n) for any x^n of type V."""
    nu = require_counts(profile, V.n)
    log_p = safe_log2(profile.P(theta))
    if count_allocations(V.counts, nu) <= EXHAUSTIVE_ALLOCATION_LIMIT:
        return _exhaustive_max(V.counts, nu, log_p)
    logger.debug("GLRT maximisation for {} via transportation LP", V.counts)
    return _transport_max(V.counts, nu, log_p)


def log_glrt(V: CompositeType, profile: Profile) -> float:
    num = max_log_likelihood(1, V, profile)
    den = max_log_likelihood(0, V, profile)
    return _log_ratio(num, den, V)


def glrt(V: CompositeType, profile: Profile) -> float:
    """Ratio of per-hypothesis maxima over labelings."""
    with np.errstate(over="ignore"):
        return float(np.exp2(log_glrt(V, profile)))
