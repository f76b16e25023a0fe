# src/detection/orbit.py
"""Orbit (symmetrized) measures of composite types under the anonymous model.

For a labeling sigma with group sizes nu, the probability that the observed
type equals V does not depend on sigma:

    P~_theta{V} = sum_C prod_k [ n_k! / prod_a C[a,k]! ] prod_{a,k} P_{theta;k}(a)^C[a,k]

where C ranges over d x K allocation matrices with row sums V and column sums nu.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np

from src.errors import InvalidProfileError
from src.probability.distributions import Profile
from src.probability.types import CompositeType, type_class_log_prob, type_list
from src.utils import log2_factorial, safe_log2

Row = Tuple[int, ...]


def require_counts(profile: Profile, n: int | None = None) -> Tuple[int, ...]:
    if profile.nu is None:
        raise InvalidProfileError("finite-n computations need group counts nu")
    if n is not None and sum(profile.nu) != n:
        raise InvalidProfileError(f"type of length {n} does not match sum(nu)={sum(profile.nu)}")
    return profile.nu


def row_allocations(m: int, capacities: Sequence[int]) -> Iterator[Row]:
    """Ways to place m copies of one symbol into K groups with the given capacities."""
    K = len(capacities)
    if K == 0:
        if m == 0:
            yield ()
        return
    rest_capacity = sum(capacities[1:])
    low = max(0, m - rest_capacity)
    high = min(m, capacities[0])
    for c in range(high, low - 1, -1):
        for tail in row_allocations(m - c, capacities[1:]):
            yield (c,) + tail


def allocations(counts: Sequence[int], nu: Sequence[int]) -> Iterator[Tuple[Row, ...]]:
    """Every allocation matrix (as a tuple of rows) with row sums counts and column sums nu."""
    counts = tuple(counts)
    if sum(counts) != sum(nu):
        return

    def _walk(a: int, residual: Row):
        if a == len(counts) - 1:
            if sum(residual) == counts[a]:
                yield (residual,)
            return
        for row in row_allocations(counts[a], residual):
            nxt = tuple(r - c for r, c in zip(residual, row))
            for tail in _walk(a + 1, nxt):
                yield (row,) + tail

    yield from _walk(0, tuple(nu))


def count_allocations(counts: Sequence[int], nu: Sequence[int]) -> int:
    """Number of allocation matrices, by dynamic programming over residual capacities."""
    counts = tuple(counts)
    if sum(counts) != sum(nu):
        return 0
    states: Dict[Row, int] = {tuple(nu): 1}
    for m in counts:
        nxt: Dict[Row, int] = {}
        for residual, ways in states.items():
            for row in row_allocations(m, residual):
                key = tuple(r - c for r, c in zip(residual, row))
                nxt[key] = nxt.get(key, 0) + ways
        states = nxt
    return sum(states.values())


def symmetrized_log_measure(theta: int, V: CompositeType, profile: Profile) -> float:
    """Exact log2 P~_theta{V} by dynamic programming over allocation-matrix column capacities.

    Symbols are processed in alphabet order; the state is the vector of
    remaining group capacities. Returns -inf for types no labeling can produce.
    """
    nu = require_counts(profile, V.n)
    K = profile.K
    log_p = safe_log2(profile.P(theta))
    log_fact = log2_factorial(np.arange(V.n + 1))

    def row_weight(a: int, row: Row) -> float:
        total = 0.0
        for k, c in enumerate(row):
            if c == 0:
                continue
            if log_p[k, a] == -np.inf:
                return -np.inf
            total += c * log_p[k, a] - log_fact[c]
        return total

    states: Dict[Row, float] = {tuple(nu): 0.0}
    last = V.d - 1
    for a, m in enumerate(V.counts):
        nxt: Dict[Row, float] = {}
        for residual, weight in states.items():
            if a == last:
                candidates = [residual] if sum(residual) == m else []
            else:
                candidates = row_allocations(m, residual)
            for row in candidates:
                term = row_weight(a, row)
                if term == -np.inf:
                    continue
                key = tuple(r - c for r, c in zip(residual, row))
                nxt[key] = float(np.logaddexp2(nxt.get(key, -np.inf), weight + term))
        states = nxt
        if not states:
            return float("-inf")

    total = states.get((0,) * K, -np.inf)
    if total == -np.inf:
        return float("-inf")
    return float(total + log_fact[list(nu)].sum())


def _group_table(dist: np.ndarray, n_k: int, d: int) -> List[Tuple[Row, float]]:
    entries = []
    for counts in type_list(n_k, d):
        value = type_class_log_prob(CompositeType(counts), dist)
        if value > -np.inf:
            entries.append((counts[:-1], value))
    return entries


@lru_cache(maxsize=128)
def _orbit_log_table_cached(theta: int, profile: Profile) -> np.ndarray:
    nu = require_counts(profile)
    n = sum(nu)
    d = profile.d
    P = profile.P(theta)
    shape = (n + 1,) * (d - 1)

    acc = np.full(shape, -np.inf)
    acc[(0,) * (d - 1)] = 0.0
    filled = 0
    for k, n_k in enumerate(nu):
        if n_k == 0:
            continue
        nxt = np.full(shape, -np.inf)
        window = tuple(slice(0, filled + 1) for _ in range(d - 1))
        block = acc[window]
        for shift, value in _group_table(P[k], n_k, d):
            target = tuple(slice(s, s + filled + 1) for s in shift)
            np.logaddexp2(nxt[target], block + value, out=nxt[target])
        acc = nxt
        filled += n_k

    types = type_list(n, d)
    table = np.array([acc[counts[:-1]] for counts in types])
    table.setflags(write=False)
    return table


def orbit_log_table(theta: int, profile: Profile) -> np.ndarray:
    """log2 P~_theta{V} for every V in type_list(n, d), in that order.

    Computed as the group-by-group log-domain convolution of per-group
    type-class probabilities; agrees with ``symmetrized_log_measure``.
    """
    if theta not in (0, 1):
        raise InvalidProfileError(f"hypothesis index must be 0 or 1, got {theta}")
    return _orbit_log_table_cached(theta, profile)
