# src/probability/types.py
"""Method-of-types utilities: composite types, their enumeration and type-class probabilities."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Iterator, List, Tuple

import numpy as np

from src.errors import InvalidDistributionError
from src.probability.distributions import Dist, DistLike, as_array, kl
from src.utils import log2_multinomial, xlog2y


@dataclass(frozen=True)
class CompositeType:
    """Integer count vector with denominator n (the type of a length-n sequence)."""

    counts: Tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if not counts or any(c < 0 for c in counts):
            raise InvalidDistributionError(f"type counts must be nonnegative: {counts}")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def d(self) -> int:
        return len(self.counts)

    def as_dist(self) -> Dist:
        if self.n == 0:
            raise InvalidDistributionError("the empty type has no empirical distribution")
        return Dist(np.asarray(self.counts, dtype=float) / self.n)

    def frequencies(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / max(self.n, 1)

    @classmethod
    def of_sequence(cls, sequence, d: int) -> "CompositeType":
        counts = np.bincount(np.asarray(sequence, dtype=int), minlength=d)
        return cls(tuple(int(c) for c in counts))


def _compositions(n: int, d: int) -> Iterator[Tuple[int, ...]]:
    if d == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(n - first, d - 1):
            yield (first,) + rest


def enumerate_types(n: int, d: int) -> Iterator[CompositeType]:
    """Every composition of n into d parts, once each, first coordinate descending."""
    if n < 0 or d < 1:
        raise ValueError(f"need n >= 0 and d >= 1, got n={n}, d={d}")
    for counts in _compositions(n, d):
        yield CompositeType(counts)


def type_list(n: int, d: int) -> List[Tuple[int, ...]]:
    return [t.counts for t in enumerate_types(n, d)]


def type_count(n: int, d: int) -> int:
    """|P_n| = C(n+d-1, d-1)."""
    return comb(n + d - 1, d - 1)


def type_count_bound(n: int, d: int) -> int:
    """Polynomial bound (n+1)^d on the number of n-types."""
    return (n + 1) ** d


def type_class_log_prob(U: CompositeType, Q: DistLike) -> float:
    """Exact log2 of Q^{(x)n}(T_n(U)); -inf when U puts mass where Q is zero."""
    q = as_array(Q)
    counts = np.asarray(U.counts)
    if counts.size != q.size:
        raise InvalidDistributionError(f"type over {counts.size} symbols, distribution over {q.size}")
    if np.any((counts > 0) & (q == 0)):
        return float("-inf")
    return log2_multinomial(counts) + float(xlog2y(counts, q).sum())


def type_class_bounds(U: CompositeType, Q: DistLike) -> Tuple[float, float]:
    """(lower, upper) log2 sandwich -nD - d log2(n+1) <= log2 Q(T(U)) <= -nD."""
    n = U.n
    divergence = kl(U.frequencies(), as_array(Q))
    upper = -n * divergence
    return upper - U.d * np.log2(n + 1), upper
