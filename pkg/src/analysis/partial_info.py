# src/analysis/partial_info.py
"""Cluster-and-detect with L bits of partial group information.

The K groups are clustered into 2^L super-groups. The fusion center learns the
super-group of every observation, so testing is anonymous inside a super-group
and informed across super-groups. Exponents of independent informed blocks add:

    E(clustering) = sum_j beta_j D_{alpha~(j)}(P_0^(j); P_1^(j)),

with beta_j the total fraction of block j and alpha~(j) the fractions
renormalised inside it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from loguru import logger

from src.detection.decision import np_acceptance
from src.detection.orbit import orbit_log_table, require_counts
from src.errors import InvalidProfileError
from src.probability.distributions import Dist, Profile, kl
from src.projection.exponents import exponent_np
from src.utils import log2sumexp2

EXHAUSTIVE_LIMIT = 10**6

EXHAUSTIVE = "exhaustive"
CONVERGED = "converged"
BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass(frozen=True)
class Clustering:
    """Super-group index (0-based, below ``m``) of each of the K groups."""

    assign: Tuple[int, ...]
    m: int

    def __post_init__(self):
        assign = tuple(int(j) for j in self.assign)
        if self.m < 1 or any(j < 0 or j >= self.m for j in assign):
            raise InvalidProfileError(f"super-group indices must lie in 0..{self.m - 1}: {assign}")
        object.__setattr__(self, "assign", assign)

    @classmethod
    def trivial(cls, K: int) -> "Clustering":
        return cls((0,) * K, 1)

    @classmethod
    def singletons(cls, K: int) -> "Clustering":
        return cls(tuple(range(K)), K)

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence[int]], m: Optional[int] = None) -> "Clustering":
        K = sum(len(b) for b in blocks)
        assign = [0] * K
        for j, block in enumerate(blocks):
            for k in block:
                assign[k] = j
        return cls(tuple(assign), m or len(blocks))

    @property
    def K(self) -> int:
        return len(self.assign)

    def blocks(self) -> List[FrozenSet[int]]:
        """Nonempty super-groups in index order."""
        out: Dict[int, set] = {}
        for k, j in enumerate(self.assign):
            out.setdefault(j, set()).add(k)
        return [frozenset(out[j]) for j in sorted(out)]

    def canonical(self) -> "Clustering":
        """Relabel super-groups by first appearance."""
        relabel: Dict[int, int] = {}
        assign = tuple(relabel.setdefault(j, len(relabel)) for j in self.assign)
        return Clustering(assign, self.m)


class BlockCache:
    """Memoised beta_j * D_alpha of each block, keyed by its group set."""

    def __init__(self, profile: Profile):
        self.profile = profile
        self._values: Dict[FrozenSet[int], float] = {}
        self.evaluations = 0

    def __call__(self, block: FrozenSet[int]) -> float:
        if block not in self._values:
            weight = float(self.profile.alpha[sorted(block)].sum())
            if weight <= 0:
                self._values[block] = 0.0
            else:
                self._values[block] = weight * exponent_np(self.profile.restrict(sorted(block)))
        return self._values[block]

    def exponent(self, clustering: Clustering) -> float:
        self.evaluations += 1
        return float(sum(self(b) for b in clustering.blocks()))


def cluster_exponent(profile: Profile, clustering: Clustering, cache: Optional[BlockCache] = None) -> float:
    """Type-II exponent of cluster-and-detect: anonymous inside blocks, informed across them."""
    if clustering.K != profile.K:
        raise InvalidProfileError(f"clustering covers {clustering.K} groups, profile has {profile.K}")
    return (cache or BlockCache(profile)).exponent(clustering)


@lru_cache(maxsize=None)
def stirling2(K: int, m: int) -> int:
    """Number of partitions of K labelled groups into exactly m nonempty blocks."""
    if K == m:
        return 1
    if m == 0 or m > K:
        return 0
    return m * stirling2(K - 1, m) + stirling2(K - 1, m - 1)


def set_partitions(K: int, m: int) -> Iterator[Tuple[int, ...]]:
    """Restricted-growth strings of length K using exactly m block labels."""

    def _walk(prefix: List[int], used: int):
        k = len(prefix)
        if k == K:
            if used == m:
                yield tuple(prefix)
            return
        if used + (K - k) < m:
            return
        for j in range(min(used + 1, m)):
            prefix.append(j)
            yield from _walk(prefix, max(used, j + 1))
            prefix.pop()

    yield from _walk([], 0)


@dataclass(frozen=True)
class ClusteringResult:
    clustering: Clustering
    exponent: float
    status: str
    evaluations: int


def _contiguous(order: Sequence[int], m: int, K: int) -> Clustering:
    assign = [0] * K
    for j, chunk in enumerate(np.array_split(np.asarray(order), m)):
        for k in chunk:
            assign[int(k)] = j
    return Clustering(tuple(assign), m)


def informed_scores(profile: Profile) -> np.ndarray:
    """alpha_k D(P_{0;k} || P_{1;k}): each group's share of the informed exponent."""
    return np.array([a * kl(p0, p1) if a > 0 else 0.0 for a, p0, p1 in zip(profile.alpha, profile.p0, profile.p1)])


def orientation_scores(profile: Profile) -> np.ndarray:
    """Projection of P_{0;k} - P_{1;k} on the mean difference; orders groups that pull the same way."""
    diffs = profile.P(0) - profile.P(1)
    direction = profile.alpha @ diffs
    if np.allclose(direction, 0.0):
        direction = diffs[np.argmax(np.abs(diffs).sum(axis=1))]
    return diffs @ direction


def refine(clustering: Clustering, profile: Profile, m: int, cache: Optional[BlockCache] = None) -> Clustering:
    """Split blocks until m are in use, each time taking the best contiguous split along the orientation order."""
    cache = cache or BlockCache(profile)
    rank = np.argsort(np.argsort(orientation_scores(profile), kind="stable"))
    blocks = [sorted(b, key=lambda k: rank[k]) for b in clustering.blocks()]
    while len(blocks) < m:
        best_gain, best = -np.inf, None
        for i, block in enumerate(blocks):
            if len(block) < 2:
                continue
            whole = cache(frozenset(block))
            for cut in range(1, len(block)):
                gain = cache(frozenset(block[:cut])) + cache(frozenset(block[cut:])) - whole
                if gain > best_gain:
                    best_gain, best = gain, (i, cut)
        if best is None:
            break
        i, cut = best
        block = blocks.pop(i)
        blocks[i:i] = [block[:cut], block[cut:]]
    return Clustering.from_blocks(blocks, m)


def _local_search(start: Clustering, cache: BlockCache, budget: int) -> Tuple[Clustering, float, bool]:
    """First-improvement single-group moves that keep every block nonempty."""
    current = start
    value = cache.exponent(current)
    spent = 1
    improved = True
    while improved:
        improved = False
        sizes = np.bincount(current.assign, minlength=current.m)
        for k in range(current.K):
            if sizes[current.assign[k]] <= 1:
                continue
            for j in range(current.m):
                if j == current.assign[k]:
                    continue
                if spent >= budget:
                    return current, value, False
                assign = list(current.assign)
                assign[k] = j
                candidate = Clustering(tuple(assign), current.m)
                candidate_value = cache.exponent(candidate)
                spent += 1
                if candidate_value > value + 1e-12:
                    current, value, improved = candidate, candidate_value, True
                    sizes = np.bincount(current.assign, minlength=current.m)
                    break
            if improved:
                break
    return current, value, True


def best_clustering(
    profile: Profile,
    L: int,
    budget: int = 20_000,
    restarts: int = 8,
    seed: int = 0,
    warm_start: Optional[Clustering] = None,
    n_jobs: int = 1,
    exhaustive: Optional[bool] = None,
) -> ClusteringResult:
    """Best clustering of the K groups into 2^L super-groups.

    Exhaustive over set partitions when their number is at most 10^6; otherwise
    score-ordered seeds, an optional warm start refined from a coarser
    clustering, and random restarts, each improved by single-group moves.
    ``exhaustive`` forces one route or the other.
    """
    K = profile.K
    m = 2**L
    if L < 0 or m > K:
        raise InvalidProfileError(f"need 1 <= 2^L <= K, got L={L}, K={K}")
    cache = BlockCache(profile)

    if exhaustive is None:
        exhaustive = stirling2(K, m) <= EXHAUSTIVE_LIMIT
    if exhaustive:
        best, best_value = None, -np.inf
        for assign in set_partitions(K, m):
            candidate = Clustering(assign, m)
            value = cache.exponent(candidate)
            if value > best_value + 1e-12:
                best, best_value = candidate, value
        logger.debug("exhaustive clustering K={} m={}: {} partitions", K, m, stirling2(K, m))
        return ClusteringResult(best, best_value, EXHAUSTIVE, cache.evaluations)

    seeds = [
        _contiguous(np.argsort(-informed_scores(profile), kind="stable"), m, K),
        _contiguous(np.argsort(orientation_scores(profile), kind="stable"), m, K),
    ]
    if warm_start is not None:
        seeds.append(refine(warm_start, profile, m, cache))
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        assign = np.concatenate([np.arange(m), rng.integers(0, m, size=K - m)])
        seeds.append(Clustering(tuple(int(j) for j in rng.permutation(assign)), m))

    share = max(budget // len(seeds), 1)
    runs = Parallel(n_jobs=n_jobs, prefer="threads")(delayed(_local_search)(s, cache, share) for s in seeds)
    best, best_value, _ = max(runs, key=lambda r: r[1])
    status = CONVERGED if all(r[2] for r in runs) else BUDGET_EXHAUSTED
    if status == BUDGET_EXHAUSTED:
        logger.warning("clustering budget of {} evaluations exhausted; returning best found", budget)
    return ClusteringResult(best.canonical(), best_value, status, cache.evaluations)


def partial_info_profile(K: int, grid: str = "interior") -> Profile:
    """K groups, Ber(theta_k) under H0 and Ber(1 - theta_k) under H1, uniform fractions.

    grid="interior" uses theta_k = k / (K + 1); grid="endpoint" uses theta_k = k / K,
    which makes the last group deterministic and the informed exponent infinite.
    """
    if grid == "interior":
        thetas = np.arange(1, K + 1) / (K + 1)
    elif grid == "endpoint":
        thetas = np.arange(1, K + 1) / K
    else:
        raise ValueError(f"unknown grid {grid!r}")
    return Profile(
        p0=[Dist.bernoulli(t) for t in thetas],
        p1=[Dist.bernoulli(1 - t) for t in thetas],
        alpha=np.full(K, 1.0 / K),
        labels=tuple(f"theta={t:.4g}" for t in thetas),
    )


def cluster_beta_star(profile: Profile, clustering: Clustering, epsilon: float) -> float:
    """Exact finite-n type-II error of the optimal cluster-and-detect test.

    The observation is the tuple of per-block types; its likelihood ratio is
    the product of block mixture likelihood ratios.
    """
    nu = require_counts(profile)
    lp0 = np.zeros(1)
    lp1 = np.zeros(1)
    for block in clustering.blocks():
        groups = sorted(block)
        if sum(nu[k] for k in groups) == 0:
            continue
        sub = profile.restrict(groups)
        lp0 = np.add.outer(lp0, orbit_log_table(0, sub)).ravel()
        lp1 = np.add.outer(lp1, orbit_log_table(1, sub)).ravel()
    with np.errstate(invalid="ignore"):
        stat = np.where((lp0 == -np.inf) & (lp1 == -np.inf), np.nan, lp1 - lp0)
    values, _, _ = np_acceptance(stat, lp0, epsilon)
    return float(np.exp2(log2sumexp2(lp1, weights=1.0 - values)))
