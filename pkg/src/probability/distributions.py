# src/probability/distributions.py
"""Finite-alphabet distributions, KL divergence and the problem-instance container."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from src.errors import InvalidDistributionError, InvalidProfileError

# Accepted slack on sums before renormalising.
SUM_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Alphabet:
    """Ordered set of d >= 2 distinct symbols."""

    symbols: Tuple[str, ...]

    def __post_init__(self):
        symbols = tuple(str(s) for s in self.symbols)
        if len(symbols) < 2:
            raise InvalidDistributionError("an alphabet needs at least two symbols")
        if len(set(symbols)) != len(symbols):
            raise InvalidDistributionError(f"alphabet symbols must be distinct: {symbols}")
        object.__setattr__(self, "symbols", symbols)

    @classmethod
    def of_size(cls, d: int) -> "Alphabet":
        return cls(tuple(str(i) for i in range(d)))

    @property
    def d(self) -> int:
        return len(self.symbols)

    def index(self, symbol) -> int:
        return self.symbols.index(str(symbol))


def _validated(p) -> np.ndarray:
    arr = np.array(p, dtype=float).ravel()
    if arr.size < 1:
        raise InvalidDistributionError("a distribution needs at least one entry")
    if not np.all(np.isfinite(arr)):
        raise InvalidDistributionError(f"non-finite probability entries: {arr}")
    if np.any(arr < 0):
        raise InvalidDistributionError(f"negative probability entries: {arr}")
    total = arr.sum()
    if abs(total - 1.0) > SUM_TOLERANCE:
        raise InvalidDistributionError(f"entries sum to {total!r}, not 1")
    arr = arr / total
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dist:
    """Probability vector over a finite ordered alphabet (immutable)."""

    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", _validated(self.p))

    @classmethod
    def from_weights(cls, weights) -> "Dist":
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or w.sum() <= 0:
            raise InvalidDistributionError(f"weights must be nonnegative with positive sum: {w}")
        return cls(w / w.sum())

    @classmethod
    def bernoulli(cls, p: float) -> "Dist":
        """Ber(p) over {0, 1}: symbol 1 has probability p."""
        if not 0.0 <= p <= 1.0:
            raise InvalidDistributionError(f"Bernoulli parameter {p} outside [0, 1]")
        return cls([1.0 - p, p])

    @classmethod
    def point_mass(cls, d: int, index: int) -> "Dist":
        p = np.zeros(d)
        p[index] = 1.0
        return cls(p)

    @classmethod
    def uniform(cls, d: int) -> "Dist":
        return cls(np.full(d, 1.0 / d))

    @property
    def d(self) -> int:
        return int(self.p.size)

    @property
    def support(self) -> np.ndarray:
        return self.p > 0

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.p, dtype=dtype)

    def __len__(self) -> int:
        return self.d

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dist):
            return NotImplemented
        return self.d == other.d and bool(np.array_equal(self.p, other.p))

    def __hash__(self) -> int:
        return hash(self.p.tobytes())

    def __repr__(self) -> str:
        return f"Dist({np.array2string(self.p, precision=6, separator=', ')})"


DistLike = Union[Dist, Sequence[float], np.ndarray]


def as_array(P: DistLike) -> np.ndarray:
    return P.p if isinstance(P, Dist) else np.asarray(P, dtype=float)


def kl(P: DistLike, Q: DistLike) -> float:
    """KL divergence D(P||Q) in bits, with 0 log 0 = 0 and +inf off the support of Q."""
    p = as_array(P)
    q = as_array(Q)
    if p.shape != q.shape:
        raise InvalidDistributionError(f"alphabet mismatch: {p.shape} vs {q.shape}")
    mask = p > 0
    if np.any(q[mask] == 0):
        return float("inf")
    value = float(np.sum(p[mask] * np.log2(p[mask] / q[mask])))
    return max(value, 0.0)


def _as_dists(ds: Iterable[DistLike]) -> Tuple[Dist, ...]:
    return tuple(d if isinstance(d, Dist) else Dist(d) for d in ds)


@dataclass(frozen=True, eq=False)
class Profile:
    """K groups with per-group distributions under both hypotheses.

    ``alpha`` holds the group fractions. When ``nu`` (group sizes) is given,
    ``alpha`` is replaced by ``nu / n``, the finite-n stand-in.
    """

    p0: Tuple[Dist, ...]
    p1: Tuple[Dist, ...]
    alpha: Optional[np.ndarray] = None
    nu: Optional[Tuple[int, ...]] = None
    labels: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        p0 = _as_dists(self.p0)
        p1 = _as_dists(self.p1)
        if len(p0) == 0 or len(p0) != len(p1):
            raise InvalidProfileError(f"need K >= 1 groups under both hypotheses, got {len(p0)} and {len(p1)}")
        d = p0[0].d
        if any(x.d != d for x in p0 + p1):
            raise InvalidProfileError("all group distributions must share one alphabet")
        K = len(p0)

        nu = self.nu
        if nu is not None:
            nu = tuple(int(v) for v in nu)
            if len(nu) != K or any(v < 0 for v in nu) or sum(nu) < 1:
                raise InvalidProfileError(f"nu must hold K={K} nonnegative counts with positive sum: {nu}")
            alpha = np.asarray(nu, dtype=float) / sum(nu)
        elif self.alpha is None:
            raise InvalidProfileError("either alpha or nu is required")
        else:
            alpha = np.array(self.alpha, dtype=float).ravel()
            if alpha.size != K or np.any(alpha < 0) or not np.all(np.isfinite(alpha)):
                raise InvalidProfileError(f"alpha must hold K={K} nonnegative reals: {alpha}")
            if abs(alpha.sum() - 1.0) > SUM_TOLERANCE:
                raise InvalidProfileError(f"alpha sums to {alpha.sum()!r}, not 1")
            alpha = alpha / alpha.sum()
        alpha.setflags(write=False)

        labels = tuple(self.labels) or tuple(f"g{k + 1}" for k in range(K))
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_counts(cls, p0, p1, nu) -> "Profile":
        return cls(p0=p0, p1=p1, nu=tuple(nu))

    @property
    def K(self) -> int:
        return len(self.p0)

    @property
    def d(self) -> int:
        return self.p0[0].d

    @property
    def n(self) -> int:
        if self.nu is None:
            raise InvalidProfileError("this profile has no group counts nu")
        return sum(self.nu)

    def dists(self, theta: int) -> Tuple[Dist, ...]:
        if theta not in (0, 1):
            raise InvalidProfileError(f"hypothesis index must be 0 or 1, got {theta}")
        return self.p0 if theta == 0 else self.p1

    def P(self, theta: int) -> np.ndarray:
        """K x d matrix of group distributions under hypothesis theta."""
        return np.vstack([d.p for d in self.dists(theta)])

    def swapped(self) -> "Profile":
        return Profile(self.p1, self.p0, alpha=None if self.nu else self.alpha, nu=self.nu, labels=self.labels)

    def with_alpha(self, alpha) -> "Profile":
        return Profile(self.p0, self.p1, alpha=alpha, labels=self.labels)

    def with_counts(self, nu) -> "Profile":
        return Profile(self.p0, self.p1, nu=tuple(nu), labels=self.labels)

    def at_n(self, n: int) -> "Profile":
        """Finite-n instance with group counts nu ~ alpha * n (largest-remainder rounding)."""
        if n < 1:
            raise InvalidProfileError(f"need n >= 1, got {n}")
        raw = self.alpha * n
        nu = np.floor(raw).astype(int)
        short = n - int(nu.sum())
        if short:
            nu[np.argsort(-(raw - nu), kind="stable")[:short]] += 1
        return self.with_counts(nu.tolist())

    def restrict(self, groups: Sequence[int]) -> "Profile":
        """Sub-profile on a subset of groups with renormalised fractions."""
        groups = list(groups)
        if not groups:
            raise InvalidProfileError("cannot restrict a profile to zero groups")
        p0 = [self.p0[k] for k in groups]
        p1 = [self.p1[k] for k in groups]
        labels = tuple(self.labels[k] for k in groups)
        if self.nu is not None and sum(self.nu[k] for k in groups) > 0:
            return Profile(p0, p1, nu=tuple(self.nu[k] for k in groups), labels=labels)
        weights = self.alpha[groups]
        if weights.sum() <= 0:
            weights = np.full(len(groups), 1.0 / len(groups))
        return Profile(p0, p1, alpha=weights / weights.sum(), labels=labels)

    def __repr__(self) -> str:
        return f"Profile(K={self.K}, d={self.d}, alpha={np.round(self.alpha, 6).tolist()}, nu={self.nu})"


def mixture(profile: Profile, theta: int) -> Dist:
    """M_theta(alpha) = sum_k alpha_k P_{theta;k}."""
    m = profile.alpha @ profile.P(theta)
    return Dist(m / m.sum())
