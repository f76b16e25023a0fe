# src/detection/oracles.py
"""Brute-force oracles over sequences and labelings, for small n only.

These enumerate X^n and S_{n,nu} explicitly. They back the numerical checks of
labeling invariance, test optimality and symmetrization dominance.
"""

from __future__ import annotations

import itertools
from typing import Iterator, Optional, Tuple

import numpy as np

from src.detection.decision import ErrorPoint, SequenceTest, check_enumerable
from src.detection.orbit import orbit_log_table, require_counts
from src.probability.distributions import Profile
from src.probability.types import type_list


def labelings(nu) -> Iterator[Tuple[int, ...]]:
    """Every distinct assignment of n sensors to groups with group sizes nu."""
    nu = list(nu)
    n = sum(nu)

    def _walk(prefix, remaining):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for k, left in enumerate(remaining):
            if left:
                remaining[k] -= 1
                prefix.append(k)
                yield from _walk(prefix, remaining)
                prefix.pop()
                remaining[k] += 1

    yield from _walk([], nu)


def sequences(n: int, d: int) -> np.ndarray:
    """All |X|^n sequences as rows, in lexicographic order."""
    check_enumerable(n, d)
    return np.array(list(itertools.product(range(d), repeat=n)), dtype=int).reshape(-1, n)


def sequence_probs(theta: int, profile: Profile, labeling, seqs: np.ndarray) -> np.ndarray:
    """P_{theta;sigma}(x^n) for every row of seqs."""
    P = profile.P(theta)
    labels = np.asarray(labeling, dtype=int)
    if seqs.shape[1] == 0:
        return np.ones(seqs.shape[0])
    return np.prod(P[labels[None, :], seqs], axis=1)


def _type_index(seqs: np.ndarray, d: int, types) -> np.ndarray:
    index = {t: i for i, t in enumerate(types)}
    counts = np.stack([(seqs == a).sum(axis=1) for a in range(d)], axis=1)
    return np.array([index[tuple(int(c) for c in row)] for row in counts], dtype=int)


def labeled_type_probs(theta: int, profile: Profile, labeling) -> np.ndarray:
    """P_{theta;sigma}(Pi^{-1}(V)) for every type V, by enumerating X^n under one labeling."""
    nu = require_counts(profile)
    n, d = sum(nu), profile.d
    seqs = sequences(n, d)
    types = type_list(n, d)
    probs = sequence_probs(theta, profile, labeling, seqs)
    return np.bincount(_type_index(seqs, d, types), weights=probs, minlength=len(types))


def sigma_invariance_gap(theta: int, profile: Profile) -> float:
    """Largest difference in type probabilities between any two labelings."""
    rows = np.array([labeled_type_probs(theta, profile, s) for s in labelings(profile.nu)])
    return float(np.max(rows.max(axis=0) - rows.min(axis=0)))


def brute_force_mlr(seq, profile: Profile) -> float:
    seqs = np.asarray(seq, dtype=int).reshape(1, -1)
    num = sum(sequence_probs(1, profile, s, seqs)[0] for s in labelings(profile.nu))
    den = sum(sequence_probs(0, profile, s, seqs)[0] for s in labelings(profile.nu))
    return num / den


def brute_force_glrt(seq, profile: Profile) -> float:
    seqs = np.asarray(seq, dtype=int).reshape(1, -1)
    num = max(sequence_probs(1, profile, s, seqs)[0] for s in labelings(profile.nu))
    den = max(sequence_probs(0, profile, s, seqs)[0] for s in labelings(profile.nu))
    return num / den


def worst_case_errors(psi: SequenceTest, profile: Profile) -> ErrorPoint:
    """max over labelings of E[psi] under H0 and of E[1 - psi] under H1."""
    nu = require_counts(profile)
    seqs = sequences(sum(nu), profile.d)
    rule = psi.__getitem__ if hasattr(psi, "__getitem__") and not callable(psi) else psi
    values = np.array([float(rule(tuple(int(x) for x in row))) for row in seqs])
    pf = pm = 0.0
    for s in labelings(nu):
        pf = max(pf, float(sequence_probs(0, profile, s, seqs) @ values))
        pm = max(pm, float(sequence_probs(1, profile, s, seqs) @ (1.0 - values)))
    return ErrorPoint(pf=pf, pm=pm)


def find_dominating_test(
    profile: Profile,
    reference: ErrorPoint,
    n_random: int = 10_000,
    seed: int = 0,
    tol: float = 1e-12,
    exhaustive_limit: int = 16,
) -> Optional[np.ndarray]:
    """Search symmetric tests for one with pf <= reference.pf and pm < reference.pm.

    All deterministic tables are tried when |P_n| <= exhaustive_limit, then
    n_random randomized tables. Returns the first dominating table or None.
    """
    p0 = np.exp2(orbit_log_table(0, profile))
    p1 = np.exp2(orbit_log_table(1, profile))
    m = p0.size

    def _check(tables: np.ndarray) -> Optional[np.ndarray]:
        pf = tables @ p0
        pm = (1.0 - tables) @ p1
        hit = np.flatnonzero((pf <= reference.pf + tol) & (pm < reference.pm - tol))
        return tables[hit[0]] if hit.size else None

    if m <= exhaustive_limit:
        grid = np.array(list(itertools.product((0.0, 1.0), repeat=m)))
        found = _check(grid)
        if found is not None:
            return found
    rng = np.random.default_rng(seed)
    for start in range(0, n_random, 2048):
        size = min(2048, n_random - start)
        found = _check(rng.random((size, m)))
        if found is not None:
            return found
    return None
