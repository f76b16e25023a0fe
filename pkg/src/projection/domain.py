# src/projection/domain.py
"""The domain C_Q = {T : f_Q(T) < inf} and the support reduction used by the solver."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.optimize import linprog

from src.errors import InvalidProfileError
from src.probability.distributions import DistLike, as_array

# An LP optimum at or below this is treated as a structural zero.
ZERO_TOLERANCE = 1e-10


@dataclass(frozen=True)
class SupportMask:
    """Which cells w[k, x] = alpha_k U_k(x) may be positive at a feasible point.

    ``cells`` is K x d. A cell is off when Q_k(x) = 0, when T(x) = 0, or when
    every feasible decomposition of T puts zero mass there.
    """

    feasible: bool
    cells: np.ndarray
    reduced: bool


def coerce_inputs(T: DistLike, Q: Sequence[DistLike], alpha) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    t = as_array(T)
    q = np.vstack([as_array(x) for x in Q])
    a = np.asarray(alpha, dtype=float).ravel()
    if q.shape[0] != a.size:
        raise InvalidProfileError(f"{q.shape[0]} group distributions but {a.size} weights")
    if q.shape[1] != t.size:
        raise InvalidProfileError(f"T has {t.size} symbols, groups have {q.shape[1]}")
    return t, q, a


class _CellLP:
    """Transportation-style polytope {w >= 0 : sum_k w[k,x] = T(x), sum_x w[k,x] = alpha_k}."""

    def __init__(self, t: np.ndarray, q: np.ndarray, a: np.ndarray):
        active = a > 0
        candidate = (q > 0) & (t > 0)[None, :] & active[:, None]
        self.cells: List[Tuple[int, int]] = [tuple(c) for c in np.argwhere(candidate)]
        self.shape = q.shape
        rows, rhs = [], []
        for x in np.flatnonzero(t > 0):
            rows.append([1.0 if c[1] == x else 0.0 for c in self.cells])
            rhs.append(t[x])
        for k in np.flatnonzero(active):
            rows.append([1.0 if c[0] == k else 0.0 for c in self.cells])
            rhs.append(a[k])
        self.A_eq = np.array(rows, dtype=float).reshape(len(rows), len(self.cells))
        self.b_eq = np.array(rhs, dtype=float)

    def solve(self, cost: np.ndarray):
        if not self.cells:
            return None
        res = linprog(cost, A_eq=self.A_eq, b_eq=self.b_eq, bounds=(0, None), method="highs")
        return res if res.status == 0 else None


def in_domain(T: DistLike, Q: Sequence[DistLike], alpha) -> bool:
    """True iff T = sum_k alpha_k U_k for some U_k absolutely continuous w.r.t. Q_k."""
    t, q, a = coerce_inputs(T, Q, alpha)
    if np.all(q[a > 0][:, t > 0] > 0):
        return True
    lp = _CellLP(t, q, a)
    return lp.solve(np.zeros(len(lp.cells))) is not None


def support_mask(T: DistLike, Q: Sequence[DistLike], alpha) -> SupportMask:
    t, q, a = coerce_inputs(T, Q, alpha)
    cells = np.zeros(q.shape, dtype=bool)
    active = a > 0
    possible = (q > 0) & active[:, None]
    on_support = t > 0
    if np.all(possible[active][:, on_support]):
        # alpha_k * T is a strictly positive feasible point on every candidate cell
        cells[active] = on_support
    else:
        lp = _CellLP(t, q, a)
        if lp.solve(np.zeros(len(lp.cells))) is None:
            return SupportMask(feasible=False, cells=cells, reduced=False)
        for i, (k, x) in enumerate(lp.cells):
            cost = np.zeros(len(lp.cells))
            cost[i] = -1.0
            res = lp.solve(cost)
            cells[k, x] = res is not None and -res.fun > ZERO_TOLERANCE
        forced = len(lp.cells) - int(cells.sum())
        if forced:
            logger.debug("support reduction: {} cells forced to zero", forced)
    reduced = bool(np.any(possible & ~cells))
    return SupportMask(feasible=True, cells=cells, reduced=reduced)


def domain_interval(Q: Sequence[DistLike], alpha) -> Tuple[float, float]:
    """For a binary alphabet, C_Q as the interval of attainable T(1)."""
    q = np.vstack([as_array(x) for x in Q])
    a = np.asarray(alpha, dtype=float).ravel()
    if q.shape[1] != 2:
        raise InvalidProfileError("domain_interval is defined for binary alphabets only")
    low = float(a @ np.where(q[:, 0] > 0, 0.0, 1.0))
    high = float(a @ np.where(q[:, 1] > 0, 1.0, 0.0))
    return low, high
