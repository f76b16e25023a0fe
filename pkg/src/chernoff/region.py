# src/chernoff/region.py
"""Boundary of the achievable exponent region traced by the phi_lambda family.

E_0(lam) = inf { f_{P0}(T) : f_{P0}(T) - f_{P1}(T) >= lam }
E_1(lam) = inf { f_{P1}(T) : f_{P0}(T) - f_{P1}(T) <= lam }

Both sets are closed (closure convention); the infima over the strict sets
{f0 - f1 > lam} and {f0 - f1 < lam} are reported alongside, and points where
the two conventions disagree are flagged. The constraint set is a difference
of convex functions, so the infima are searched on a grid and then refined.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from loguru import logger
from scipy.optimize import brentq, minimize

from src.chernoff.efficient_test import (
    TIE_TOLERANCE,
    FunctionalPair,
    common_interval,
    lambda_range,
    simplex_grid,
)
from src.errors import RegionGridError
from src.probability.distributions import Profile, mixture

DEFAULT_RESOLUTION = {2: 1e-3, 3: 1e-2}
# Closed and open infima closer than this (bits) are reported as equal; grids on d >= 3 use 10 * resolution.
CLOSURE_TOLERANCE = 1e-6


@dataclass(frozen=True)
class RegionPoint:
    """One threshold with closed-set infima (e0, e1) and the strict-set infima (e0_open, e1_open).

    The strict sets are {f0 - f1 > lam} and {f0 - f1 < lam}; an empty strict set gives +inf.
    """

    lam: float
    e0: float
    e1: float
    resolution: float
    e0_open: float = float("inf")
    e1_open: float = float("inf")
    closures_differ: bool = False

    def as_row(self) -> dict:
        return {
            "lambda_bits": self.lam,
            "E0_bits": self.e0,
            "E1_bits": self.e1,
            "E0_open_bits": self.e0_open,
            "E1_open_bits": self.e1_open,
            "closures_differ": self.closures_differ,
            "resolution": self.resolution,
        }


class _Candidates:
    """Finite set of points with their (f0, f1) values, searched for each lambda."""

    def __init__(self, points: np.ndarray, f0: np.ndarray, f1: np.ndarray):
        self.points = points
        self.f0 = f0
        self.f1 = f1
        with np.errstate(invalid="ignore"):
            self.diff = np.where(np.isinf(f0) & np.isinf(f1), np.nan, f0 - f1)

    def infima(self, lam: float):
        upper_side = self.diff >= lam - TIE_TOLERANCE
        lower_side = self.diff <= lam + TIE_TOLERANCE
        if not upper_side.any() or not lower_side.any():
            raise RegionGridError(f"no grid point on one side of lambda={lam:.6g}")
        i0 = int(np.argmin(np.where(upper_side, self.f0, np.inf)))
        i1 = int(np.argmin(np.where(lower_side, self.f1, np.inf)))
        return float(self.f0[i0]), float(self.f1[i1]), i0, i1

    def strict_infima(self, lam: float):
        """Infima over the grid points strictly on each side of lam (+inf when a side is empty)."""
        upper = self.diff > lam + TIE_TOLERANCE
        lower = self.diff < lam - TIE_TOLERANCE
        o0 = float(np.min(self.f0[upper])) if upper.any() else float("inf")
        o1 = float(np.min(self.f1[lower])) if lower.any() else float("inf")
        return o0, o1


def _point(lam: float, closed, strict, resolution: float, tolerance: float) -> RegionPoint:
    e0, e1 = (max(v, 0.0) for v in closed)
    o0, o1 = (max(v, 0.0) for v in strict)
    differ = any(
        not (np.isinf(a) and np.isinf(b)) and not abs(a - b) <= tolerance
        for a, b in ((e0, o0), (e1, o1))
    )
    if differ:
        logger.debug("lambda={:.6g}: closed infima ({:.6g}, {:.6g}), strict ({:.6g}, {:.6g})", lam, e0, e1, o0, o1)
    return RegionPoint(lam=float(lam), e0=e0, e1=e1, resolution=resolution, e0_open=o0, e1_open=o1,
                       closures_differ=bool(differ))


def _binary_candidates(profile: Profile, resolution: float) -> np.ndarray:
    interval = common_interval(profile)
    grid = np.linspace(0.0, 1.0, int(round(1.0 / resolution)) + 1)
    extra = [mixture(profile, 0).p[1], mixture(profile, 1).p[1]]
    if interval is not None:
        extra.extend(interval)
    return np.unique(np.concatenate([grid, extra]))


def _binary_transitions(pair: FunctionalPair, ts: np.ndarray, diff: np.ndarray, lam: float) -> List[Tuple[float, bool]]:
    """Points where f0 - f1 meets lam between neighbouring finite grid points.

    The flag is True for sign changes, whose roots are limits of both strict sides.
    """
    roots = []
    finite = np.isfinite(diff)
    for i in range(ts.size - 1):
        if not (finite[i] and finite[i + 1]):
            continue
        a, b = diff[i] - lam, diff[i + 1] - lam
        if a == 0.0:
            roots.append((float(ts[i]), False))
        elif a * b < 0:
            root = brentq(lambda t: float(np.subtract(*pair.binary(t))) - lam, ts[i], ts[i + 1], xtol=1e-14)
            roots.append((root, True))
    return roots


def _binary_point(pair: FunctionalPair, cand: _Candidates, lam: float, resolution: float) -> RegionPoint:
    e0, e1, _, _ = cand.infima(lam)
    o0, o1 = cand.strict_infima(lam)
    for t, crossing in _binary_transitions(pair, cand.points, cand.diff, lam):
        f0, f1 = pair.binary(t)
        e0, e1 = min(e0, f0), min(e1, f1)
        if crossing:
            o0, o1 = min(o0, f0), min(o1, f1)
    return _point(lam, (e0, e1), (o0, o1), resolution, CLOSURE_TOLERANCE)


def _polish(pair: FunctionalPair, start: np.ndarray, lam: float, theta: int) -> Optional[float]:
    """SLSQP refinement of one side's infimum from a grid point (free coordinates T[1:])."""
    sign = 1.0 if theta == 0 else -1.0

    def as_dist(x):
        return np.concatenate([[1.0 - x.sum()], x])

    def objective(x):
        value = pair(np.clip(as_dist(x), 0.0, None))[theta]
        return value if np.isfinite(value) else 1e6

    def side(x):
        f0, f1 = pair(np.clip(as_dist(x), 0.0, None))
        diff = f0 - f1 if np.isfinite(f0 - f1) else -1e6
        return sign * (diff - lam)

    constraints = [{"type": "ineq", "fun": side}, {"type": "ineq", "fun": lambda x: 1.0 - x.sum()}]
    res = minimize(objective, start[1:], method="SLSQP", bounds=[(0.0, 1.0)] * (start.size - 1),
                   constraints=constraints, options={"ftol": 1e-12, "maxiter": 200})
    if not res.success or side(res.x) < -TIE_TOLERANCE or 1.0 - res.x.sum() < -1e-12:
        return None
    return float(res.fun)


def _simplex_point(pair: FunctionalPair, cand: _Candidates, lam: float, resolution: float) -> RegionPoint:
    e0, e1, i0, i1 = cand.infima(lam)
    if np.isfinite(e0):
        polished = _polish(pair, cand.points[i0], lam, 0)
        e0 = e0 if polished is None else min(e0, polished)
    if np.isfinite(e1):
        polished = _polish(pair, cand.points[i1], lam, 1)
        e1 = e1 if polished is None else min(e1, polished)
    return _point(lam, (e0, e1), cand.strict_infima(lam), resolution, max(CLOSURE_TOLERANCE, 10 * resolution))


def region_boundary(
    profile: Profile,
    lambdas: Optional[Sequence[float]] = None,
    n_points: int = 21,
    resolution: Optional[float] = None,
    n_jobs: int = 1,
) -> List[RegionPoint]:
    """Points (E_0(lam), E_1(lam)) on the exponent-region boundary.

    :param lambdas: thresholds inside lambda_range(profile); defaults to n_points evenly spaced
    :param resolution: grid spacing (1e-3 for binary alphabets, 1e-2 barycentric for ternary)
    :raises ValueError: when a threshold lies outside lambda_range(profile)
    :raises RegionGridError: when the grid has no point on one side of a threshold
    """
    low, high = lambda_range(profile)
    if lambdas is None:
        if not (np.isfinite(low) and np.isfinite(high)):
            raise ValueError("lambda range is unbounded; pass explicit lambdas")
        lambdas = np.linspace(low, high, n_points)
    lambdas = [float(x) for x in lambdas]
    for lam in lambdas:
        if lam < low - TIE_TOLERANCE or lam > high + TIE_TOLERANCE:
            raise ValueError(f"lambda={lam} outside [{low:.6g}, {high:.6g}]")

    d = profile.d
    resolution = resolution or DEFAULT_RESOLUTION.get(d, 0.05)
    pair = FunctionalPair(profile)
    if d == 2:
        ts = _binary_candidates(profile, resolution)
        values = np.array([pair.binary(t) for t in ts])
    else:
        ts = np.vstack([simplex_grid(d, resolution), mixture(profile, 0).p, mixture(profile, 1).p])
        values = np.array([pair(T) for T in ts])
    cand = _Candidates(ts, values[:, 0], values[:, 1])

    def point(lam):
        if d == 2:
            return _binary_point(pair, cand, lam, resolution)
        return _simplex_point(pair, cand, lam, resolution)

    points = Parallel(n_jobs=n_jobs, prefer="threads")(delayed(point)(lam) for lam in lambdas)
    if not region_monotone(points):
        logger.warning("region boundary is not monotone at resolution {}; refine the grid", resolution)
    return list(points)


def region_monotone(points: Sequence[RegionPoint], tol: float = 1e-6) -> bool:
    """E_0 nondecreasing and E_1 nonincreasing as lambda grows (A_lambda shrinks)."""
    ordered = sorted(points, key=lambda p: p.lam)
    e0 = np.array([p.e0 for p in ordered])
    e1 = np.array([p.e1 for p in ordered])
    with np.errstate(invalid="ignore"):
        ok0 = np.all(np.diff(e0[np.isfinite(e0)]) >= -tol)
        ok1 = np.all(np.diff(e1[np.isfinite(e1)]) <= tol)
    return bool(ok0 and ok1)
