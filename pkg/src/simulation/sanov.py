# src/simulation/sanov.py
"""Empirical check of the Sanov sandwich for anonymous (mixture) type measures.

For a type region G the exact probability that the type falls in G decays at a
rate between inf f_{P_theta} over the interior of G and over its closure.
Regions are given by a score function and a threshold, G = {T : score(T) >= t};
the margin widens (closure) or shrinks (interior) the threshold on the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.optimize import brentq

from src.chernoff.efficient_test import simplex_grid
from src.detection.orbit import orbit_log_table
from src.errors import DecayFitError
from src.probability.distributions import Profile, kl, mixture
from src.probability.types import type_list
from src.projection.solver import f_value
from src.simulation.decay import decay_fit
from src.utils import log2sumexp2

DEFAULT_TOLERANCE = 0.02


@dataclass(frozen=True)
class TypeRegion:
    """G = {T : score(T) >= threshold}; ``margin`` is the grid slack for int/cl G."""

    name: str
    score: Callable[[np.ndarray], float]
    threshold: float
    margin: float = 0.0

    def contains(self, T: np.ndarray, shift: float = 0.0) -> bool:
        return bool(self.score(np.asarray(T, dtype=float)) >= self.threshold + shift)


def whole_simplex() -> TypeRegion:
    return TypeRegion("whole_simplex", lambda T: 0.0, 0.0, 0.0)


def half_space(t: float, symbol: int = 1, margin: float = 0.01) -> TypeRegion:
    """{T : T(symbol) >= t}."""
    return TypeRegion(f"half_space(T[{symbol}]>={t:g})", lambda T: float(T[symbol]), float(t), margin)


def divergence_exterior(profile: Profile, theta: int, delta: float, margin: float = 0.01) -> TypeRegion:
    """{T : D(T || M_theta(alpha)) >= delta}."""
    center = mixture(profile, theta).p
    return TypeRegion(f"divergence_exterior(delta={delta:g})", lambda T: kl(T, center), float(delta), margin)


def exact_region_log_prob(theta: int, profile: Profile, region: TypeRegion) -> float:
    """log2 of the exact probability that the type of n anonymous observations lies in the region."""
    n, d = profile.n, profile.d
    inside = np.array([region.contains(np.asarray(c, dtype=float) / n) for c in type_list(n, d)])
    if not inside.any():
        return float("-inf")
    return float(log2sumexp2(orbit_log_table(theta, profile)[inside]))


def _boundary_points(region: TypeRegion, ts: np.ndarray, level: float) -> List[float]:
    scores = np.array([region.score(np.array([1 - t, t])) for t in ts]) - level
    roots = []
    for i in range(ts.size - 1):
        a, b = scores[i], scores[i + 1]
        if np.isfinite(a) and np.isfinite(b) and a * b < 0:
            roots.append(brentq(lambda t: region.score(np.array([1 - t, t])) - level, ts[i], ts[i + 1], xtol=1e-13))
    return roots


def grid_infimum(profile: Profile, theta: int, region: TypeRegion, shift: float, resolution: float = 1e-3) -> float:
    """inf of f_{P_theta} over {score >= threshold + shift}, searched on a grid.

    Binary alphabets add the points where the score crosses the level.
    """
    level = region.threshold + shift
    Q = profile.dists(theta)
    if profile.d == 2:
        ts = np.linspace(0.0, 1.0, int(round(1.0 / resolution)) + 1)
        ts = np.unique(np.concatenate([ts, _boundary_points(region, ts, level)]))
        points = np.column_stack([1.0 - ts, ts])
    else:
        points = simplex_grid(profile.d, max(resolution, 1e-2))
    best = np.inf
    for T in points:
        if region.score(T) >= level - 1e-12:
            best = min(best, f_value(T, Q, profile.alpha))
    return float(best)


@dataclass(frozen=True)
class SanovReport:
    region: str
    theta: int
    slope: float
    lower: float
    upper: float
    tolerance: float
    holds: bool
    points: Tuple[Tuple[int, float], ...] = field(default=())


def sanov_check(
    profile: Profile,
    theta: int,
    region: TypeRegion,
    n_list: Sequence[int],
    tolerance: float = DEFAULT_TOLERANCE,
    resolution: float = 1e-3,
) -> SanovReport:
    """Fit the decay of the exact region probability and bracket it by the two grid infima.

    ``profile`` supplies the group fractions; each n uses counts nu ~ alpha * n.

    :raises DecayFitError: when the region holds no type at any tested n
    """
    points = []
    for n in n_list:
        points.append((int(n), exact_region_log_prob(theta, profile.at_n(int(n)), region)))
    if all(np.isneginf(v) for _, v in points):
        raise DecayFitError(f"region {region.name} is empty at every tested n")

    fit = decay_fit(points)
    asymptotic = profile.with_alpha(profile.alpha) if profile.nu is not None else profile
    lower = grid_infimum(asymptotic, theta, region, -region.margin, resolution)
    upper = grid_infimum(asymptotic, theta, region, region.margin, resolution)
    holds = lower - tolerance <= fit.slope <= upper + tolerance
    logger.debug("sanov {} theta={}: slope={:.6f} in [{:.6f}, {:.6f}]", region.name, theta, fit.slope, lower, upper)
    if not holds:
        logger.warning("sanov sandwich fails for {}: slope {:.6f} outside [{:.6f}, {:.6f}]",
                       region.name, fit.slope, lower, upper)
    return SanovReport(region=region.name, theta=theta, slope=fit.slope, lower=lower, upper=upper,
                       tolerance=tolerance, holds=bool(holds), points=tuple(points))
