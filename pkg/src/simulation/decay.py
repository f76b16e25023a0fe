# src/simulation/decay.py
"""Empirical decay rates of error probabilities along a sequence of n."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np
from loguru import logger

from src.errors import DecayFitError

MIN_POINTS = 3
# Smallest n used by the second-order fit.
EXTRAPOLATION_MIN_N = 60


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of -log2(error) = slope * n + intercept."""

    slope: float
    intercept: float
    residual: float
    points_used: int


def _usable(points: Iterable[Tuple[int, float]]) -> Tuple[np.ndarray, np.ndarray]:
    pts = sorted((int(n), float(v)) for n, v in points)
    kept = [(n, v) for n, v in pts if np.isfinite(v)]
    dropped = len(pts) - len(kept)
    if dropped:
        logger.warning("dropped {} points with zero error probability from the decay fit", dropped)
    ns = np.array([n for n, _ in kept], dtype=float)
    ys = -np.array([v for _, v in kept], dtype=float)
    if ns.size < MIN_POINTS:
        raise DecayFitError(f"need at least {MIN_POINTS} points with positive error, got {ns.size}")
    if np.unique(ns).size != ns.size:
        raise DecayFitError(f"repeated n values in decay fit: {ns.astype(int).tolist()}")
    return ns, ys


def decay_fit(points: Iterable[Tuple[int, float]]) -> DecayFit:
    """Fit the decay rate of (n, log2 error) pairs.

    Points with error 0 (log2 = -inf) are dropped with a warning.

    :raises DecayFitError: with fewer than three usable points or repeated n
    """
    ns, ys = _usable(points)
    slope, intercept = np.polyfit(ns, ys, 1)
    residual = float(np.sqrt(np.mean((ys - (slope * ns + intercept)) ** 2)))
    return DecayFit(slope=float(slope), intercept=float(intercept), residual=residual, points_used=int(ns.size))


def extrapolated_exponent(points: Iterable[Tuple[int, float]], min_n: int = EXTRAPOLATION_MIN_N) -> float:
    """Exponent E from a least-squares fit of -log2(error) = E n + b sqrt(n) + c over n >= min_n.

    :raises DecayFitError: with fewer than three usable points at n >= min_n
    """
    ns, ys = _usable(points)
    keep = ns >= min_n
    if int(keep.sum()) < MIN_POINTS:
        raise DecayFitError(f"need at least {MIN_POINTS} points with n >= {min_n}, got {int(keep.sum())}")
    ns, ys = ns[keep], ys[keep]
    design = np.column_stack([ns, np.sqrt(ns), np.ones_like(ns)])
    coefficients, *_ = np.linalg.lstsq(design, ys, rcond=None)
    return float(coefficients[0])
