# src/utils.py
"""Base-2 log-domain helpers used by every module that sums n-fold products."""

from __future__ import annotations

from typing import Optional

import numpy as np
from scipy.special import gammaln, logsumexp

LN2 = float(np.log(2.0))


def log2sumexp2(values, weights: Optional[np.ndarray] = None, axis=None):
    """Return log2(sum(weights * 2**values)) without underflow.

    Entries equal to -inf contribute nothing; an all -inf input gives -inf.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return -np.inf
    with np.errstate(divide="ignore"):
        out = logsumexp(values * LN2, axis=axis, b=weights) / LN2
    return out


def log2_factorial(k) -> np.ndarray:
    """log2(k!) for integer arrays."""
    return gammaln(np.asarray(k, dtype=float) + 1.0) / LN2


def log2_multinomial(counts) -> float:
    """log2 of n! / prod(c!) for a count vector."""
    counts = np.asarray(counts, dtype=int)
    return float(log2_factorial(counts.sum()) - log2_factorial(counts).sum())


def safe_log2(p) -> np.ndarray:
    """Elementwise log2 with log2(0) = -inf and no warnings."""
    with np.errstate(divide="ignore"):
        return np.log2(np.asarray(p, dtype=float))


def xlog2y(x, y) -> np.ndarray:
    """x * log2(y) with the convention 0 * log2(0) = 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.zeros(np.broadcast(x, y).shape)
    mask = np.broadcast_to(x > 0, out.shape)
    with np.errstate(divide="ignore"):
        out[mask] = (np.broadcast_to(x, out.shape)[mask]
                     * np.log2(np.broadcast_to(y, out.shape)[mask]))
    return out
