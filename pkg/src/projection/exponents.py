# src/projection/exponents.py
"""Neyman-Pearson type-II exponents of the anonymous and the informed problems."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from src.probability.distributions import DistLike, Profile, as_array, kl, mixture
from src.projection.solver import ProjectionResult, f_project


def divergence_alpha(P: Sequence[DistLike], Q: Sequence[DistLike], alpha) -> float:
    """D_alpha(P; Q) = f_Q(sum_k alpha_k P_k)."""
    a = np.asarray(alpha, dtype=float)
    target = a @ np.vstack([as_array(p) for p in P])
    return f_project(target / target.sum(), Q, a).value


def projection_np(profile: Profile) -> ProjectionResult:
    return f_project(mixture(profile, 0), profile.p1, profile.alpha)


def exponent_np(profile: Profile) -> float:
    """Type-II exponent of the anonymous problem, D_alpha(P_0; P_1), in bits."""
    return projection_np(profile).value


def exponent_informed(profile: Profile) -> float:
    """sum_k alpha_k D(P_{0;k} || P_{1;k}): the exponent when group labels are known."""
    total = 0.0
    for a_k, p0, p1 in zip(profile.alpha, profile.p0, profile.p1):
        if a_k > 0:
            total += a_k * kl(p0, p1)
    return float(total)


def price_of_anonymity(profile: Profile) -> float:
    """Exponent lost to anonymity: informed minus anonymous (>= 0)."""
    informed = exponent_informed(profile)
    anonymous = exponent_np(profile)
    if np.isinf(informed):
        return float("inf") if np.isfinite(anonymous) else float("nan")
    return informed - anonymous
