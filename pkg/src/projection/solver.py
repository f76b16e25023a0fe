# src/projection/solver.py
"""Information projection onto a mixture constraint.

f_project computes

    f_Q(T) = inf { sum_k alpha_k D(U_k || Q_k) : sum_k alpha_k U_k = T }

by damped Newton ascent on the concave dual

    g(lam) = - sum_k alpha_k log2 Z_k(lam) - sum_x lam(x) T(x),
    Z_k(lam) = sum_x Q_k(x) 2^{-lam(x)},

and recovers the optimizers as U_k(x) = Q_k(x) 2^{-lam(x)} / Z_k(lam), one
tilt shared by all groups. The tilt is gauge-fixed to zero at the first symbol
in the support of T.

The ascent starts at lam = log2(Qbar / T), Qbar = sum_k alpha_k Q_k, which is
the optimum when a single group is active. If Newton stalls, the dual is
handed to scipy's trust-region solver and then polished again.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.optimize import minimize, minimize_scalar

from src.errors import ProjectionError
from src.probability.distributions import Dist, DistLike, kl
from src.projection.domain import coerce_inputs, support_mask
from src.utils import LN2, log2sumexp2, safe_log2, xlog2y

# Constraint residual per (group, symbol) cell; the stop rule scales it by K * d.
RESIDUAL_TOLERANCE = 1e-11
# Residual above which a solution is not returned at all.
ACCEPT_RESIDUAL = 1e-7
MAX_ITERATIONS = 200
MAX_HALVINGS = 60
ARMIJO = 1e-4
# Relative change of the dual value that float arithmetic no longer resolves.
VALUE_RESOLUTION = 1e-12
GAP_TOLERANCE = 1e-8
# Singular values of the Newton system below this fraction of the largest are dropped.
SINGULAR_RCOND = 1e-13

CONVERGED = "converged"
BOUNDARY = "boundary"
INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class ProjectionResult:
    """Value of f_Q(T) with its optimizers, dual tilt and solver diagnostics.

    ``tilt`` is +inf on symbols outside the support of T.
    """

    value: float
    u: Tuple[Dist, ...]
    tilt: np.ndarray
    status: str
    iterations: int = 0
    gap: float = 0.0
    residual: float = 0.0
    meta: dict = field(default_factory=dict, repr=False)

    @property
    def feasible(self) -> bool:
        return self.status != INFEASIBLE


class _Dual:
    """The dual objective restricted to supp T and the allowed (group, symbol) cells."""

    def __init__(self, t: np.ndarray, q: np.ndarray, a: np.ndarray, cells: np.ndarray):
        self.t = t
        self.a = a
        # log2 Q with disallowed cells removed
        self.log_q = np.where(cells, safe_log2(q), -np.inf)

    def start(self) -> np.ndarray:
        log_mix = log2sumexp2(self.log_q, weights=self.a[:, None], axis=0)
        lam = log_mix - np.log2(self.t)
        return lam - lam[0]

    def evaluate(self, lam: np.ndarray):
        shifted = self.log_q - lam[None, :]
        log_z = log2sumexp2(shifted, axis=1)
        U = np.exp2(shifted - log_z[:, None])
        value = -float(self.a @ log_z) - float(lam @ self.t)
        grad = self.a @ U - self.t
        return value, grad, U

    def hessian(self, U: np.ndarray) -> np.ndarray:
        H = np.zeros((U.shape[1], U.shape[1]))
        for a_k, u in zip(self.a, U):
            H -= a_k * (np.diag(u) - np.outer(u, u))
        return LN2 * H


def _newton(dual: _Dual, lam: np.ndarray, free: np.ndarray, tol: float):
    value, grad, U = dual.evaluate(lam)
    iterations = 0
    while iterations < MAX_ITERATIONS and free.size:
        residual = float(np.max(np.abs(grad)))
        if residual <= tol and abs(float(lam @ grad)) <= 0.1 * GAP_TOLERANCE:
            break
        iterations += 1

        g_free = grad[free]
        H = dual.hessian(U)[np.ix_(free, free)]
        direction = np.linalg.lstsq(H, -g_free, rcond=SINGULAR_RCOND)[0]
        slope = float(direction @ g_free)
        if not np.isfinite(slope) or slope <= 0:
            logger.debug("projection: no Newton ascent direction at iteration {}, gradient step", iterations)
            direction = g_free / LN2
            slope = float(direction @ g_free)

        step = 1.0
        accepted = None
        for _ in range(MAX_HALVINGS):
            trial = lam.copy()
            trial[free] += step * direction
            t_value, t_grad, t_U = dual.evaluate(trial)
            if np.isfinite(t_value):
                if t_value > value and t_value >= value + ARMIJO * step * slope:
                    accepted = (trial, t_value, t_grad, t_U)
                    break
                # the value has stopped resolving; judge the step by the residual instead
                unresolved = abs(t_value - value) <= VALUE_RESOLUTION * max(1.0, abs(value))
                if unresolved and np.max(np.abs(t_grad)) < residual:
                    accepted = (trial, t_value, t_grad, t_U)
                    break
            step *= 0.5
        if accepted is None:
            break
        lam, value, grad, U = accepted
    return lam, value, grad, U, iterations


def _trust_region(dual: _Dual, lam: np.ndarray, free: np.ndarray, tol: float) -> np.ndarray:
    def negated(x):
        full = lam.copy()
        full[free] = x
        value, grad, _ = dual.evaluate(full)
        return -value, -grad[free]

    def hessian(x):
        full = lam.copy()
        full[free] = x
        _, _, U = dual.evaluate(full)
        return -dual.hessian(U)[np.ix_(free, free)]

    try:
        res = minimize(negated, lam[free], jac=True, hess=hessian, method="trust-exact",
                       options={"gtol": tol, "maxiter": 1000})
    except (np.linalg.LinAlgError, ValueError) as e:
        logger.debug("projection: trust region failed: {}", e)
        return lam
    if not np.all(np.isfinite(res.x)):
        return lam
    out = lam.copy()
    out[free] = res.x
    return out


def _single_group(t: np.ndarray, q: np.ndarray, a: np.ndarray, k: int, status: str) -> ProjectionResult:
    """Only group k carries weight, so U_k = T."""
    K, d = q.shape
    support = np.flatnonzero(t > 0)
    tilt = np.full(d, np.inf)
    lam = np.log2(q[k, support]) - np.log2(t[support])
    tilt[support] = lam - lam[0]
    dists = tuple(Dist(t) if j == k else Dist(q[j]) for j in range(K))
    return ProjectionResult(value=kl(t, q[k]), u=dists, tilt=tilt, status=status,
                            meta={"support": support.tolist(), "certified": True})


def f_project(T: DistLike, Q: Sequence[DistLike], alpha) -> ProjectionResult:
    """Solve the information projection of T onto the alpha-mixtures of distributions dominated by Q.

    :param T: target distribution
    :param Q: one reference distribution per group
    :param alpha: group weights (nonnegative, summing to 1)
    :return: ProjectionResult; value is +inf and status "infeasible" when T lies outside C_Q
    :raises ProjectionError: if no dual point reproduces T to within ACCEPT_RESIDUAL
    """
    t, q, a = coerce_inputs(T, Q, alpha)
    K, d = q.shape
    mask = support_mask(t, q, a)
    if not mask.feasible:
        return ProjectionResult(value=float("inf"), u=(), tilt=np.full(d, np.nan), status=INFEASIBLE)
    status = BOUNDARY if mask.reduced else CONVERGED

    active = np.flatnonzero(a > 0)
    if active.size == 1:
        return _single_group(t, q, a, int(active[0]), status)

    support = np.flatnonzero(t > 0)
    free = np.arange(1, support.size)
    tol = RESIDUAL_TOLERANCE * K * d

    dual = _Dual(t[support], q[np.ix_(active, support)], a[active], mask.cells[np.ix_(active, support)])
    lam, dual_value, grad, U, iterations = _newton(dual, dual.start(), free, tol)
    residual = float(np.max(np.abs(grad)))
    if not residual <= tol:
        logger.debug("projection: Newton stalled at residual {:.2e}, switching to trust region", residual)
        lam = _trust_region(dual, lam, free, tol)
        lam, dual_value, grad, U, extra = _newton(dual, lam, free, tol)
        iterations += extra
        residual = float(np.max(np.abs(grad)))
    if not np.isfinite(residual) or residual > ACCEPT_RESIDUAL:
        raise ProjectionError(
            f"dual ascent stopped after {iterations} iterations with constraint residual {residual:.3e}"
        )
    if residual > tol:
        logger.warning("projection certified only to constraint residual {:.2e}", residual)

    u_full = np.zeros((K, d))
    u_full[np.ix_(active, support)] = U
    dists = []
    for k in range(K):
        dists.append(Dist(u_full[k] / u_full[k].sum()) if a[k] > 0 else Dist(q[k]))
    value = float(sum(a[k] * kl(dists[k], q[k]) for k in active))
    gap = abs(value - dual_value)
    if gap > GAP_TOLERANCE:
        logger.warning("projection duality gap {:.2e} exceeds {:.0e}", gap, GAP_TOLERANCE)

    tilt = np.full(d, np.inf)
    tilt[support] = lam
    logger.debug("projection {} in {} iterations, value={:.6g}, gap={:.2e}", status, iterations, value, gap)
    return ProjectionResult(
        value=value,
        u=tuple(dists),
        tilt=tilt,
        status=status,
        iterations=iterations,
        gap=gap,
        residual=residual,
        meta={"support": support.tolist(), "cells": mask.cells, "certified": residual <= tol},
    )


def f_value(T: DistLike, Q: Sequence[DistLike], alpha) -> float:
    """Shorthand for f_project(...).value."""
    return f_project(T, Q, alpha).value


# Oracle for binary alphabets: direct minimisation over the primal variables.


def _binary_kl(u: np.ndarray, q: float) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = xlog2y(u, u / q if q > 0 else np.where(u > 0, np.inf, 1.0))
        out = out + xlog2y(1.0 - u, (1.0 - u) / (1.0 - q) if q < 1 else np.where(u < 1, np.inf, 1.0))
    return np.where(np.isnan(out), np.inf, out)


def _feasible_range(t: float, a: np.ndarray, fixed: float) -> Tuple[float, float]:
    """Range of U_1(1) that leaves sum_k a_k U_k(1) = t reachable by the remaining groups."""
    rest = a[1:].sum()
    lo = max(0.0, (t - fixed - rest) / a[0])
    hi = min(1.0, (t - fixed) / a[0])
    return lo, hi


def brute_force_project(T: DistLike, Q: Sequence[DistLike], alpha, step: float = 1e-5) -> float:
    """f_Q(T) for d = 2 and K <= 3 by grid search on the primal, polished by bounded scalar minimisation."""
    t, q, a = coerce_inputs(T, Q, alpha)
    K, d = q.shape
    if d != 2 or K > 3:
        raise ValueError("the brute-force projection supports d = 2 and K <= 3 only")
    keep = a > 0
    q1, a = q[keep, 1], a[keep] / a[keep].sum()
    target = t[1]
    if a.size == 1:
        return float(_binary_kl(target, q1[0]))

    if a.size == 2:
        lo, hi = _feasible_range(target, a, 0.0)
        if lo > hi + 1e-15:
            return float("inf")

        def objective(u):
            u = np.clip(u, lo, hi)
            rest = np.clip((target - a[0] * u) / a[1], 0.0, 1.0)
            return a[0] * _binary_kl(u, q1[0]) + a[1] * _binary_kl(rest, q1[1])

        grid = np.concatenate([np.arange(lo, hi, step), [lo, hi]])
        values = objective(grid)
        i = int(np.argmin(values))
        best = float(values[i])
        if not np.isfinite(best):
            return float("inf")
        left, right = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
        left, right = min(left, right, grid[i]), max(left, right, grid[i])
        if right > left:
            res = minimize_scalar(lambda u: float(objective(u)), bounds=(left, right), method="bounded",
                                  options={"xatol": 1e-13})
            best = min(best, float(res.fun))
        return max(best, 0.0)

    # K = 3: nested convex minimisation, outer over U_1(1), inner over U_2(1)
    def inner(u1: float) -> float:
        sub = a[1:] / a[1:].sum()
        reduced = (target - a[0] * u1) / a[1:].sum()
        if reduced < -1e-15 or reduced > 1 + 1e-15:
            return np.inf
        return brute_force_project([1 - min(max(reduced, 0.0), 1.0), min(max(reduced, 0.0), 1.0)],
                                   [[1 - q1[1], q1[1]], [1 - q1[2], q1[2]]], sub, step=max(step, 1e-4))

    lo, hi = _feasible_range(target, a, 0.0)
    if lo > hi + 1e-15:
        return float("inf")
    outer = np.linspace(lo, hi, 201)
    values = np.array([a[0] * _binary_kl(u, q1[0]) + a[1:].sum() * inner(u) for u in outer])
    i = int(np.argmin(values))
    if not np.isfinite(values[i]):
        return float("inf")
    left, right = outer[max(i - 1, 0)], outer[min(i + 1, outer.size - 1)]
    best = float(values[i])
    if right > left:
        res = minimize_scalar(lambda u: float(a[0] * _binary_kl(u, q1[0]) + a[1:].sum() * inner(u)),
                              bounds=(left, right), method="bounded", options={"xatol": 1e-12})
        best = min(best, float(res.fun))
    return max(best, 0.0)
