# src/analysis/byzantine.py
"""Type-II exponents under a Byzantine attack.

A fraction alpha of the sensors is controlled by an attacker who reports
i.i.d. fake observations from Q_0 (under H0) or Q_1 (under H1); the honest
sensors observe P_0 or P_1. Two exponents are compared:

* worst: the anonymous composite problem, where the fusion center does not
  know which sensors are honest;
* iid: the classical model in which every observation is drawn from the
  mixture (1 - alpha) P + alpha Q.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from loguru import logger
from scipy.optimize import minimize, minimize_scalar

from src.errors import InvalidProfileError
from src.probability.distributions import Dist, kl
from src.projection.solver import f_project
from src.utils import LN2, xlog2y

# Floor used inside smooth KL objectives for optimizer iterates that touch zero.
_FLOOR = 1e-300


@dataclass(frozen=True)
class ByzantineInstance:
    """Honest distributions under both hypotheses and the Byzantine fraction.

    :param p0: honest observation law under H0
    :param p1: honest observation law under H1
    :param alpha: fraction of Byzantine sensors, in [0, 1]
    """

    p0: Dist
    p1: Dist
    alpha: float

    def __post_init__(self):
        p0 = self.p0 if isinstance(self.p0, Dist) else Dist(self.p0)
        p1 = self.p1 if isinstance(self.p1, Dist) else Dist(self.p1)
        if p0.d != p1.d:
            raise InvalidProfileError("honest distributions must share one alphabet")
        if not 0.0 <= float(self.alpha) <= 1.0:
            raise InvalidProfileError(f"Byzantine fraction must lie in [0, 1], got {self.alpha}")
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def d(self) -> int:
        return self.p0.d

    @property
    def radius(self) -> float:
        """Largest total-variation shift alpha / (1 - alpha) the attacker can induce."""
        return np.inf if self.alpha >= 1.0 else self.alpha / (1.0 - self.alpha)

    def with_alpha(self, alpha: float) -> "ByzantineInstance":
        return ByzantineInstance(self.p0, self.p1, alpha)


def total_variation(P, Q) -> float:
    return 0.5 * float(np.abs(np.asarray(P, dtype=float) - np.asarray(Q, dtype=float)).sum())


def attack_threshold(inst: ByzantineInstance) -> float:
    """Smallest alpha at which the composite exponent vanishes: TV / (1 + TV)."""
    tv = total_variation(inst.p0.p, inst.p1.p)
    return tv / (1.0 + tv)


def _binary_kl(a: float, b: float) -> float:
    return kl(np.array([1.0 - a, a]), np.array([1.0 - b, b]))


def _simplex_min(objective, gradient, x0: np.ndarray):
    return minimize(objective, x0, jac=gradient, method="SLSQP", bounds=[(0.0, 1.0)] * x0.size,
                    constraints=[{"type": "eq", "fun": lambda x: x.sum() - 1.0}],
                    options={"ftol": 1e-14, "maxiter": 500})


def _worst_general(inst: ByzantineInstance) -> float:
    """min kl(U, P1) over U with TV(U, P0) <= rho, as SLSQP on (U, s) with s >= U - P0."""
    p0, p1, rho = inst.p0.p, inst.p1.p, inst.radius
    support = p1 > 0
    m = int(support.sum())
    deficit = 1.0 - p0[support].sum()
    if deficit > rho + 1e-15:
        return float("inf")
    q0, q1 = p0[support], p1[support]
    # feasible start: P0 on supp P1 topped up along P1
    start = q0 + deficit * q1
    x0 = np.concatenate([start, np.maximum(start - q0, 0.0)])

    def objective(x):
        return float(xlog2y(x[:m], np.maximum(x[:m], _FLOOR) / q1).sum())

    def gradient(x):
        u = np.maximum(x[:m], _FLOOR)
        return np.concatenate([np.log2(u / q1) + 1.0 / LN2, np.zeros(m)])

    constraints = [
        {"type": "eq", "fun": lambda x: x[:m].sum() - 1.0},
        {"type": "ineq", "fun": lambda x: x[m:] - (x[:m] - q0)},
        {"type": "ineq", "fun": lambda x: rho - x[m:].sum()},
    ]
    res = minimize(objective, x0, jac=gradient, method="SLSQP",
                   bounds=[(0.0, 1.0)] * m + [(0.0, None)] * m,
                   constraints=constraints, options={"ftol": 1e-14, "maxiter": 500})
    if not res.success:
        logger.warning("Byzantine worst-case SLSQP: {}", res.message)
    return max(float(res.fun), 0.0)


def byzantine_worst_exponent(inst: ByzantineInstance) -> float:
    """Composite (anonymous) type-II exponent under attack, in bits.

    Letting Q_1 equal the attackers' share V removes the second divergence, so
    the value is (1 - alpha) min { D(U || P_1) : TV(U, P_0) <= alpha / (1 - alpha) }.
    """
    a = inst.alpha
    if a >= 1.0:
        return 0.0
    if a == 0.0:
        return kl(inst.p0, inst.p1)
    if a >= attack_threshold(inst):
        return 0.0
    if inst.d == 2:
        p0, p1, rho = inst.p0.p[1], inst.p1.p[1], inst.radius
        u = float(np.clip(p1, max(p0 - rho, 0.0), min(p0 + rho, 1.0)))
        return (1.0 - a) * _binary_kl(u, p1)
    return (1.0 - a) * _worst_general(inst)


def _mixture_bounds(p: float, a: float) -> Tuple[float, float]:
    return (1 - a) * p, (1 - a) * p + a


def _iid_alternating(inst: ByzantineInstance, rounds: int = 200, tol: float = 1e-13) -> float:
    a = inst.alpha
    base0, base1 = (1 - a) * inst.p0.p, (1 - a) * inst.p1.p
    q0 = inst.p1.p.copy()
    q1 = inst.p0.p.copy()

    def value(x0, x1):
        return kl(base0 + a * x0, base1 + a * x1)

    def grad0(x, other):
        r0 = np.maximum(base0 + a * x, _FLOOR)
        r1 = np.maximum(base1 + a * other, _FLOOR)
        return a * (np.log2(r0 / r1) + 1.0 / LN2)

    def grad1(x, other):
        r0 = base0 + a * other
        r1 = np.maximum(base1 + a * x, _FLOOR)
        return -a * r0 / (r1 * LN2)

    current = value(q0, q1)
    for _ in range(rounds):
        res0 = _simplex_min(lambda x: value(np.clip(x, 0, None), q1), lambda x: grad0(x, q1), q0)
        q0 = np.clip(res0.x, 0.0, None) / np.clip(res0.x, 0.0, None).sum()
        res1 = _simplex_min(lambda x: value(q0, np.clip(x, 0, None)), lambda x: grad1(x, q0), q1)
        q1 = np.clip(res1.x, 0.0, None) / np.clip(res1.x, 0.0, None).sum()
        new = value(q0, q1)
        if current - new <= tol:
            current = min(current, new)
            break
        current = new
    return max(float(current), 0.0)


def byzantine_iid_exponent(inst: ByzantineInstance) -> float:
    """min over Q_0, Q_1 of D((1 - alpha) P_0 + alpha Q_0 || (1 - alpha) P_1 + alpha Q_1), in bits."""
    a = inst.alpha
    if a == 0.0:
        return kl(inst.p0, inst.p1)
    if a >= 1.0:
        return 0.0
    if inst.d == 2:
        lo0, hi0 = _mixture_bounds(inst.p0.p[1], a)
        lo1, hi1 = _mixture_bounds(inst.p1.p[1], a)
        if hi0 >= lo1 and hi1 >= lo0:
            return 0.0
        # KL between Bernoullis grows as the parameters move apart
        r0, r1 = (hi0, lo1) if hi0 < lo1 else (lo0, hi1)
        return _binary_kl(r0, r1)
    return _iid_alternating(inst)


# Oracles: independent routes to the same numbers, used by the tests and the validate command.


def byzantine_iid_oracle(inst: ByzantineInstance, step: float = 1e-3) -> float:
    """Binary alphabets: exhaustive grid over (Q_0(1), Q_1(1))."""
    if inst.d != 2:
        raise InvalidProfileError("the grid oracle supports binary alphabets only")
    a = inst.alpha
    q = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    r0 = ((1 - a) * inst.p0.p[1] + a * q)[:, None]
    r1 = ((1 - a) * inst.p1.p[1] + a * q)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        table = xlog2y(r0, np.where(r0 > 0, r0 / r1, 1.0)) + xlog2y(1 - r0, np.where(r0 < 1, (1 - r0) / (1 - r1), 1.0))
    table = np.where(np.isnan(table), np.inf, table)
    return max(float(table.min()), 0.0)


def _composite_value(inst: ByzantineInstance, q0: np.ndarray, q1: np.ndarray) -> float:
    a = inst.alpha
    target = (1 - a) * inst.p0.p + a * q0
    return f_project(target / target.sum(), (inst.p1, q1), (1 - a, a)).value


def byzantine_worst_oracle(inst: ByzantineInstance, step: float = 1e-2) -> float:
    """Binary alphabets: the unreduced minimisation, nested over Q_0 then Q_1 with f_project inside."""
    if inst.d != 2:
        raise InvalidProfileError("the nested oracle supports binary alphabets only")
    if inst.alpha in (0.0, 1.0):
        return byzantine_worst_exponent(inst)

    def inner(x0: float) -> float:
        q0 = np.array([1 - x0, x0])
        res = minimize_scalar(lambda x1: _composite_value(inst, q0, np.array([1 - x1, x1])),
                              bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-10})
        return float(res.fun)

    grid = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    values = np.array([inner(x) for x in grid])
    i = int(np.argmin(values))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    res = minimize_scalar(inner, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    return max(min(float(values[i]), float(res.fun)), 0.0)


def alternating_worst_exponent(inst: ByzantineInstance, rounds: int = 100, tol: float = 1e-12) -> float:
    """Unreduced minimisation by alternating between Q_1 and the block (Q_0, U, V).

    With Q_1 fixed the inner problem is an information projection over Q_0; with
    (Q_0, U, V) fixed the best Q_1 is V.
    """
    a = inst.alpha
    if a in (0.0, 1.0):
        return byzantine_worst_exponent(inst)
    d = inst.d
    q1 = inst.p1.p.copy()
    q0 = inst.p0.p.copy()
    current = np.inf

    def over_q0(x: np.ndarray) -> float:
        if np.any(x < 0) or x.sum() > 1:
            return np.inf
        return _composite_value(inst, np.concatenate([[1 - x.sum()], x]), q1)

    for _ in range(rounds):
        if d == 2:
            res = minimize_scalar(lambda x: over_q0(np.array([x])), bounds=(0.0, 1.0), method="bounded",
                                  options={"xatol": 1e-12})
            x = np.array([res.x])
        else:
            res = minimize(over_q0, q0[1:], method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-13})
            x = res.x
        q0 = np.concatenate([[1 - x.sum()], x])
        result = f_project(((1 - a) * inst.p0.p + a * q0) / ((1 - a) * inst.p0.p + a * q0).sum(),
                           (inst.p1, q1), (1 - a, a))
        q1 = result.u[1].p.copy()
        # with Q_1 = V only the honest term remains
        new = (1 - a) * kl(result.u[0], inst.p1)
        if current - new <= tol:
            current = min(current, new)
            break
        current = new
    return max(float(current), 0.0)
