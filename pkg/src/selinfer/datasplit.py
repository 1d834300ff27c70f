"""Data splitting: conditional vs. unconditional Bonferroni on split p-values,
Fisher combination, and the directional two-hypothesis example with its
calibrated-level closed-testing improvement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .core import ContractViolation, DegenerateInputError, IndexSet, PVector, normal_cdf, normal_quantile


@dataclass(frozen=True)
class SplitPValues:
    p1: PVector  # selection half
    p2: PVector  # inference half

    def __post_init__(self):
        if len(self.p1) != len(self.p2):
            raise ContractViolation("both halves need one p-value per hypothesis")

    @property
    def n(self) -> int:
        return len(self.p1)


@dataclass(frozen=True)
class DirectionalConfig:
    delta: float
    alpha: float

    def __post_init__(self):
        if not (math.isfinite(self.delta) and self.delta >= 0.0):
            raise ContractViolation(f"delta={self.delta!r} must be finite and >= 0")
        if not 0.0 < self.alpha < 1.0:
            raise ContractViolation(f"alpha={self.alpha!r} outside (0, 1)")


def _check_unit(name, v):
    if not 0.0 < v < 1.0:
        raise ContractViolation(f"{name}={v!r} outside (0, 1)")


def split_select(sp: SplitPValues, lam: float) -> IndexSet:
    _check_unit("lambda", lam)
    return IndexSet((i for i, v in enumerate(sp.p1, 1) if v <= lam), sp.n)


def split_conditional_reject(sp: SplitPValues, S: IndexSet, alpha: float) -> IndexSet:
    """Bonferroni within the selected set, on the inference half."""
    _check_unit("alpha", alpha)
    if not S:
        return IndexSet.empty(sp.n)
    return IndexSet((i for i in S if sp.p2.at(i) <= alpha / len(S)), sp.n)


def q_values(sp: SplitPValues, lam: float) -> PVector:
    """``lam * p2`` for hypotheses passing the selection threshold, 1 otherwise."""
    _check_unit("lambda", lam)
    return PVector(lam * b if a <= lam else 1.0 for a, b in zip(sp.p1, sp.p2))


def split_unconditional_reject(q: PVector, alpha: float) -> IndexSet:
    _check_unit("alpha", alpha)
    n = len(q)
    return IndexSet((i for i, v in enumerate(q, 1) if v <= alpha / n), n)


def fisher_combine(p_a: float, p_b: float) -> float:
    """Fisher's combination of two p-values.

    The chi-square(4) survival at ``-2 log(p_a p_b)`` is ``t (1 - log t)``
    with ``t = p_a p_b``.
    """
    for v in (p_a, p_b):
        if v == 0.0:
            raise DegenerateInputError("Fisher combination of a zero p-value")
        if not 0.0 < v <= 1.0:
            raise ContractViolation(f"p-value {v!r} outside (0, 1]")
    t = p_a * p_b
    return min(1.0, t * (1.0 - math.log(t)))


def _z(alpha: float) -> float:
    """Upper-tail critical value: Phi(-z) = alpha."""
    return -normal_quantile(alpha)


def solve_alpha_prime(alpha: float, delta: float) -> float:
    """Nominal level at which the closed-testing version exhausts alpha.

    Root in ``[alpha, 1)`` of
    ``a * Phi(delta) + Phi(-2 delta - z_a) * (1 - Phi(delta)) = alpha``.
    """
    _check_unit("alpha", alpha)
    if not (math.isfinite(delta) and delta >= 0.0):
        raise ContractViolation(f"delta={delta!r} must be finite and >= 0")
    pd = normal_cdf(delta)

    def excess(a):
        return a * pd + normal_cdf(-2.0 * delta - _z(a)) * (1.0 - pd) - alpha

    lo, hi = alpha, 1.0 - 1e-15
    f_lo = excess(lo)
    if f_lo >= 0.0:
        return alpha
    return optimize.bisect(excess, lo, hi, xtol=1e-12, maxiter=200)


def directional_conditional(x1: float, x2: float, cfg: DirectionalConfig) -> IndexSet:
    """Select by the sign of the first observation, then test one-sided on the second."""
    crit = cfg.delta + _z(cfg.alpha)
    if x1 < 0.0:
        return IndexSet((1,) if x2 < -crit else (), 2)
    return IndexSet((2,) if x2 > crit else (), 2)


def directional_improved(x1: float, x2: float, cfg: DirectionalConfig) -> IndexSet:
    """Closed-testing form of :func:`directional_conditional` run at the calibrated level."""
    crit = cfg.delta + _z(solve_alpha_prime(cfg.alpha, cfg.delta))
    sign = 1.0 if x1 >= 0.0 else -1.0
    if not sign * x2 > crit:
        return IndexSet.empty(2)
    if x1 < 0.0:
        return IndexSet((1,) if -x2 > crit else (), 2)
    return IndexSet((2,) if x2 > crit else (), 2)


def directional_batch(x1, x2, cfg: DirectionalConfig, improved: bool):
    """Vectorized :func:`directional_conditional` / :func:`directional_improved`.

    Returns boolean arrays ``(reject_h1, reject_h2)``.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    level = solve_alpha_prime(cfg.alpha, cfg.delta) if improved else cfg.alpha
    crit = cfg.delta + _z(level)
    neg = x1 < 0.0
    return neg & (x2 < -crit), ~neg & (x2 > crit)
