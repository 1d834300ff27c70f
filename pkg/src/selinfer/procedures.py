"""Classical multiple-testing rules and randomized improvement wrappers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ContractViolation, IndexSet, PVector, RngStream, uniform01


def _check_alpha(alpha, upper=1.0):
    if not 0.0 < alpha < upper:
        raise ContractViolation(f"alpha={alpha!r} outside (0, {upper})")


def bonferroni(p: PVector, alpha: float) -> IndexSet:
    _check_alpha(alpha)
    n = len(p)
    return IndexSet((i for i, v in enumerate(p, 1) if v <= alpha / n), n)


def hochberg2(p1: float, p2: float, alpha: float) -> IndexSet:
    """Hochberg (equivalently Hommel) for two hypotheses."""
    _check_alpha(alpha)
    if p1 <= alpha and p2 <= alpha:
        return IndexSet.full(2)
    return IndexSet((i for i, v in ((1, p1), (2, p2)) if v <= alpha / 2), 2)


def bh(p: PVector, alpha: float) -> IndexSet:
    """Benjamini-Hochberg step-up."""
    _check_alpha(alpha)
    vals = p.as_array()
    n = vals.size
    order = np.argsort(vals, kind="stable")
    ok = np.flatnonzero(vals[order] <= np.arange(1, n + 1) * alpha / n)
    if ok.size == 0:
        return IndexSet.empty(n)
    k = ok[-1] + 1
    return IndexSet((order[:k] + 1).tolist(), n)


def mabh2(p1: float, p2: float, alpha: float) -> IndexSet:
    """Minimally adaptive BH for two hypotheses (alpha <= 1/2)."""
    if not 0.0 < alpha <= 0.5:
        raise ContractViolation(f"mabh2 needs alpha in (0, 1/2], got {alpha!r}")
    lo, hi = min(p1, p2), max(p1, p2)
    if (p1 <= alpha and p2 <= alpha) or (lo <= alpha / 2 and hi <= 2 * alpha):
        return IndexSet.full(2)
    return IndexSet((i for i, v in ((1, p1), (2, p2)) if v <= alpha / 2), 2)


def fixed_sequence_fdr2(p_first: float, p_second: float, alpha: float) -> IndexSet:
    """Test the first hypothesis at alpha, then the second at 2 * alpha."""
    if not 0.0 < alpha <= 0.5:
        raise ContractViolation(f"fixed_sequence_fdr2 needs alpha in (0, 1/2], got {alpha!r}")
    if p_first > alpha:
        return IndexSet.empty(2)
    if p_second <= 2 * alpha:
        return IndexSet.full(2)
    return IndexSet((1,), 2)


@dataclass(frozen=True)
class MixtureImprovementConfig:
    q: float
    fallback: IndexSet

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ContractViolation(f"mixture probability q={self.q!r} outside [0, 1]")


def mixture_improvement(R: IndexSet, cfg: MixtureImprovementConfig, stream: RngStream) -> IndexSet:
    """Keep ``R`` with probability ``q``, otherwise return the fallback superset."""
    if not R.issubset(cfg.fallback):
        raise ContractViolation("R must be a subset of the fallback set")
    return R if uniform01(stream) < cfg.q else cfg.fallback


def prop1_q(alpha: float, delta: float) -> float:
    """Mixing weight that keeps the mixture at level alpha.

    ``delta`` is a known lower bound on the probability that the selected set
    contains no true hypothesis.
    """
    if not (0.0 < alpha < 1.0 and 0.0 < delta < 1.0):
        raise ContractViolation("alpha and delta must lie in (0, 1)")
    if delta >= 1.0 - alpha:
        return 0.0
    return (1.0 - alpha - delta) / ((1.0 - alpha) * (1.0 - delta))


def fwer_recycle(R: IndexSet, S: IndexSet, U_size: int, alpha: float, stream: RngStream) -> IndexSet:
    """When every selected hypothesis is rejected, expand to the universe with probability alpha."""
    _check_alpha(alpha)
    if not R.issubset(S):
        raise ContractViolation("R must be a subset of S")
    if R.universe_size != U_size:
        raise ContractViolation("universe size mismatch")
    if R.members == S.members and uniform01(stream) < alpha:
        return IndexSet.full(U_size)
    return R
