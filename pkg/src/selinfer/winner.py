"""Inference on the single winner (the hypothesis with the smallest p-value)."""

from __future__ import annotations

from dataclasses import dataclass

from .core import ContractViolation, DegenerateInputError, IndexSet, PVector
from .procedures import bh


@dataclass(frozen=True)
class WinnerResult:
    winner: int
    adjusted_p_winner: float
    rejected: IndexSet
    procedure: str


def _check(p: PVector, alpha: float):
    if len(p) < 2:
        raise ContractViolation("winner procedures need at least two hypotheses")
    if not 0.0 < alpha < 1.0:
        raise ContractViolation(f"alpha={alpha!r} outside (0, 1)")


def winner_select(p: PVector) -> int:
    """Index of the smallest p-value; ties go to the lowest index."""
    if len(p) < 2:
        raise ContractViolation("winner selection needs at least two hypotheses")
    vals = p.values
    return min(range(len(vals)), key=lambda k: (vals[k], k)) + 1


def winner_adjust_selected(p: PVector, i: int) -> float:
    """Ratio of the winner's p-value to the smallest competing one.

    Uniform given that ``i`` won, under the null for ``i``.  A 0/0 ratio
    (two zero p-values) is taken as 0.
    """
    if i != winner_select(p):
        raise ContractViolation(f"hypothesis {i} is not the winner")
    pi = p.at(i)
    runner_up = min(v for k, v in enumerate(p, 1) if k != i)
    if runner_up == 0.0:
        if pi == 0.0:
            return 0.0
        raise DegenerateInputError("smallest competing p-value is zero")
    return pi / runner_up


def winner_adjust_nonselected(p_j: float, p_i: float) -> float:
    """Non-winner ``j`` adjusted for losing to winner ``i``: (p_j - p_i) / (1 - p_i)."""
    if p_i >= 1.0:
        raise DegenerateInputError("winner p-value equals 1")
    if p_j < p_i:
        raise ContractViolation("a non-selected p-value cannot be below the winner's")
    return (p_j - p_i) / (1.0 - p_i)


def procedure_a(p: PVector, alpha: float) -> WinnerResult:
    _check(p, alpha)
    i = winner_select(p)
    adj = winner_adjust_selected(p, i)
    rejected = IndexSet((i,) if adj <= alpha else (), len(p))
    return WinnerResult(i, adj, rejected, "A")


def procedure_b(p: PVector, alpha: float) -> WinnerResult:
    """Procedure A followed, after a rejection, by BH at level n*alpha/(n-1)
    on the non-winners' adjusted p-values."""
    _check(p, alpha)
    n = len(p)
    level = n * alpha / (n - 1)
    if level >= 1.0:
        raise ContractViolation(f"second-stage level {level} is not below 1")
    first = procedure_a(p, alpha)
    if not first.rejected:
        return WinnerResult(first.winner, first.adjusted_p_winner, first.rejected, "B")
    i = first.winner
    others = [k for k in range(1, n + 1) if k != i]
    q = PVector(winner_adjust_nonselected(p.at(k), p.at(i)) for k in others)
    stage2 = bh(q, level)
    rejected = IndexSet([i] + [others[k - 1] for k in stage2], n)
    return WinnerResult(i, first.adjusted_p_winner, rejected, "B")


def procedure_c(p: PVector, alpha: float) -> WinnerResult:
    """Reject the winner when its raw p-value is below 1 - (1 - alpha)^(1/n)."""
    _check(p, alpha)
    n = len(p)
    i = winner_select(p)
    rejected = IndexSet((i,) if p.at(i) <= 1.0 - (1.0 - alpha) ** (1.0 / n) else (), n)
    runner_up = min(v for k, v in enumerate(p, 1) if k != i)
    adj = p.at(i) / runner_up if runner_up > 0 else 0.0
    return WinnerResult(i, adj, rejected, "C")


def procedure_d(p: PVector, alpha: float) -> IndexSet:
    return bh(p, alpha)
