"""The two-hypothesis toy model: selection at a fixed threshold and the
conditional/selective procedures built on it.

Regions are closed (every comparison uses ``<=``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .core import ContractViolation, IndexSet, PVector
from .procedures import fixed_sequence_fdr2, hochberg2, mabh2


class ToyVariant(enum.IntEnum):
    COND_SEL_FWER = 0
    COND_SEL_FDR = 1
    COND_SEL_FCR = 2
    COND_IMPROVED_FDR = 3
    SELECTIVE_IMPROVED_FDR = 4
    MABH = 5

    @property
    def cli_name(self) -> str:
        return self.name.lower().replace("_", "-")

    @classmethod
    def from_name(cls, name: str) -> ToyVariant:
        key = name.strip().upper().replace("-", "_")
        try:
            return cls[key]
        except KeyError:
            raise ContractViolation(f"unknown toy variant {name!r}") from None


@dataclass(frozen=True)
class ToyConfig:
    lam: float
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ContractViolation(f"lambda={self.lam!r} outside (0, 1)")
        if not 0.0 < self.alpha < 1.0:
            raise ContractViolation(f"alpha={self.alpha!r} outside (0, 1)")
        if not 0.0 < self.alpha_prime < 1.0:
            raise ContractViolation(f"calibrated level {self.alpha_prime!r} outside (0, 1)")

    @property
    def alpha_prime(self) -> float:
        """Level at which the selective improvement exhausts alpha under the global null."""
        return self.alpha / (2 * self.lam - self.lam**2)

    def check(self, variant: ToyVariant):
        if variant == ToyVariant.SELECTIVE_IMPROVED_FDR and self.lam < 2 * self.alpha:
            raise ContractViolation("the selective improvement needs lambda >= 2 * alpha")
        if variant in (ToyVariant.COND_SEL_FDR, ToyVariant.COND_IMPROVED_FDR, ToyVariant.MABH):
            if self.alpha > 0.5:
                raise ContractViolation("MABH-based variants need alpha <= 1/2")


def toy_select(p: PVector, lam: float) -> IndexSet:
    if len(p) != 2:
        raise ContractViolation("the toy model has exactly two hypotheses")
    if not 0.0 < lam < 1.0:
        raise ContractViolation(f"lambda={lam!r} outside (0, 1)")
    return IndexSet((i for i, v in enumerate(p, 1) if v <= lam), 2)


def toy_adjust(p_i: float, lam: float, selected: bool) -> float:
    """p-value adjusted for (non-)selection: ``p/lam`` or ``(p - lam)/(1 - lam)``."""
    if not 0.0 < lam < 1.0:
        raise ContractViolation(f"lambda={lam!r} outside (0, 1)")
    if selected:
        if p_i > lam:
            raise ContractViolation(f"selected p-value {p_i} exceeds lambda {lam}")
        return p_i / lam
    if p_i <= lam:
        raise ContractViolation(f"non-selected p-value {p_i} does not exceed lambda {lam}")
    return (p_i - lam) / (1 - lam)


def _swap(R: IndexSet) -> IndexSet:
    return IndexSet((3 - i for i in R), 2)


def toy_reject(p1: float, p2: float, cfg: ToyConfig, variant: ToyVariant) -> IndexSet:
    variant = ToyVariant(variant)
    cfg.check(variant)
    if not (0.0 <= p1 <= 1.0 and 0.0 <= p2 <= 1.0):
        raise ContractViolation("p-values must lie in [0, 1]")
    lam, alpha = cfg.lam, cfg.alpha

    if variant == ToyVariant.MABH:
        return mabh2(p1, p2, alpha)

    if variant == ToyVariant.SELECTIVE_IMPROVED_FDR:
        ap = cfg.alpha_prime
        first_small = p1 <= p2
        small, large = (p1, p2) if first_small else (p2, p1)
        reject_small = (
            small <= lam * ap / 2
            or (small <= lam * ap and large <= lam * ap)
            or (small <= lam * ap and large > lam)
        )
        members = []
        if reject_small:
            members.append(1)
            if large <= 2 * alpha:
                members.append(2)
        R = IndexSet(members, 2)
        return R if first_small else _swap(R)

    S = toy_select(PVector((p1, p2)), lam)
    ps = (p1, p2)

    if variant == ToyVariant.COND_SEL_FCR:
        return IndexSet((i for i in S if toy_adjust(ps[i - 1], lam, True) <= alpha), 2)

    if len(S) == 2:
        q1, q2 = p1 / lam, p2 / lam
        rule = hochberg2 if variant == ToyVariant.COND_SEL_FWER else mabh2
        return rule(q1, q2, alpha)

    if variant == ToyVariant.COND_IMPROVED_FDR:
        if len(S) == 1:
            i = S.members[0]
            j = 3 - i
            R = fixed_sequence_fdr2(
                toy_adjust(ps[i - 1], lam, True), toy_adjust(ps[j - 1], lam, False), alpha
            )
            return R if i == 1 else _swap(R)
        return mabh2(toy_adjust(p1, lam, False), toy_adjust(p2, lam, False), alpha)

    # COND_SEL_FWER / COND_SEL_FDR with |S| <= 1: single test at level alpha
    return IndexSet((i for i in S if toy_adjust(ps[i - 1], lam, True) <= alpha), 2)
