"""Domain types, error-rate functionals and the randomness contract.

Hypotheses are numbered ``1..n`` everywhere in the public interface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy import special

from .kernels import rng as _rng


class ContractViolation(ValueError):
    """An operation was called outside its documented preconditions."""


class DegenerateInputError(ContractViolation):
    """Input lies on a measure-zero set where the statistic is undefined."""


class UnboundedResultError(ValueError):
    """The requested quantity is infinite (e.g. a normal quantile at 0 or 1)."""


class NumericalError(ArithmeticError):
    """A numerical routine failed (non-convergence, empty truncation region, ...)."""


class InputDataError(ValueError):
    """Malformed user-supplied data (files, columns, cells)."""


# --- domain types -------------------------------------------------------------


@dataclass(frozen=True)
class PVector:
    values: tuple

    def __init__(self, values: Iterable[float]):
        vals = tuple(float(v) for v in values)
        if not vals:
            raise ContractViolation("PVector needs at least one p-value")
        for v in vals:
            if not (0.0 <= v <= 1.0):
                raise ContractViolation(f"p-value {v!r} is not a finite number in [0, 1]")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def at(self, i: int) -> float:
        """p-value of hypothesis ``i`` (1-based)."""
        if not 1 <= i <= len(self.values):
            raise ContractViolation(f"index {i} outside 1..{len(self.values)}")
        return self.values[i - 1]

    def as_array(self) -> np.ndarray:
        return np.array(self.values)


@dataclass(frozen=True)
class IndexSet:
    members: tuple
    universe_size: int

    def __init__(self, members: Iterable[int], universe_size: int):
        n = int(universe_size)
        if n < 0:
            raise ContractViolation("universe size must be non-negative")
        mem = tuple(sorted({int(i) for i in members}))
        if mem and (mem[0] < 1 or mem[-1] > n):
            raise ContractViolation(f"members {mem} not within 1..{n}")
        object.__setattr__(self, "members", mem)
        object.__setattr__(self, "universe_size", n)

    @classmethod
    def empty(cls, n: int) -> IndexSet:
        return cls((), n)

    @classmethod
    def full(cls, n: int) -> IndexSet:
        return cls(range(1, n + 1), n)

    @classmethod
    def from_mask(cls, mask) -> IndexSet:
        mask = np.asarray(mask, dtype=bool)
        return cls((np.flatnonzero(mask) + 1).tolist(), mask.size)

    def mask(self) -> np.ndarray:
        m = np.zeros(self.universe_size, dtype=bool)
        if self.members:
            m[np.array(self.members) - 1] = True
        return m

    def _check(self, other: IndexSet):
        if self.universe_size != other.universe_size:
            raise ContractViolation(
                f"universe sizes differ: {self.universe_size} vs {other.universe_size}"
            )

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, i):
        return i in self.members

    def __or__(self, other: IndexSet) -> IndexSet:
        self._check(other)
        return IndexSet(self.members + other.members, self.universe_size)

    def __and__(self, other: IndexSet) -> IndexSet:
        self._check(other)
        return IndexSet(set(self.members) & set(other.members), self.universe_size)

    def issubset(self, other: IndexSet) -> bool:
        self._check(other)
        return set(self.members) <= set(other.members)

    def __le__(self, other: IndexSet) -> bool:
        return self.issubset(other)

    def __str__(self):
        return "{" + ",".join(str(i) for i in self.members) + "}"


@dataclass(frozen=True)
class TruthMask:
    is_null: tuple

    def __init__(self, is_null: Iterable[bool]):
        object.__setattr__(self, "is_null", tuple(bool(b) for b in is_null))

    @classmethod
    def from_nulls(cls, n: int, nulls: Iterable[int]) -> TruthMask:
        nulls = set(nulls)
        return cls(i in nulls for i in range(1, n + 1))

    def __len__(self):
        return len(self.is_null)

    @property
    def nulls(self) -> IndexSet:
        return IndexSet.from_mask(self.is_null)


@dataclass(frozen=True)
class ErrorRateKind:
    tag: str
    gamma: float | None = None

    def __post_init__(self):
        if self.tag not in ("FDR", "FWER", "FDX", "FCR_STYLE"):
            raise ContractViolation(f"unknown error rate {self.tag!r}")
        if self.tag == "FDX":
            if self.gamma is None or not 0.0 < self.gamma < 1.0:
                raise ContractViolation("FDX needs gamma strictly inside (0, 1)")
        elif self.gamma is not None:
            raise ContractViolation(f"{self.tag} takes no gamma")

    @classmethod
    def fdx(cls, gamma: float) -> ErrorRateKind:
        return cls("FDX", gamma)


ErrorRateKind.FDR = ErrorRateKind("FDR")
ErrorRateKind.FWER = ErrorRateKind("FWER")
ErrorRateKind.FCR_STYLE = ErrorRateKind("FCR_STYLE")


@dataclass
class RngStream:
    """Deterministic uniform stream identified by ``(seed, stream_id)``.

    The stream is a value: copying it (``dataclasses.replace``) and drawing
    from both copies yields the same numbers.  ``counter`` is the index of
    the next draw.
    """

    seed: int
    stream_id: int = 0
    counter: int = field(default=0)

    def __post_init__(self):
        self._key = _rng.stream_key(int(self.seed), int(self.stream_id))

    def uniforms(self, k: int) -> np.ndarray:
        out = _rng.uniform_block(int(self.seed), [int(self.stream_id)], k, self.counter)[0]
        self.counter += k
        return out

    def normals(self, k: int) -> np.ndarray:
        """Standard normals by inverse transform of open-interval uniforms."""
        u = _rng.uniform_block(
            int(self.seed), [int(self.stream_id)], k, self.counter, open_interval=True
        )[0]
        self.counter += k
        return special.ndtri(u)


def uniform01(stream: RngStream) -> float:
    """Next draw of ``stream`` in [0, 1); advances the stream by one."""
    bits = _rng.draw_bits_py(stream._key, stream.counter)
    stream.counter += 1
    return (bits >> 11) * 2.0**-53


# --- error-rate functionals ---------------------------------------------------


def fdp(R: IndexSet, truth: TruthMask) -> float:
    """False discovery proportion |R & nulls| / max(|R|, 1)."""
    if R.universe_size != len(truth):
        raise ContractViolation(
            f"rejection set universe {R.universe_size} does not match truth length {len(truth)}"
        )
    false = sum(1 for i in R if truth.is_null[i - 1])
    return false / max(len(R), 1)


def error_value(kind: ErrorRateKind, R: IndexSet, S: IndexSet, truth: TruthMask) -> float:
    if R.universe_size != len(truth) or S.universe_size != len(truth):
        raise ContractViolation("R, S and truth must share one universe size")
    if kind.tag == "FCR_STYLE":
        if not R.issubset(S):
            raise ContractViolation("FCR-style error needs R to be a subset of S")
        false = sum(1 for i in R if truth.is_null[i - 1])
        return false / max(len(S), 1)
    f = fdp(R, truth)
    if kind.tag == "FDR":
        return f
    if kind.tag == "FWER":
        return 1.0 if f > 0 else 0.0
    return 1.0 if f > kind.gamma else 0.0


# --- normal distribution ------------------------------------------------------


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_quantile(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        if p in (0.0, 1.0):
            raise UnboundedResultError(f"normal quantile at {p} is infinite")
        raise ContractViolation(f"probability {p!r} outside (0, 1)")
    return float(special.ndtri(p))
