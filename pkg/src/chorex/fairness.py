"""Proportionality, swap envy-freeness and swap stability for chores.

All comparisons are exact.  An ``epsilon`` relaxation is added to the
right-hand side of each defining inequality.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from .model import (
    ZERO,
    Allocation,
    Instance,
    as_rational,
    count_cuts,
    fmt,
    value_tensor,
)


class Notion(enum.Enum):
    PROPORTIONAL = "proportional"
    SWAP_EF = "swap_ef"
    SWAP_STABLE = "swap_stable"

    @classmethod
    def parse(cls, text) -> Notion:
        if isinstance(text, cls):
            return text
        aliases = {
            "prop": cls.PROPORTIONAL,
            "proportional": cls.PROPORTIONAL,
            "swapef": cls.SWAP_EF,
            "swap-ef": cls.SWAP_EF,
            "swap_ef": cls.SWAP_EF,
            "swapstable": cls.SWAP_STABLE,
            "swap-stable": cls.SWAP_STABLE,
            "swap_stable": cls.SWAP_STABLE,
        }
        try:
            return aliases[text.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown fairness notion {text!r}") from None


@dataclass(frozen=True)
class Violation:
    """One failed inequality ``lhs <= rhs + epsilon``.

    ``agents`` is ``(i,)`` for proportionality, ``(i, j)`` for swap envy and
    ``(i, j, k)`` for swap instability (all 0-based).
    """

    kind: Notion
    agents: tuple[int, ...]
    lhs: Fraction
    rhs: Fraction

    @property
    def gap(self) -> Fraction:
        return self.lhs - self.rhs

    def to_doc(self) -> dict:
        return {
            "kind": self.kind.value,
            "agents": [a + 1 for a in self.agents],
            "lhs": fmt(self.lhs),
            "rhs": fmt(self.rhs),
            "gap": fmt(self.gap),
        }


@dataclass(frozen=True)
class FairnessVerdict:
    notion: Notion
    epsilon: Fraction
    witnesses: tuple[Violation, ...] = ()

    @property
    def holds(self) -> bool:
        return not self.witnesses

    def __bool__(self) -> bool:
        return self.holds

    def to_doc(self) -> dict:
        return {
            "notion": self.notion.value,
            "epsilon": fmt(self.epsilon),
            "holds": self.holds,
            "witnesses": [w.to_doc() for w in self.witnesses],
        }


def _eps(epsilon) -> Fraction:
    eps = as_rational(epsilon)
    if eps < 0:
        raise ValueError("epsilon must be non-negative")
    return eps


def proportional_from_tensor(W, epsilon=ZERO) -> FairnessVerdict:
    n = len(W)
    eps = _eps(epsilon)
    share = Fraction(1, n)
    bad = []
    for i in range(n):
        v = sum((W[i][j][j] for j in range(n)), ZERO)
        if v > share + eps:
            bad.append(Violation(Notion.PROPORTIONAL, (i,), v, share))
    return FairnessVerdict(Notion.PROPORTIONAL, eps, tuple(bad))


def swap_ef_from_tensor(W, epsilon=ZERO) -> FairnessVerdict:
    n = len(W)
    eps = _eps(epsilon)
    bad = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            lhs = W[i][i][i] + W[i][j][j]
            rhs = W[i][i][j] + W[i][j][i]
            if lhs > rhs + eps:
                bad.append(Violation(Notion.SWAP_EF, (i, j), lhs, rhs))
    return FairnessVerdict(Notion.SWAP_EF, eps, tuple(bad))


def swap_stable_from_tensor(W, epsilon=ZERO) -> FairnessVerdict:
    # i ranges over everyone, including members of the swapped pair
    n = len(W)
    eps = _eps(epsilon)
    bad = []
    for i in range(n):
        for j, k in combinations(range(n), 2):
            lhs = W[i][j][j] + W[i][k][k]
            rhs = W[i][j][k] + W[i][k][j]
            if lhs > rhs + eps:
                bad.append(Violation(Notion.SWAP_STABLE, (i, j, k), lhs, rhs))
    return FairnessVerdict(Notion.SWAP_STABLE, eps, tuple(bad))


_FROM_TENSOR = {
    Notion.PROPORTIONAL: proportional_from_tensor,
    Notion.SWAP_EF: swap_ef_from_tensor,
    Notion.SWAP_STABLE: swap_stable_from_tensor,
}


def check_proportional(instance: Instance, alloc: Allocation, epsilon=ZERO) -> FairnessVerdict:
    return proportional_from_tensor(value_tensor(instance, alloc), epsilon)


def check_swap_ef(instance: Instance, alloc: Allocation, epsilon=ZERO) -> FairnessVerdict:
    return swap_ef_from_tensor(value_tensor(instance, alloc), epsilon)


def check_swap_stable(instance: Instance, alloc: Allocation, epsilon=ZERO) -> FairnessVerdict:
    return swap_stable_from_tensor(value_tensor(instance, alloc), epsilon)


def check(instance: Instance, alloc: Allocation, notion: Notion, epsilon=ZERO) -> FairnessVerdict:
    return _FROM_TENSOR[notion](value_tensor(instance, alloc), epsilon)


@dataclass
class FairnessReport:
    per_agent_values: list[Fraction]
    social_cost: Fraction
    cuts: int
    verdicts: dict[Notion, FairnessVerdict] = field(default_factory=dict)

    def holds(self, *notions: Notion) -> bool:
        """All given notions hold; with no arguments, every audited notion."""
        return self.satisfies(notions or tuple(self.verdicts))

    def satisfies(self, notions) -> bool:
        """All of ``notions`` hold (vacuously true for none)."""
        return all(self.verdicts[nt].holds for nt in notions)

    @property
    def proportional(self) -> bool:
        return self.verdicts[Notion.PROPORTIONAL].holds

    @property
    def swap_ef(self) -> bool:
        return self.verdicts[Notion.SWAP_EF].holds

    @property
    def swap_stable(self) -> bool:
        return self.verdicts[Notion.SWAP_STABLE].holds

    def to_doc(self) -> dict:
        return {
            "values": [fmt(v) for v in self.per_agent_values],
            "social_cost": fmt(self.social_cost),
            "cuts": self.cuts,
            "verdicts": {nt.value: v.to_doc() for nt, v in self.verdicts.items()},
        }


def audit(instance: Instance, alloc: Allocation, epsilon=ZERO) -> FairnessReport:
    W = value_tensor(instance, alloc)
    n = instance.n
    values = [sum((W[i][j][j] for j in range(n)), ZERO) for i in range(n)]
    return FairnessReport(
        per_agent_values=values,
        social_cost=sum(values, ZERO),
        cuts=count_cuts(alloc),
        verdicts={nt: fn(W, epsilon) for nt, fn in _FROM_TENSOR.items()},
    )
