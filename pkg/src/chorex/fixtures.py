"""The worked examples from the literature, with recomputed properties.

Several of the published examples do not have the properties claimed for
them.  Each fixture keeps the instance and allocation verbatim, stores the
values obtained by exact integration in ``expected``, the published claims in
``claimed``, and lists every disagreement in ``discrepancies``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction as Q

from .model import (
    Allocation,
    Instance,
    Piece,
    PiecewiseDensity,
    allocation_to_doc,
    instance_to_doc,
)

PWD = PiecewiseDensity.from_parts


@dataclass(frozen=True)
class Fixture:
    name: str
    instance: Instance
    allocation: Allocation | None
    expected: dict
    claimed: dict = field(default_factory=dict)
    discrepancies: tuple[str, ...] = ()
    notes: str = ""

    def document(self) -> dict:
        doc = instance_to_doc(self.instance)
        doc.pop("scale", None)
        meta = {
            "name": self.name,
            "expected": _strs(self.expected),
            "claimed": _strs(self.claimed),
            "discrepancies": list(self.discrepancies),
        }
        if self.allocation is not None:
            meta["allocation"] = allocation_to_doc(self.allocation)["pieces"]
        if self.notes:
            meta["notes"] = self.notes
        doc["fixture"] = meta
        return doc


def _strs(d: dict) -> dict:
    def conv(v):
        if isinstance(v, Q):
            return str(v)
        if isinstance(v, (list, tuple)):
            return [conv(x) for x in v]
        return v

    return {k: conv(v) for k, v in d.items()}


def _thirds() -> Allocation:
    return Allocation((Piece.of((0, Q(1, 3))), Piece.of((Q(1, 3), Q(2, 3))), Piece.of((Q(2, 3), 1))))


def ex1(n: int = 3) -> Fixture:
    """Every v_ij is 1 on block j, so the diagonal split costs everyone 1."""
    rows = tuple(
        tuple(PWD([(Q(j, n), Q(j + 1, n), 1)]) for j in range(n)) for _ in range(n)
    )
    inst = Instance(rows)
    alloc = Allocation(tuple(Piece.of((Q(i, n), Q(i + 1, n))) for i in range(n)))
    worst = n >= 2
    expected = {
        "values": [Q(1)] * n,
        "social_cost": Q(n),
        "proportional": not worst,
        "swap_ef": not worst,
        "swap_stable": not worst,
    }
    return Fixture("ex1", inst, alloc, expected, claimed={"values": [Q(1)] * n})


def ex2() -> Fixture:
    inst = Instance(
        (
            (PWD([(0, Q(1, 2), Q(3, 4)), (Q(1, 2), 1, Q(1, 4))]), PiecewiseDensity.constant(Q(1, 2))),
            (PiecewiseDensity.constant(Q(1, 2)), PWD([(0, Q(1, 2), Q(1, 4)), (Q(1, 2), 1, Q(3, 4))])),
        )
    )
    alloc = Allocation((Piece.of((0, Q(1, 2))), Piece.of((Q(1, 2), 1))))
    expected = {
        "values": [Q(5, 8), Q(5, 8)],
        "social_cost": Q(5, 4),
        "proportional": False,
        "swap_ef": False,
        "swap_stable": False,
        "swap_ef_sides": [Q(5, 8), Q(3, 8)],
    }
    claimed = {"proportional": True, "swap_ef": False}
    return Fixture(
        "ex2",
        inst,
        alloc,
        expected,
        claimed,
        discrepancies=(
            "claimed proportional, but V_1(A) = 3/8 + 1/4 = 5/8 > 1/2 (and V_2(A) = 5/8)",
        ),
        notes="the swapped allocation A_1 = [1/2,1], A_2 = [0,1/2] is proportional and swap envy-free",
    )


def ex3() -> Fixture:
    third = [(0, Q(1, 3)), (Q(1, 3), Q(2, 3)), (Q(2, 3), 1)]
    inst = Instance(
        (
            tuple(PWD([(*third[j], 1)]) for j in range(3)),
            (
                PiecewiseDensity.constant(Q(1, 2)),
                PiecewiseDensity.constant(0),
                PiecewiseDensity.constant(Q(1, 2)),
            ),
            tuple(PiecewiseDensity.constant(1) for _ in range(3)),
        ),
        strict=False,
    )
    expected = {
        "row_totals": [Q(1), Q(1), Q(3)],
        "values": [Q(1), Q(1, 3), Q(1)],
        "social_cost": Q(7, 3),
        "proportional": False,
        "swap_ef": False,
        "swap_stable": False,
        "swap_ef_sides": [Q(2, 3), Q(0)],
    }
    claimed = {"swap_ef": True, "proportional": False, "agent_1_value": Q(1)}
    return Fixture(
        "ex3",
        inst,
        _thirds(),
        expected,
        claimed,
        discrepancies=(
            "agent 3 is not normalized: sum_j V_3j([0,1]) = 3",
            "claimed swap envy-free, but agent 1 vs 2 gives 1/3 + 1/3 = 2/3 > 0 + 0",
        ),
    )


def ex4() -> Fixture:
    inst = Instance(
        (
            (
                PiecewiseDensity.constant(Q(1, 3)),
                PWD([(0, Q(1, 3), Q(1, 3)), (Q(1, 3), Q(2, 3), Q(2, 3))]),
                PWD([(0, Q(1, 3), Q(1, 3)), (Q(2, 3), 1, Q(2, 3))]),
            ),
            tuple(PiecewiseDensity.constant(Q(1, 3)) for _ in range(3)),
            (
                PiecewiseDensity.constant(Q(1, 2)),
                PiecewiseDensity.constant(Q(1, 2)),
                PiecewiseDensity.constant(0),
            ),
        )
    )
    expected = {
        "values": [Q(5, 9), Q(1, 3), Q(1, 3)],
        "social_cost": Q(11, 9),
        "proportional": False,
        "swap_ef": False,
        "swap_stable": False,
        "swap_stable_sides": [Q(4, 9), Q(0)],
        "value_after_swapping_2_3": Q(1, 9),
    }
    claimed = {
        "values": [Q(1, 3)] * 3,
        "proportional": True,
        "swap_ef": True,
        "swap_stable": False,
        "value_after_swapping_2_3": Q(1, 9),
    }
    return Fixture(
        "ex4",
        inst,
        _thirds(),
        expected,
        claimed,
        discrepancies=(
            "claimed every agent gets 1/3, but V_1(A) = 1/9 + 2/9 + 2/9 = 5/9",
            "claimed proportional, but V_1(A) = 5/9 > 1/3",
            "claimed swap envy-free, but agent 1 vs 2 gives 1/9 + 2/9 = 1/3 > 1/9 + 1/9",
        ),
    )


def thm8() -> Fixture:
    """Two agents with mirrored densities, totals 2/3 (own) and 1/3 (other's).

    Only the totals and the symmetry are given in the source; the
    concrete densities below are one choice satisfying them.
    """
    own = PWD([(0, Q(1, 2), 1), (Q(1, 2), 1, Q(1, 3))])
    other = PWD([(0, Q(1, 2), Q(1, 6)), (Q(1, 2), 1, Q(1, 2))])
    inst = Instance(((own, other), (other, own)))
    alloc = Allocation((Piece.of((0, Q(1, 5))), Piece.of((Q(1, 5), 1))))
    expected = {
        "totals": [Q(2, 3), Q(1, 3)],
        "values": [Q(1, 2), Q(1, 2)],
        "proportional": True,
        "identity": Q(1, 6),
    }
    return Fixture(
        "thm8",
        inst,
        alloc,
        expected,
        claimed={"identity": Q(1, 6)},
        notes="any complete proportional allocation has V_11(A_1) - V_12(A_1) = 1/6",
    )


def thm8_identity(instance: Instance, alloc: Allocation) -> Q:
    """V_11(A_1) - V_12(A_1); equals 1/6 on complete proportional allocations."""
    return instance.value(0, 0, alloc[0]) - instance.value(0, 1, alloc[0])


_FIXTURES = {"ex2": ex2, "ex3": ex3, "ex4": ex4, "thm8": thm8}


def named_fixture(name: str, n: int = 3) -> Fixture:
    if name == "ex1":
        return ex1(n)
    try:
        return _FIXTURES[name]()
    except KeyError:
        raise KeyError(f"unknown example {name!r}; choose from ex1, {', '.join(_FIXTURES)}") from None
