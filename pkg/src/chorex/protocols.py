"""Constructive allocations.

* a single-cut protocol for two agents, cutting where agent 2 is indifferent
  between the two sides;
* the uniform allocation for piecewise-constant instances;
* the sandwich allocation for piecewise-linear instances;
* the instance family on which every contiguous proportional allocation with
  ``n - 1`` cuts fails swap envy-freeness.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .errors import BadParams, NotPiecewiseConstant, NotTwoAgents
from .exact import roots_in
from .model import (
    ONE,
    ZERO,
    Allocation,
    Instance,
    Interval,
    Piece,
    PiecewiseDensity,
    as_rational,
)
from .rw import evaluate as _evaluate

Evaluate = Callable[[int, int, Fraction, Fraction], Fraction]


def _direct(instance: Instance) -> Evaluate:
    return lambda i, j, x, y: _evaluate(instance, i, j, x, y)


def _require_two(instance: Instance):
    if instance.n != 2:
        raise NotTwoAgents(f"the two-agent protocol needs n = 2, got n = {instance.n}")


@dataclass(frozen=True)
class BalanceFunction:
    """F(x) = V21([0,x]) + V22([x,1]) - V21([x,1]) - V22([0,x]), piecewise quadratic.

    ``pieces`` holds ``(lo, hi, c2, c1, c0)`` per breakpoint segment.
    """

    pieces: tuple[tuple[Fraction, Fraction, Fraction, Fraction, Fraction], ...]

    def __call__(self, x) -> Fraction:
        x = as_rational(x)
        for lo, hi, c2, c1, c0 in self.pieces:
            if lo <= x <= hi:
                return (c2 * x + c1) * x + c0
        raise ValueError(f"{x} outside [0, 1]")

    def smallest_root(self) -> Fraction:
        for lo, hi, c2, c1, c0 in self.pieces:
            roots = roots_in(c2, c1, c0, lo, hi)
            if roots is None:
                return lo
            if roots:
                return roots[0]
        # F(0) + F(1) = 0 and F is continuous, so some segment has a root
        raise AssertionError("balance function has no root on [0, 1]")


def balance_function(instance: Instance, evaluate: Evaluate | None = None) -> BalanceFunction:
    """Tabulate F from evaluate queries at breakpoints (and midpoints when PWL).

    A quadratic through three exact points is the exact F on a linear segment,
    so only agent 2's breakpoints need to be known.
    """
    _require_two(instance)
    ev = evaluate or _direct(instance)
    d21, d22 = instance.density(1, 0), instance.density(1, 1)
    t21, t22 = ev(1, 0, ZERO, ONE), ev(1, 1, ZERO, ONE)
    linear = d21.is_constant and d22.is_constant
    pts = sorted(set(d21.breakpoints) | set(d22.breakpoints))

    cache: dict[Fraction, Fraction] = {}

    def F(x: Fraction) -> Fraction:
        if x not in cache:
            if x == 0:
                p21 = p22 = ZERO
            elif x == 1:
                p21, p22 = t21, t22
            else:
                p21, p22 = ev(1, 0, ZERO, x), ev(1, 1, ZERO, x)
            cache[x] = 2 * (p21 - p22) + t22 - t21
        return cache[x]

    pieces = []
    for lo, hi in zip(pts, pts[1:]):
        f_lo, f_hi = F(lo), F(hi)
        d1 = (f_hi - f_lo) / (hi - lo)
        if linear:
            c2, c1, c0 = ZERO, d1, f_lo - d1 * lo
        else:
            mid = (lo + hi) / 2
            f_mid = F(mid)
            e1 = (f_mid - f_lo) / (mid - lo)
            e2 = ((f_hi - f_mid) / (hi - mid) - e1) / (hi - lo)
            c2, c1, c0 = e2, e1 - e2 * (lo + mid), f_lo - e1 * lo + e2 * lo * mid
        pieces.append((lo, hi, c2, c1, c0))
    return BalanceFunction(tuple(pieces))


def find_balance_point(instance: Instance, evaluate: Evaluate | None = None) -> Fraction:
    """Smallest y in [0, 1] with F(y) = 0, exactly."""
    return balance_function(instance, evaluate).smallest_root()


def two_agent_protocol(instance: Instance, evaluate: Evaluate | None = None) -> Allocation:
    """Cut at the balance point; agent 1 picks a side, agent 2 takes the other.

    Agent 1 keeps the left piece on ties.
    """
    _require_two(instance)
    ev = evaluate or _direct(instance)
    y = find_balance_point(instance, ev)
    left_cost = ev(0, 0, ZERO, y) + ev(0, 1, y, ONE)
    right_cost = ev(0, 0, y, ONE) + ev(0, 1, ZERO, y)
    left, right = Piece.of((ZERO, y)), Piece.of((y, ONE))
    if left_cost <= right_cost:
        return Allocation((left, right))
    return Allocation((right, left))


def uniform_allocation(instance: Instance) -> Allocation:
    """Agent i takes the i-th of n equal contiguous slices of every interval."""
    if not instance.is_piecewise_constant:
        raise NotPiecewiseConstant("the uniform allocation needs piecewise-constant densities")
    n = instance.n
    parts: list[list[Interval]] = [[] for _ in range(n)]
    for iv in instance.intervals:
        w = iv.length / n
        for i in range(n):
            parts[i].append(Interval(iv.lo + i * w, iv.lo + (i + 1) * w))
    return Allocation(tuple(Piece(tuple(p)) for p in parts))


def sandwich_pieces(iv: Interval, n: int) -> list[Piece]:
    """X_1..X_n: the i-th slice from the left joined with the i-th from the right."""
    alpha = iv.length / (2 * n)
    return [
        Piece(
            (
                Interval(iv.lo + i * alpha, iv.lo + (i + 1) * alpha),
                Interval(iv.hi - (i + 1) * alpha, iv.hi - i * alpha),
            )
        )
        for i in range(n)
    ]


def sandwich_allocation(instance: Instance) -> Allocation:
    n = instance.n
    parts: list[list[Interval]] = [[] for _ in range(n)]
    for iv in instance.intervals:
        for i, x in enumerate(sandwich_pieces(iv, n)):
            parts[i].extend(x.intervals)
    return Allocation(tuple(Piece(tuple(p)) for p in parts))


def contiguous_allocation(n: int) -> Allocation:
    """A_i = [(i-1)/n, i/n] (1-based), the standard n - 1 cut split."""
    return Allocation(tuple(Piece.of((Fraction(i, n), Fraction(i + 1, n))) for i in range(n)))


@dataclass(frozen=True)
class InstanceFamilyParams:
    n: int
    eps: Fraction

    def __post_init__(self):
        object.__setattr__(self, "eps", as_rational(self.eps))
        if self.n < 3:
            raise BadParams(f"the lower-bound family needs n >= 3, got {self.n}")
        if not 0 < self.eps < 1:
            raise BadParams(f"eps must lie in (0, 1), got {self.eps}")


def lower_bound_instance(params: InstanceFamilyParams | int, eps=None) -> Instance:
    """Instance where the contiguous split is proportional but not swap envy-free.

    Agent 1 pays 1 on its own block and ``1/(n-1)`` for every other agent
    holding anything outside that agent's block.  Agents i >= 2 pay
    ``1 - eps/n`` everywhere for themselves and ``eps/(n-1)`` on their own
    block for anyone else.
    """
    if not isinstance(params, InstanceFamilyParams):
        params = InstanceFamilyParams(params, eps)
    n, e = params.n, params.eps
    block = [(Fraction(k, n), Fraction(k + 1, n)) for k in range(n)]
    rows = []
    first = [PiecewiseDensity.from_parts([(*block[0], 1)])]
    for j in range(1, n):
        first.append(
            PiecewiseDensity.from_parts(
                [(lo, hi, Fraction(1, n - 1)) for k, (lo, hi) in enumerate(block) if k != j]
            )
        )
    rows.append(tuple(first))
    for i in range(1, n):
        row = []
        for j in range(n):
            if i == j:
                row.append(PiecewiseDensity.constant(1 - e / n))
            else:
                row.append(PiecewiseDensity.from_parts([(*block[i], e / (n - 1))]))
        rows.append(tuple(row))
    return Instance(tuple(rows))


def zero_cut_instance(n: int) -> Instance:
    """Nobody minds agent 1 holding anything; handing it all of [0, 1] is swap stable."""
    if n < 2:
        raise BadParams("needs n >= 2")
    share = Fraction(1, n - 1)
    rows = tuple(
        tuple(PiecewiseDensity.constant(0 if j == 0 else share) for j in range(n))
        for _ in range(n)
    )
    return Instance(rows)
