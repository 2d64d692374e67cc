"""Brute-force ground truth on small instances.

Every refinement interval is split into ``g`` equal cells and each cell goes
wholly to one agent (or, on a partial grid, possibly to nobody); all
``n**(g*m)`` (resp. ``(n+1)**(g*m)``) assignments are scored exactly by the
kernels in :mod:`chorex._kernels`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

import numpy as np

from . import _kernels
from .errors import BadParams, BudgetExceeded, NoFeasible, NotFound
from .fairness import Notion
from .model import Allocation, Instance, Interval, Piece, PiecewiseDensity

DEFAULT_BUDGET = 10**7

_FLAG = {Notion.PROPORTIONAL: _kernels.PROP, Notion.SWAP_EF: _kernels.SWAP_EF, Notion.SWAP_STABLE: _kernels.SWAP_STABLE}


@dataclass(frozen=True)
class GridSpec:
    g: int = 1
    partial: bool = False

    def __post_init__(self):
        if self.g < 1:
            raise BadParams(f"grid resolution must be >= 1, got {self.g}")

    def size(self, n: int, m: int) -> int:
        return self.radix(n) ** (self.g * m)

    def radix(self, n: int) -> int:
        return n + 1 if self.partial else n


@dataclass(frozen=True)
class PropertySpec:
    """Allocations must satisfy every notion in ``require`` and violate every one in ``forbid``."""

    require: frozenset = frozenset()
    forbid: frozenset = frozenset()

    def __post_init__(self):
        req = frozenset(Notion.parse(x) for x in self.require)
        forb = frozenset(Notion.parse(x) for x in self.forbid)
        if req & forb:
            raise BadParams(f"notions both required and forbidden: {sorted(x.value for x in req & forb)}")
        object.__setattr__(self, "require", req)
        object.__setattr__(self, "forbid", forb)

    @classmethod
    def of(cls, require: Iterable = (), forbid: Iterable = ()) -> PropertySpec:
        return cls(frozenset(require), frozenset(forbid))

    def mask(self, flags: np.ndarray) -> np.ndarray:
        ok = np.ones(flags.shape, dtype=bool)
        for notion in self.require:
            ok &= (flags & _FLAG[notion]) != 0
        for notion in self.forbid:
            ok &= (flags & _FLAG[notion]) == 0
        return ok

    def to_doc(self) -> dict:
        return {"require": sorted(x.value for x in self.require), "forbid": sorted(x.value for x in self.forbid)}


def grid_cells(instance: Instance, grid: GridSpec) -> list[Interval]:
    cells = []
    for iv in instance.intervals:
        w = iv.length / grid.g
        cells.extend(Interval(iv.lo + s * w, iv.lo + (s + 1) * w) for s in range(grid.g))
    return cells


def _check_budget(instance: Instance, grid: GridSpec, budget: int) -> int:
    size = grid.size(instance.n, instance.m)
    if size > budget:
        raise BudgetExceeded(f"{size} assignments exceed the budget of {budget}")
    return size


def assignment_allocation(cells: list[Interval], digits: Iterable[int], n: int) -> Allocation:
    parts: list[list[Interval]] = [[] for _ in range(n)]
    for cell, owner in zip(cells, digits):
        if owner < n:
            parts[owner].append(cell)
    return Allocation(tuple(Piece(tuple(p)) for p in parts))


def _digits(index: int, radix: int, c: int) -> list[int]:
    out = [0] * c
    for q in range(c - 1, -1, -1):
        index, out[q] = divmod(index, radix)
    return out


def enumerate_allocations(instance: Instance, grid: GridSpec = GridSpec(), budget: int = DEFAULT_BUDGET) -> Iterator[Allocation]:
    """Every assignment of cells to agents, first cell most significant."""
    _check_budget(instance, grid, budget)
    cells = grid_cells(instance, grid)
    for digits in itertools.product(range(grid.radix(instance.n)), repeat=len(cells)):
        yield assignment_allocation(cells, digits, instance.n)


@dataclass
class Scan:
    """Exact scores of every assignment: ``cost[r] / scale`` is e(A_r)."""

    instance: Instance
    grid: GridSpec
    cells: list[Interval]
    scale: int
    costs: np.ndarray
    flags: np.ndarray

    def __len__(self) -> int:
        return len(self.costs)

    def allocation(self, index: int) -> Allocation:
        n = self.instance.n
        return assignment_allocation(self.cells, _digits(index, self.grid.radix(n), len(self.cells)), n)

    def cost(self, index: int) -> Fraction:
        return Fraction(int(self.costs[index]), self.scale)

    def matching(self, spec: PropertySpec) -> np.ndarray:
        return np.flatnonzero(spec.mask(self.flags))


def cell_value_matrix(instance: Instance, cells: list[Interval]):
    """Integer matrix ``scale * V_ij(cell)`` and the common denominator ``scale``."""
    n = instance.n
    exact = [[[instance.value(i, j, Piece((c,))) for c in cells] for j in range(n)] for i in range(n)]
    scale = n
    for row in exact:
        for col in row:
            for v in col:
                scale = math.lcm(scale, v.denominator)
    ints = [[[int(v * scale) for v in col] for col in row] for row in exact]
    # worst case accumulator: n * (sum of everything an agent can see)
    bound = n * max(sum(sum(col) for col in row) for row in ints) + scale
    dtype = np.int64 if bound < 2**62 else object
    return np.array(ints, dtype=dtype), scale


def scan(instance: Instance, grid: GridSpec = GridSpec(), budget: int = DEFAULT_BUDGET, jit: bool | None = None) -> Scan:
    _check_budget(instance, grid, budget)
    cells = grid_cells(instance, grid)
    vals, scale = cell_value_matrix(instance, cells)
    costs, flags = _kernels.score_assignments(vals, scale, partial=grid.partial, jit=jit)
    return Scan(instance, grid, cells, scale, costs, flags)


def brute_force_optimal(
    instance: Instance,
    grid: GridSpec = GridSpec(),
    constraints: PropertySpec = PropertySpec(),
    budget: int = DEFAULT_BUDGET,
) -> tuple[Allocation, Fraction]:
    """Cheapest enumerated allocation meeting ``constraints``; first in order on ties."""
    s = scan(instance, grid, budget)
    idx = s.matching(constraints)
    if len(idx) == 0:
        raise NoFeasible(f"no allocation on a g={grid.g} grid satisfies {constraints.to_doc()}")
    costs = s.costs[idx]
    best = idx[int(np.argmin(costs))]  # argmin returns the first minimum
    return s.allocation(int(best)), s.cost(int(best))


def count_matching(instance: Instance, grid: GridSpec, spec: PropertySpec, budget: int = DEFAULT_BUDGET) -> int:
    return int(spec.mask(scan(instance, grid, budget).flags).sum())


def random_pwc_instance(n: int, m: int, rng: np.random.Generator, denominator: int = 16) -> Instance:
    """Normalized PWC instance on ``m`` random-width intervals, values ``k/16`` before scaling."""
    widths = [int(w) for w in rng.integers(1, 5, size=m)]
    total_w = sum(widths)
    cuts = [Fraction(sum(widths[:k]), total_w) for k in range(m + 1)]
    rows = []
    for _ in range(n):
        while True:
            raw = rng.integers(0, denominator + 1, size=(n, m))
            levels = [[Fraction(int(k), denominator) for k in r] for r in raw]
            total = sum(levels[j][k] * (cuts[k + 1] - cuts[k]) for j in range(n) for k in range(m))
            if total:
                break
        rows.append(
            tuple(
                PiecewiseDensity.from_parts([(cuts[k], cuts[k + 1], levels[j][k] / total) for k in range(m)])
                for j in range(n)
            )
        )
    return Instance(tuple(rows))


def random_pwl_instance(n: int, pieces: int, rng: np.random.Generator, denominator: int = 8) -> Instance:
    """Normalized continuous piecewise-linear instance on ``pieces`` equal segments.

    Knot heights are ``k/8`` before exact per-agent scaling, so slopes stay small.
    """
    xs = [Fraction(k, pieces) for k in range(pieces + 1)]
    rows = []
    for _ in range(n):
        while True:
            raw = rng.integers(0, denominator + 1, size=(n, pieces + 1))
            knots = [[Fraction(int(k), denominator) for k in r] for r in raw]
            total = sum((y0 + y1) / 2 / pieces for r in knots for y0, y1 in zip(r, r[1:]))
            if total:
                break
        row = []
        for r in knots:
            parts = []
            for x0, x1, y0, y1 in zip(xs, xs[1:], r, r[1:]):
                b = (y1 - y0) / (x1 - x0) / total
                parts.append((x0, x1, y0 / total - b * x0, b))
            row.append(PiecewiseDensity.from_parts(parts, fill_zero=False))
        rows.append(tuple(row))
    return Instance(tuple(rows))


@dataclass
class Witness:
    instance: Instance
    allocation: Allocation
    instances_tried: int
    allocations_examined: int


def search_counterexample(
    spec: PropertySpec,
    n: int,
    m: int,
    g: int = 1,
    seed: int = 0,
    budget: int = 10**5,
    partial: bool = False,
) -> Witness:
    """First (instance, allocation) from the seeded generator that fits ``spec``.

    ``budget`` caps the total number of allocations examined.
    """
    if budget <= 0:
        raise BadParams("budget must be positive")
    grid = GridSpec(g, partial)
    per_instance = grid.size(n, m)
    if per_instance > budget:
        raise BudgetExceeded(f"a single instance has {per_instance} assignments, over the budget of {budget}")
    rng = np.random.default_rng(seed)
    examined = tried = 0
    while examined + per_instance <= budget:
        inst = random_pwc_instance(n, m, rng)
        tried += 1
        s = scan(inst, grid)
        examined += per_instance
        hits = s.matching(spec)
        if len(hits):
            return Witness(inst, s.allocation(int(hits[0])), tried, examined)
    raise NotFound(f"no witness for {spec.to_doc()} after {tried} instances ({examined} allocations)")
