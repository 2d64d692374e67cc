"""Efficient allocations: the greedy unconstrained optimum and the fair LP.

The LP decides, for every refinement interval ``I_k``, what fraction
``x[i][k]`` of it agent ``i`` receives.  Because each density is affine on
``I_k``, a fraction can always be realized by a concrete piece worth exactly
``x[i][k] * V_ij(I_k)`` to every evaluator: contiguous slices when the
densities are constant there, nested shells symmetric about the midpoint
otherwise.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Callable, NamedTuple

import numpy as np

from .errors import InfeasibleModel, InvalidFractions
from .fairness import FairnessReport, Notion, audit
from .model import ZERO, Allocation, Instance, Interval, Piece, as_rational, fmt
from .rw import evaluate as _evaluate
from .simplex import LpStatus, simplex


class LpMode(enum.Enum):
    UNCONSTRAINED = "unconstrained"
    PROPORTIONAL = "prop"
    PROPORTIONAL_SWAP_EF = "prop-swapef"
    PROPORTIONAL_EPS_SWAP_EF = "prop-eps-swapef"
    SWAP_STABLE = "swap-stable"

    @property
    def notions(self) -> tuple[Notion, ...]:
        return {
            LpMode.UNCONSTRAINED: (),
            LpMode.PROPORTIONAL: (Notion.PROPORTIONAL,),
            LpMode.PROPORTIONAL_SWAP_EF: (Notion.PROPORTIONAL, Notion.SWAP_EF),
            LpMode.PROPORTIONAL_EPS_SWAP_EF: (Notion.PROPORTIONAL, Notion.SWAP_EF),
            LpMode.SWAP_STABLE: (Notion.PROPORTIONAL, Notion.SWAP_EF, Notion.SWAP_STABLE),
        }[self]


@dataclass(frozen=True)
class FractionMatrix:
    """``x[i][k]``: share of interval ``k`` held by agent ``i``."""

    x: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(tuple(as_rational(v) for v in row) for row in self.x))

    @classmethod
    def uniform(cls, n: int, m: int) -> FractionMatrix:
        return cls(tuple(tuple(Fraction(1, n) for _ in range(m)) for _ in range(n)))

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def m(self) -> int:
        return len(self.x[0]) if self.x else 0

    def validate(self, n: int, m: int):
        if self.n != n or any(len(row) != m for row in self.x):
            raise InvalidFractions(f"expected a {n}x{m} fraction matrix")
        for i, row in enumerate(self.x):
            for k, v in enumerate(row):
                if not 0 <= v <= 1:
                    raise InvalidFractions(f"x[{i}][{k}] = {v} outside [0, 1]")
        for k in range(m):
            col = sum((self.x[i][k] for i in range(n)), ZERO)
            if col != 1:
                raise InvalidFractions(f"column {k} sums to {col}, expected 1")

    def flat(self) -> list[Fraction]:
        return [v for row in self.x for v in row]

    def to_doc(self) -> list[list[str]]:
        return [[fmt(v) for v in row] for row in self.x]


@dataclass
class LpProblem:
    n: int
    m: int
    mode: LpMode
    eps: Fraction
    c: list[Fraction]
    A_eq: list[list[Fraction]]
    b_eq: list[Fraction]
    A_ub: list[list[Fraction]]
    b_ub: list[Fraction]
    eq_labels: list[str]
    ub_labels: list[str]

    @property
    def num_vars(self) -> int:
        return self.n * self.m

    @property
    def num_bounds(self) -> int:
        return self.n * self.m

    def var(self, i: int, k: int) -> int:
        return i * self.m + k

    def objective(self, x) -> Fraction:
        flat = x.flat() if isinstance(x, FractionMatrix) else list(x)
        return sum((ci * xi for ci, xi in zip(self.c, flat)), ZERO)

    def is_feasible(self, x) -> bool:
        flat = x.flat() if isinstance(x, FractionMatrix) else list(x)
        if any(v < 0 for v in flat):
            return False
        for row, b in zip(self.A_eq, self.b_eq):
            if sum((a * v for a, v in zip(row, flat) if a), ZERO) != b:
                return False
        for row, b in zip(self.A_ub, self.b_ub):
            if sum((a * v for a, v in zip(row, flat) if a), ZERO) > b:
                return False
        return True

    def to_text(self) -> str:
        """Plain row format: ``min``/``=``/``<=``, coefficients, rhs (none for min)."""
        names = " ".join(f"x{i + 1}_{k + 1}" for i in range(self.n) for k in range(self.m))
        lines = [f"# mode {self.mode.value} eps {fmt(self.eps)}", f"# vars {names}"]
        lines.append("min " + " ".join(fmt(v) for v in self.c))
        for label, row, b in zip(self.eq_labels, self.A_eq, self.b_eq):
            lines.append("= " + " ".join(fmt(v) for v in row) + f" {fmt(b)}  # {label}")
        for label, row, b in zip(self.ub_labels, self.A_ub, self.b_ub):
            lines.append("<= " + " ".join(fmt(v) for v in row) + f" {fmt(b)}  # {label}")
        return "\n".join(lines) + "\n"


@dataclass
class LpSolution:
    status: LpStatus
    fractions: FractionMatrix | None = None
    objective: Fraction | None = None
    duals: list[Fraction] | None = None
    certificate: list[Fraction] | None = None
    ray: list[Fraction] | None = None
    pivots: int = 0

    def to_doc(self) -> dict:
        doc = {"status": self.status.value, "pivots": self.pivots}
        if self.objective is not None:
            doc["objective"] = fmt(self.objective)
        if self.fractions is not None:
            doc["fractions"] = self.fractions.to_doc()
        if self.certificate is not None:
            doc["certificate"] = [fmt(v) for v in self.certificate]
        if self.ray is not None:
            doc["ray"] = [fmt(v) for v in self.ray]
        return doc


def build_lp(instance: Instance, mode: LpMode = LpMode.PROPORTIONAL_SWAP_EF, eps=ZERO, values=None) -> LpProblem:
    """Assemble the LP; ``values[i][j][k] = V_ij(I_k)`` may be supplied precomputed."""
    mode = LpMode(mode)
    eps = as_rational(eps)
    vals = values if values is not None else instance.interval_values()
    n, m = instance.n, instance.m
    nv = n * m

    def var(i, k):
        return i * m + k

    c = [ZERO] * nv
    for j in range(n):
        for k in range(m):
            c[var(j, k)] = sum((vals[i][j][k] for i in range(n)), ZERO)

    A_eq, b_eq, eq_labels = [], [], []
    for k in range(m):
        row = [ZERO] * nv
        for i in range(n):
            row[var(i, k)] = Fraction(1)
        A_eq.append(row)
        b_eq.append(Fraction(1))
        eq_labels.append(f"cover I{k + 1}")

    A_ub, b_ub, ub_labels = [], [], []
    if mode is not LpMode.UNCONSTRAINED:
        for i in range(n):
            row = [ZERO] * nv
            for j in range(n):
                for k in range(m):
                    row[var(j, k)] = vals[i][j][k]
            A_ub.append(row)
            b_ub.append(Fraction(1, n))
            ub_labels.append(f"prop {i + 1}")
    if mode in (LpMode.PROPORTIONAL_SWAP_EF, LpMode.PROPORTIONAL_EPS_SWAP_EF):
        slack = eps if mode is LpMode.PROPORTIONAL_EPS_SWAP_EF else ZERO
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                row = [ZERO] * nv
                for k in range(m):
                    d = vals[i][i][k] - vals[i][j][k]
                    row[var(i, k)] += d
                    row[var(j, k)] -= d
                A_ub.append(row)
                b_ub.append(slack)
                ub_labels.append(f"swapef {i + 1},{j + 1}")
    if mode is LpMode.SWAP_STABLE:
        for i in range(n):
            for j, k2 in combinations(range(n), 2):
                row = [ZERO] * nv
                for k in range(m):
                    d = vals[i][j][k] - vals[i][k2][k]
                    row[var(j, k)] += d
                    row[var(k2, k)] -= d
                A_ub.append(row)
                b_ub.append(ZERO)
                ub_labels.append(f"stable {i + 1};{j + 1},{k2 + 1}")
    return LpProblem(n, m, mode, eps, c, A_eq, b_eq, A_ub, b_ub, eq_labels, ub_labels)


WARM_START_VARS = 100


def float_basis_hint(problem: LpProblem, tol: float = 1e-9) -> list[int]:
    """Support of a HiGHS solution (originals, then slacks); empty if HiGHS fails."""
    from scipy.optimize import linprog

    A_ub = np.array(problem.A_ub, dtype=float).reshape(len(problem.A_ub), problem.num_vars)
    A_eq = np.array(problem.A_eq, dtype=float).reshape(len(problem.A_eq), problem.num_vars)
    b_ub = np.array(problem.b_ub, dtype=float)
    res = linprog(
        np.array(problem.c, dtype=float),
        A_ub=A_ub if len(b_ub) else None,
        b_ub=b_ub if len(b_ub) else None,
        A_eq=A_eq if len(problem.b_eq) else None,
        b_eq=np.array(problem.b_eq, dtype=float) if len(problem.b_eq) else None,
        bounds=(0, None),
        method="highs",
    )
    if res.status != 0:
        return []
    hint = [j for j, v in enumerate(res.x) if v > tol]
    if len(b_ub):
        slack = b_ub - A_ub @ res.x
        hint += [problem.num_vars + r for r, v in enumerate(slack) if v > tol]
    return hint


def solve_lp(problem: LpProblem, warm_start: bool | None = None) -> LpSolution:
    """Exact solve.  ``warm_start`` seeds the basis from a floating-point solve
    (default: only for problems above ``WARM_START_VARS`` variables); the
    answer is still certified by exact pivoting."""
    if warm_start is None:
        warm_start = problem.num_vars > WARM_START_VARS
    hint = float_basis_hint(problem) if warm_start else []
    res = simplex(problem.c, problem.A_eq, problem.b_eq, problem.A_ub, problem.b_ub, basis_hint=hint)
    if res.status is not LpStatus.OPTIMAL:
        return LpSolution(res.status, certificate=res.certificate, ray=res.ray, pivots=res.pivots)
    m = problem.m
    x = FractionMatrix(tuple(tuple(res.x[i * m : (i + 1) * m]) for i in range(problem.n)))
    return LpSolution(
        LpStatus.OPTIMAL, fractions=x, objective=res.objective, duals=res.duals, pivots=res.pivots
    )


def realize_fractions(instance: Instance, fr: FractionMatrix, layout: str | None = None) -> Allocation:
    """Turn interval fractions into pieces with exactly proportional values.

    ``layout`` is ``"contiguous"`` (slices in agent order) or ``"symmetric"``
    (nested shells around each interval's midpoint); by default contiguous is
    used exactly when every density is piecewise constant.
    """
    n, m = instance.n, instance.m
    fr.validate(n, m)
    if layout is None:
        layout = "contiguous" if instance.is_piecewise_constant else "symmetric"
    if layout not in ("contiguous", "symmetric"):
        raise ValueError(f"unknown layout {layout!r}")
    parts: list[list[Interval]] = [[] for _ in range(n)]
    for k, iv in enumerate(instance.intervals):
        w = iv.length
        t = ZERO
        for i in range(n):
            share = fr.x[i][k]
            if share:
                if layout == "contiguous":
                    parts[i].append(Interval(iv.lo + t * w, iv.lo + (t + share) * w))
                else:
                    half_in, half_out = t * w / 2, (t + share) * w / 2
                    parts[i].append(Interval(iv.lo + half_in, iv.lo + half_out))
                    parts[i].append(Interval(iv.hi - half_out, iv.hi - half_in))
            t += share
    return Allocation(tuple(Piece(tuple(p)) for p in parts))


def greedy_optimal(
    instance: Instance, evaluate: Callable[[int, int, Fraction, Fraction], Fraction] | None = None
) -> Allocation:
    """Give each whole interval to the holder that costs everyone least in total.

    Uses exactly ``m * n**2`` evaluate queries; ties go to the lowest index.
    """
    ev = evaluate or (lambda i, j, x, y: _evaluate(instance, i, j, x, y))
    n = instance.n
    parts: list[list[Interval]] = [[] for _ in range(n)]
    for iv in instance.intervals:
        costs = [sum((ev(i, j, iv.lo, iv.hi) for i in range(n)), ZERO) for j in range(n)]
        best = min(range(n), key=lambda j: (costs[j], j))
        parts[best].append(iv)
    return Allocation(tuple(Piece(tuple(p)) for p in parts))


def random_feasible_fractions(problem: LpProblem, rng: np.random.Generator, count: int) -> list[FractionMatrix]:
    """Random points of the feasible polytope, exactly.

    Vertices come from solving the LP under random objectives; each sample is
    a random convex combination of those vertices and the uniform matrix.
    (Shrinking toward uniform alone does not work: proportionality is tight
    there on every normalized instance.)
    """
    n, m = problem.n, problem.m
    uniform = [Fraction(1, n)] * (n * m)
    if not problem.is_feasible(uniform):
        raise InfeasibleModel("the uniform fraction matrix is infeasible for this problem")
    points = [uniform]
    for _ in range(min(count, 2 * n * m + 2)):
        c = [Fraction(int(v)) for v in rng.integers(-6, 7, size=n * m)]
        res = simplex(c, problem.A_eq, problem.b_eq, problem.A_ub, problem.b_ub)
        if res.status is LpStatus.OPTIMAL:
            points.append(list(res.x))
    out = []
    for _ in range(count):
        w = [int(v) for v in rng.integers(0, 5, size=len(points))]
        if not any(w):
            w[int(rng.integers(len(points)))] = 1
        total = sum(w)
        x = [sum((Fraction(wk, total) * pt[q] for wk, pt in zip(w, points) if wk), ZERO) for q in range(n * m)]
        out.append(FractionMatrix(tuple(tuple(x[i * m : (i + 1) * m]) for i in range(n))))
    return out


class OptimizationResult(NamedTuple):
    allocation: Allocation
    report: FairnessReport
    solution: LpSolution
    problem: LpProblem


def optimal_fair_allocation(
    instance: Instance, mode: LpMode = LpMode.PROPORTIONAL_SWAP_EF, eps=ZERO, layout: str | None = None
) -> OptimizationResult:
    mode = LpMode(mode)
    eps = as_rational(eps)
    problem = build_lp(instance, mode, eps)
    solution = solve_lp(problem)
    if solution.status is LpStatus.INFEASIBLE:
        raise InfeasibleModel(f"no allocation satisfies mode {mode.value}", solution.certificate)
    if solution.status is not LpStatus.OPTIMAL:
        raise InfeasibleModel(f"LP for mode {mode.value} is {solution.status.value}")
    alloc = realize_fractions(instance, solution.fractions, layout)
    audit_eps = eps if mode is LpMode.PROPORTIONAL_EPS_SWAP_EF else ZERO
    return OptimizationResult(alloc, audit(instance, alloc, audit_eps), solution, problem)
