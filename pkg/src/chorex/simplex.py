"""Dense two-phase simplex over the rationals.

Solves ``min c.x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x >= 0`` with
exact :class:`~fractions.Fraction` pivoting and Bland's rule, so it cannot
cycle and every reported solution satisfies its rows exactly.

Failure modes come with certificates:

* infeasible: ``y`` (one entry per row, equality rows first) with
  ``y_ub <= 0``, ``y^T A <= 0`` column-wise and ``y^T b > 0``;
* unbounded: a ray ``d >= 0`` with ``A_eq d = 0``, ``A_ub d <= 0``, ``c.d < 0``.

Optimal solutions carry the dual vector ``y`` (``y_ub <= 0``,
``c - y^T A >= 0``, ``y^T b = c.x``).

A ``basis_hint`` (columns expected in an optimal basis, e.g. the support of
a floating-point solution) is pivoted in first; the exact method then only
confirms or repairs it.  Pivoting uses ``gmpy2.mpq`` when available.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

try:
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction

ZERO = _Q(0)
ONE = _Q(1)


def _out(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class SimplexResult:
    status: LpStatus
    x: list[Fraction] | None = None
    objective: Fraction | None = None
    duals: list[Fraction] | None = None
    certificate: list[Fraction] | None = None
    ray: list[Fraction] | None = None
    basis: tuple[int, ...] | None = None
    pivots: int = 0


class _Tableau:
    def __init__(self, rows, basis, ncols):
        self.rows = rows  # each row: list of ncols + 1 Fractions, rhs last
        self.basis = basis
        self.ncols = ncols
        self.obj: list[Fraction] = []
        self.pivots = 0

    def set_objective(self, cost: Sequence[Fraction]):
        obj = list(cost) + [ZERO]
        for r, row in enumerate(self.rows):
            cb = cost[self.basis[r]]
            if cb:
                for j, v in enumerate(row):
                    if v:
                        obj[j] -= cb * v
        self.obj = obj

    def pivot(self, r: int, s: int):
        prow = self.rows[r]
        piv = prow[s]
        if piv != 1:
            prow = [v / piv if v else v for v in prow]
            self.rows[r] = prow
        nz = [j for j, v in enumerate(prow) if v]
        for q, row in enumerate(self.rows):
            if q == r:
                continue
            f = row[s]
            if f:
                for j in nz:
                    row[j] -= f * prow[j]
        f = self.obj[s] if self.obj else 0
        if f:
            obj = self.obj
            for j in nz:
                obj[j] -= f * prow[j]
        self.basis[r] = s
        self.pivots += 1

    def run(self, allowed: Sequence[bool]) -> int | None:
        """Bland's rule to optimality. Returns the entering column if unbounded."""
        while True:
            obj = self.obj
            s = next((j for j in range(self.ncols) if allowed[j] and obj[j] < 0), None)
            if s is None:
                return None
            best = None
            for r, row in enumerate(self.rows):
                a = row[s]
                if a > 0:
                    ratio = row[-1] / a
                    key = (ratio, self.basis[r])
                    if best is None or key < best[0]:
                        best = (key, r)
            if best is None:
                return s
            self.pivot(best[1], s)

    def value(self) -> Fraction:
        return -self.obj[-1]


def _q(v):
    if isinstance(v, (int, Fraction)):
        return _Q(v)
    return _Q(Fraction(v))


def simplex(c, A_eq=(), b_eq=(), A_ub=(), b_ub=(), basis_hint: Sequence[int] = ()) -> SimplexResult:
    c = [_q(v) for v in c]
    nv = len(c)
    A_eq = [[_q(v) for v in row] for row in A_eq]
    A_ub = [[_q(v) for v in row] for row in A_ub]
    b_eq = [_q(v) for v in b_eq]
    b_ub = [_q(v) for v in b_ub]
    if len(A_eq) != len(b_eq) or len(A_ub) != len(b_ub):
        raise ValueError("row and right-hand-side counts differ")
    for row in A_eq + A_ub:
        if len(row) != nv:
            raise ValueError("constraint row length differs from objective length")

    ne, nu = len(A_eq), len(A_ub)
    nrows = ne + nu
    # columns: originals | slacks (one per ub row) | artificials (as needed)
    slack0 = nv
    art0 = nv + nu
    raw = []
    signs = []
    need_art = []
    for r in range(nrows):
        if r < ne:
            coeffs, rhs, slack = A_eq[r], b_eq[r], None
        else:
            coeffs, rhs, slack = A_ub[r - ne], b_ub[r - ne], slack0 + (r - ne)
        sign = -1 if rhs < 0 else 1
        signs.append(sign)
        raw.append((coeffs, rhs, slack, sign))
        need_art.append(slack is None or sign < 0)
    art_col = {}
    for r in range(nrows):
        if need_art[r]:
            art_col[r] = art0 + len(art_col)
    ncols = art0 + len(art_col)

    rows, basis = [], []
    for r, (coeffs, rhs, slack, sign) in enumerate(raw):
        row = [ZERO] * (ncols + 1)
        for j, v in enumerate(coeffs):
            if v:
                row[j] = v if sign > 0 else -v
        if slack is not None:
            row[slack] = _Q(sign)
        row[-1] = rhs if sign > 0 else -rhs
        if r in art_col:
            row[art_col[r]] = ONE
            basis.append(art_col[r])
        else:
            basis.append(slack)
        rows.append(row)

    rows0, basis0 = [list(r) for r in rows], list(basis)
    tab = _Tableau(rows, basis, ncols)
    is_art = [j >= art0 for j in range(ncols)]
    allowed = [not a for a in is_art]

    def dual_of_row(r: int) -> Fraction:
        # y'_r from the reduced cost of the row's identity column
        if r in art_col:
            col, cost = art_col[r], phase_cost[art_col[r]]
        else:
            col, cost = slack0 + (r - ne), ZERO
        return cost - tab.obj[col]

    if basis_hint and not _crash(tab, basis_hint, art0):
        # the hinted basis was not primal feasible; start over cold
        tab = _Tableau([list(r) for r in rows0], list(basis0), ncols)

    if any(is_art[b] for b in tab.basis):
        phase_cost = [ONE if a else ZERO for a in is_art]
        tab.set_objective(phase_cost)
        tab.run(allowed)
        if tab.value() > 0:
            cert = [_out(signs[r] * dual_of_row(r)) for r in range(nrows)]
            return SimplexResult(LpStatus.INFEASIBLE, certificate=cert, pivots=tab.pivots)
        # drive zero-level artificials out of the basis; drop redundant rows
        r = 0
        while r < len(tab.rows):
            if is_art[tab.basis[r]]:
                s = next((j for j in range(art0) if tab.rows[r][j]), None)
                if s is None:
                    del tab.rows[r]
                    del tab.basis[r]
                    continue
                tab.pivot(r, s)
            r += 1

    phase_cost = c + [ZERO] * (ncols - nv)
    tab.set_objective(phase_cost)
    entering = tab.run(allowed)
    if entering is not None:
        ray = [ZERO] * nv
        if entering < nv:
            ray[entering] = ONE
        for r, row in enumerate(tab.rows):
            b = tab.basis[r]
            if b < nv:
                ray[b] = -row[entering]
        return SimplexResult(LpStatus.UNBOUNDED, ray=[_out(v) for v in ray], pivots=tab.pivots)

    x = [ZERO] * nv
    for r, row in enumerate(tab.rows):
        if tab.basis[r] < nv:
            x[tab.basis[r]] = row[-1]
    # tableau columns are a fixed linear image of the original ones, so the
    # identity columns' reduced costs give duals for dropped rows too
    duals = [_out(signs[r] * dual_of_row(r)) for r in range(nrows)]
    return SimplexResult(
        LpStatus.OPTIMAL,
        x=[_out(v) for v in x],
        objective=_out(sum((ci * xi for ci, xi in zip(c, x)), ZERO)),
        duals=duals,
        basis=tuple(tab.basis),
        pivots=tab.pivots,
    )


def _crash(tab: _Tableau, hint: Sequence[int], art0: int) -> bool:
    """Pivot hinted columns into the basis; True if the result is primal feasible."""
    in_basis = set(tab.basis)
    hinted = set(hint)
    for s in hint:
        if s in in_basis:
            continue
        # prefer evicting artificials, then any column outside the hint
        best = None
        for r, row in enumerate(tab.rows):
            b = tab.basis[r]
            if row[s] and b not in hinted:
                key = (b < art0, abs(row[s]) != 1, r)
                if best is None or key < best[0]:
                    best = (key, r)
        if best is None:
            continue  # dependent on columns already placed
        r = best[1]
        in_basis.discard(tab.basis[r])
        tab.pivot(r, s)
        in_basis.add(s)
    return all(row[-1] >= 0 for row in tab.rows)
