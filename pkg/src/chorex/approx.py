"""Approximate optima for Lipschitz densities via piecewise-constant rounding.

Each density is replaced on a uniform cell grid by a dyadic lower
approximation ``v'`` with ``v - band <= v' <= v``; the fair LP is solved
exactly on ``v'`` and the result is audited against the true densities by
quadrature.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import BadEps, OracleError, OutOfRange, SchemaError
from .model import ZERO, Allocation, Instance, PiecewiseDensity, as_rational, fmt
from .optimize import LpMode, OptimizationResult, optimal_fair_allocation

MODES = ("prop", "swapef")
DEFAULT_TOLERANCE = 1e-6


@dataclass(frozen=True)
class DensityOracle:
    """Pointwise density with a Lipschitz constant ``K`` and bounds ``M <= v <= U``.

    ``evaluator`` maps a float array to a float array.  ``breakpoints`` lists
    kinks (quadrature splits there); ``exact`` is the rational density when
    the oracle is piecewise linear.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    K: Fraction
    M: Fraction = ZERO
    U: Fraction = Fraction(1)
    breakpoints: tuple[float, ...] = ()
    exact: PiecewiseDensity | None = None
    label: str = ""

    def __post_init__(self):
        for name in ("K", "M", "U"):
            object.__setattr__(self, name, as_rational(getattr(self, name)))

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(x, dtype=float)), dtype=float)

    @classmethod
    def from_density(cls, d: PiecewiseDensity, M=None, U=None) -> DensityOracle:
        """Wrap an exact piecewise-linear density; K, M, U are read off its segments."""
        segs = d.segments
        K = max((abs(s.b) for s in segs), default=ZERO)
        ends = [s.at(p) for s in segs for p in (s.lo, s.hi)]
        los = np.array([float(s.lo) for s in segs])
        a = np.array([float(s.a) for s in segs])
        b = np.array([float(s.b) for s in segs])

        def ev(x):
            k = np.clip(np.searchsorted(los, x, side="right") - 1, 0, len(los) - 1)
            return a[k] + b[k] * x

        return cls(
            ev,
            K,
            min(ends) if M is None else M,
            max(ends) if U is None else U,
            tuple(float(p) for p in d.breakpoints),
            d,
            "pwl",
        )

    def spot_check(self, rng: np.random.Generator, samples: int = 512, slack: float = 1e-9):
        """Raise :class:`OracleError` if sampled pairs break the Lipschitz or range bounds."""
        x = rng.random(samples)
        y = np.clip(x + (rng.random(samples) - 0.5) * 0.1, 0.0, 1.0)
        vx, vy = self(x), self(y)
        if not (np.all(np.isfinite(vx)) and np.all(np.isfinite(vy))):
            raise OracleError(f"{self.label or 'oracle'} returned non-finite values")
        lo, hi = min(vx.min(), vy.min()), max(vx.max(), vy.max())
        if lo < float(self.M) - slack or hi > float(self.U) + slack:
            raise OracleError(f"{self.label or 'oracle'} leaves [{self.M}, {self.U}]: saw [{lo}, {hi}]")
        ratio = np.abs(vx - vy) - float(self.K) * np.abs(x - y)
        if ratio.max() > slack:
            raise OracleError(f"{self.label or 'oracle'} is not {self.K}-Lipschitz on sampled pairs")


@dataclass(frozen=True)
class DyadicGrid:
    """Values ``r / 2**a`` in ``[0, range_top]``."""

    a: int
    range_top: Fraction

    def __post_init__(self):
        object.__setattr__(self, "range_top", as_rational(self.range_top))
        if self.a < 0:
            raise ValueError("grid exponent must be non-negative")

    @staticmethod
    def exponent_for(step: Fraction) -> int:
        """Smallest ``a`` with ``2**-a <= step``."""
        step = as_rational(step)
        if step <= 0:
            raise BadEps(f"grid step must be positive, got {step}")
        a = 0
        while Fraction(1, 2**a) > step:
            a += 1
        return a

    @classmethod
    def from_eps(cls, eps, range_top) -> DyadicGrid:
        """``a = ceil(2 + log2(1/eps))``, i.e. spacing at most ``eps/4``."""
        return cls(cls.exponent_for(as_rational(eps) / 4), range_top)

    @property
    def step(self) -> Fraction:
        return Fraction(1, 2**self.a)


def dyadic_floor(value: float, grid: DyadicGrid) -> Fraction:
    """Largest grid element not above ``value``."""
    if isinstance(value, Fraction):
        q = value
    else:
        if not math.isfinite(value):
            raise OutOfRange(f"{value} is not finite")
        q = Fraction(value)  # exact binary expansion of the float
    if q < 0 or q > grid.range_top:
        raise OutOfRange(f"{value} outside [0, {grid.range_top}]")
    scale = 2**grid.a
    return Fraction(math.floor(q * scale), scale)


@dataclass
class DiscretizationResult:
    instance: Instance
    subinterval_count: int
    width: Fraction
    grid: DyadicGrid
    band: Fraction
    minima: np.ndarray  # minima[i, j, k]: sampled minimum less the Lipschitz margin
    rounded: list  # rounded[i][j][k]: p*(I_k) as Fractions

    def sandwich_extremes(self, oracles, samples_per_cell: int = 5) -> tuple[float, float]:
        """Smallest and largest ``v(x) - p*`` over sample points in every cell."""
        n, c = len(oracles), self.subinterval_count
        t = (np.arange(c)[:, None] + np.linspace(0, 1, samples_per_cell)[None, :]) / c
        lo, hi = np.inf, -np.inf
        for i in range(n):
            for j in range(n):
                gap = oracles[i][j](t) - np.array([float(x) for x in self.rounded[i][j]])[:, None]
                lo, hi = min(lo, float(gap.min())), max(hi, float(gap.max()))
        return lo, hi


def cell_count(n: int, K: Fraction, eps: Fraction, mode: str) -> int:
    if mode == "prop":
        return max(1, math.ceil(2 * n * K / eps))
    return max(1, math.ceil(8 * K / eps))


def _check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    return mode


def discretize(oracles: Sequence[Sequence[DensityOracle]], eps, mode: str = "prop") -> DiscretizationResult:
    """Round every density down to a dyadic step function on a uniform grid.

    Cells: ``ceil(2nK/eps)`` (prop, band ``eps/n``) or ``ceil(8K/eps)``
    (swapef, band ``eps/4``).  The grid spacing is half the band so the
    Lipschitz drift across a cell and the rounding each use at most half.
    """
    eps = as_rational(eps)
    if eps <= 0:
        raise BadEps(f"eps must be positive, got {eps}")
    _check_mode(mode)
    n = len(oracles)
    K = max(o.K for row in oracles for o in row)
    U = max(o.U for row in oracles for o in row)
    band = eps / n if mode == "prop" else eps / 4
    grid = DyadicGrid(DyadicGrid.exponent_for(band / 2), U)
    c = cell_count(n, K, eps, mode)
    h = Fraction(1, c)
    pts = np.arange(2 * c + 1) / (2 * c)  # endpoints and midpoints
    margin = float(K * h / 2)
    minima = np.empty((n, n, c))
    rounded = []
    for i in range(n):
        row = []
        for j in range(n):
            v = oracles[i][j](pts)
            samp = np.minimum(np.minimum(v[0:-1:2], v[1::2]), v[2::2])
            low = np.maximum(samp - margin, 0.0)
            minima[i, j] = low
            row.append([dyadic_floor(float(x), grid) for x in low])
        rounded.append(row)
    bounds = [Fraction(k, c) for k in range(c + 1)]
    densities = tuple(
        tuple(
            PiecewiseDensity.from_parts([(bounds[k], bounds[k + 1], rounded[i][j][k]) for k in range(c)])
            for j in range(n)
        )
        for i in range(n)
    )
    inst = Instance(densities, strict=False)
    return DiscretizationResult(inst, c, h, grid, band, minima, rounded)


@dataclass
class QuadratureAudit:
    """True-valuation audit of an allocation; values are floats within ``error_bound``."""

    tensor: np.ndarray  # W[i, j, p] = V_ij(A_p)
    eps: float
    tolerance: float
    error_bound: float
    subdivisions: int

    @property
    def n(self) -> int:
        return self.tensor.shape[0]

    @property
    def values(self) -> np.ndarray:
        n = self.n
        return np.array([sum(self.tensor[i, p, p] for p in range(n)) for i in range(n)])

    @property
    def social_cost(self) -> float:
        return float(self.values.sum())

    @property
    def proportional_excess(self) -> float:
        """``max_i V_i - 1/n``; proportional within tolerance iff at most ``tolerance``."""
        return float(self.values.max() - 1 / self.n)

    @property
    def swap_ef_excess(self) -> float:
        """Largest ``lhs - rhs - eps`` over ordered pairs (``-inf`` for one agent)."""
        W, n = self.tensor, self.n
        worst = -math.inf
        for i in range(n):
            for j in range(n):
                if i != j:
                    gap = W[i, i, i] + W[i, j, j] - W[i, i, j] - W[i, j, i] - self.eps
                    worst = max(worst, float(gap))
        return worst

    @property
    def proportional(self) -> bool:
        return self.proportional_excess <= self.tolerance

    @property
    def swap_ef(self) -> bool:
        return self.swap_ef_excess <= self.tolerance

    def to_doc(self) -> dict:
        return {
            "values": [repr(float(v)) for v in self.values],
            "social_cost": repr(self.social_cost),
            "proportional": self.proportional,
            "proportional_excess": repr(self.proportional_excess),
            "swap_ef": self.swap_ef,
            "swap_ef_excess": repr(self.swap_ef_excess),
            "eps": repr(self.eps),
            "tolerance": repr(self.tolerance),
            "error_bound": repr(self.error_bound),
            "subdivisions": self.subdivisions,
        }


def quadrature_nodes(alloc_piece, per_unit: int, kinks: Sequence[float] = ()):
    """Midpoints and weights of the composite midpoint rule on a piece, split at ``kinks``."""
    mids, weights = [], []
    ks = np.asarray(sorted(kinks), dtype=float)
    for iv in alloc_piece:
        lo, hi = float(iv.lo), float(iv.hi)
        if hi <= lo:
            continue
        inner = ks[(ks > lo) & (ks < hi)]
        edges = np.concatenate(([lo], inner, [hi]))
        for a, b in zip(edges[:-1], edges[1:]):
            k = max(1, math.ceil((b - a) * per_unit))
            t = a + (np.arange(k) + 0.5) * ((b - a) / k)
            mids.append(t)
            weights.append(np.full(k, (b - a) / k))
    if not mids:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(mids), np.concatenate(weights)


def quadrature_audit(
    oracles, alloc: Allocation, eps=0, per_unit: int | None = None, tolerance: float = DEFAULT_TOLERANCE
) -> QuadratureAudit:
    """``V_ij(A_p)`` for the true densities by the composite midpoint rule.

    Splitting at declared kinks makes the rule exact (up to rounding) for
    piecewise-linear oracles; otherwise the reported bound is ``K h / 4`` per
    unit length.
    """
    n = len(oracles)
    K = max(float(o.K) for row in oracles for o in row)
    if per_unit is None:
        per_unit = 4096
    kinks = sorted({p for row in oracles for o in row for p in o.breakpoints})
    linear = all(o.exact is not None for row in oracles for o in row)
    W = np.zeros((n, n, n))
    for p, piece in enumerate(alloc):
        t, w = quadrature_nodes(piece, per_unit, kinks)
        if len(t) == 0:
            continue
        for i in range(n):
            for j in range(n):
                W[i, j, p] = float(np.dot(oracles[i][j](t), w))
    bound = 1e-12 if linear else K / (4 * per_unit)
    return QuadratureAudit(W, float(as_rational(eps)), tolerance, bound, per_unit)


@dataclass
class ApproxResult:
    allocation: Allocation
    discretization: DiscretizationResult
    optimization: OptimizationResult
    audit: QuadratureAudit
    mode: str
    eps: Fraction
    bound: Fraction  # allowed excess of e(A') over the true optimum
    notes: list[str] = field(default_factory=list)

    @property
    def report(self):
        """Exact fairness report with respect to the discretized densities."""
        return self.optimization.report

    def to_doc(self) -> dict:
        d = self.discretization
        return {
            "mode": self.mode,
            "eps": fmt(self.eps),
            "cells": d.subinterval_count,
            "grid_exponent": d.grid.a,
            "band": fmt(d.band),
            "discrete_objective": fmt(self.optimization.solution.objective),
            "discrete_report": self.report.to_doc(),
            "true_audit": self.audit.to_doc(),
            "optimality_gap_bound": fmt(self.bound),
            "notes": self.notes,
        }


def approx_optimal(
    oracles, eps, mode: str = "prop", tolerance: float = DEFAULT_TOLERANCE, quadrature_per_unit: int | None = None
) -> ApproxResult:
    eps = as_rational(eps)
    _check_mode(mode)
    n = len(oracles)
    disc = discretize(oracles, eps, mode)
    if mode == "prop":
        res = optimal_fair_allocation(disc.instance, LpMode.PROPORTIONAL)
        bound, audit_eps = eps, ZERO
        note = "e(A') <= e* + eps, e* the optimal proportional cost"
    else:
        res = optimal_fair_allocation(disc.instance, LpMode.PROPORTIONAL_EPS_SWAP_EF, eps / 2)
        bound, audit_eps = n * eps / 4, eps
        note = "e(A') <= e* + n*eps/4, e* the optimal proportional swap envy-free cost"
    K = max(float(o.K) for row in oracles for o in row)
    per_unit = quadrature_per_unit or 64 * max(1, math.ceil(2 * n * K / float(eps)))
    audit = quadrature_audit(oracles, res.allocation, audit_eps, per_unit, tolerance)
    return ApproxResult(res.allocation, disc, res, audit, mode, eps, bound, [note])


# oracle-spec documents


def _poly(coeffs: list[Fraction]) -> Callable:
    c = [float(x) for x in coeffs]
    return lambda x: np.polynomial.polynomial.polyval(x, c)


def _pwl_density(knots) -> PiecewiseDensity:
    pts = [(as_rational(x), as_rational(y)) for x, y in knots]
    if pts[0][0] != 0 or pts[-1][0] != 1:
        raise SchemaError("pwl knots must start at 0 and end at 1")
    parts = []
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        if x1 <= x0:
            raise SchemaError("pwl knots must be strictly increasing")
        b = (y1 - y0) / (x1 - x0)
        parts.append((x0, x1, y0 - b * x0, b))
    return PiecewiseDensity.from_parts(parts, fill_zero=False)


def oracle_from_doc(doc: dict, K=None, M=None, U=None) -> DensityOracle:
    """One density: ``{"family": "constant"|"polynomial"|"sinusoidal"|"pwl", ...}``."""
    fam = doc.get("family")
    K = doc.get("K", K)
    M = doc.get("M", M)
    U = doc.get("U", U)
    if fam == "constant":
        d = PiecewiseDensity.constant(as_rational(doc["value"]))
        return DensityOracle.from_density(d, M, U)
    if fam == "pwl":
        base = DensityOracle.from_density(_pwl_density(doc["knots"]), M, U)
        if K is not None:
            base = DensityOracle(base.evaluator, as_rational(K), base.M, base.U, base.breakpoints, base.exact, "pwl")
        return base
    if fam == "polynomial":
        coeffs = [as_rational(c) for c in doc["coefficients"]]
        if K is None:
            K = sum((k * abs(c) for k, c in enumerate(coeffs)), ZERO)
        return DensityOracle(_poly(coeffs), as_rational(K), M or ZERO, U if U is not None else sum(map(abs, coeffs)), label="polynomial")
    if fam == "sinusoidal":
        a = as_rational(doc["offset"])
        amp = as_rational(doc["amplitude"])
        freq = as_rational(doc.get("frequency", 1))
        phase = as_rational(doc.get("phase", 0))
        if amp > a:
            raise SchemaError("sinusoidal density would go negative: amplitude exceeds offset")
        fa, famp, ff, fp = float(a), float(amp), float(freq), float(phase)
        if K is None:
            # 2*pi*|amp|*freq, rounded up to a rational
            K = Fraction(math.ceil(2 * math.pi * abs(famp) * ff * 2**20), 2**20)
        return DensityOracle(
            lambda x: fa + famp * np.sin(2 * np.pi * (ff * x + fp)),
            as_rational(K),
            M if M is not None else a - abs(amp),
            U if U is not None else a + abs(amp),
            label="sinusoidal",
        )
    raise SchemaError(f"unknown density family {fam!r}")


def parse_oracle_spec(text) -> list[list[DensityOracle]]:
    """``{"densities": [[...], ...], "K": R, "M": R, "U": R}``; global K/M/U apply to every entry."""
    doc = json.loads(text) if isinstance(text, (str, bytes)) else text
    if not isinstance(doc, dict) or "densities" not in doc:
        raise SchemaError("oracle spec needs a 'densities' matrix")
    rows = doc["densities"]
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise SchemaError("densities must be a non-empty square matrix")
    K, M, U = doc.get("K"), doc.get("M"), doc.get("U")
    return [[oracle_from_doc(d, K, M, U) for d in row] for row in rows]


def check_oracles(oracles, seed: int = 0, tolerance: float = 1e-6):
    """Spot-check every oracle and that each agent's totals are 1 (by quadrature)."""
    rng = np.random.default_rng(seed)
    for row in oracles:
        for o in row:
            o.spot_check(rng)
    t = (np.arange(1 << 16) + 0.5) / (1 << 16)
    for i, row in enumerate(oracles):
        if all(o.exact is not None for o in row):
            total = float(sum(o.exact.integral(0, 1) for o in row))
        else:
            total = float(sum(o(t).mean() for o in row))
        if abs(total - 1) > tolerance:
            raise OracleError(f"agent {i + 1} totals {total:.9f}, expected 1")


def exact_instance(oracles) -> Instance | None:
    """The exact instance when every oracle is piecewise linear, else None."""
    if any(o.exact is None for row in oracles for o in row):
        return None
    return Instance(tuple(tuple(o.exact for o in row) for row in oracles), strict=False)
