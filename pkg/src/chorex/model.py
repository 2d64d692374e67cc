"""Instances, pieces and allocations over the unit interval, with exact values.

Everything here is built on :class:`fractions.Fraction`.  A density is a
list of affine segments ``a + b*x`` tiling ``[0, 1]``; integrals over finite
unions of intervals are therefore closed-form and exact.

Agents are indexed from 0 in the Python API.  Documents meant for people
(JSON reports, query scripts) label agents from 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

from .errors import (
    DimensionError,
    NegativeDensityError,
    NormalizationError,
    SchemaError,
)

ZERO = Fraction(0)
ONE = Fraction(1)


def as_rational(value) -> Fraction:
    """Convert ints, Fractions and rational strings ("3/4", "0.5") exactly.

    Floats are rejected: they rarely mean the value the user typed.
    """
    if isinstance(value, bool):
        raise SchemaError(f"not a rational: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise SchemaError(f"not a rational string: {value!r}") from None
    raise SchemaError(f"expected a rational string or int, got {type(value).__name__}")


def fmt(q: Fraction) -> str:
    return str(q)


@dataclass(frozen=True, order=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", as_rational(self.lo))
        object.__setattr__(self, "hi", as_rational(self.hi))
        if self.lo > self.hi:
            raise SchemaError(f"interval has lo > hi: [{self.lo}, {self.hi}]")

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    @property
    def degenerate(self) -> bool:
        return self.lo == self.hi

    def intersect(self, other: Interval) -> Interval | None:
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo < hi:
            return Interval(lo, hi)
        return None

    def __str__(self) -> str:
        return f"[{self.lo}, {self.hi}]"


def canonicalize(intervals: Iterable[Interval]) -> tuple[Interval, ...]:
    """Sort, drop measure-zero intervals and merge touching/overlapping ones."""
    ivs = sorted(iv for iv in intervals if not iv.degenerate)
    out: list[Interval] = []
    for iv in ivs:
        if out and iv.lo <= out[-1].hi:
            if iv.hi > out[-1].hi:
                out[-1] = Interval(out[-1].lo, iv.hi)
        else:
            out.append(iv)
    return tuple(out)


@dataclass(frozen=True)
class Piece:
    """A finite union of intervals, always held in canonical form."""

    intervals: tuple[Interval, ...] = ()

    def __post_init__(self):
        ivs = [iv if isinstance(iv, Interval) else Interval(*iv) for iv in self.intervals]
        object.__setattr__(self, "intervals", canonicalize(ivs))

    @classmethod
    def of(cls, *pairs) -> Piece:
        return cls(tuple(Interval(lo, hi) for lo, hi in pairs))

    @property
    def measure(self) -> Fraction:
        return sum((iv.length for iv in self.intervals), ZERO)

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    def __bool__(self) -> bool:
        return bool(self.intervals)

    def union(self, other: Piece) -> Piece:
        return Piece(self.intervals + other.intervals)

    def __str__(self) -> str:
        return " u ".join(map(str, self.intervals)) or "{}"


@dataclass(frozen=True)
class Allocation:
    """``pieces[i]`` is the piece held by agent ``i``."""

    pieces: tuple[Piece, ...]

    def __post_init__(self):
        ps = tuple(p if isinstance(p, Piece) else Piece(tuple(p)) for p in self.pieces)
        object.__setattr__(self, "pieces", ps)

    @classmethod
    def from_lists(cls, lists: Sequence[Sequence[tuple]]) -> Allocation:
        return cls(tuple(Piece.of(*pairs) for pairs in lists))

    @classmethod
    def empty(cls, n: int) -> Allocation:
        return cls(tuple(Piece() for _ in range(n)))

    @property
    def n(self) -> int:
        return len(self.pieces)

    def __getitem__(self, i: int) -> Piece:
        return self.pieces[i]

    def __iter__(self):
        return iter(self.pieces)


@dataclass(frozen=True)
class DensitySegment:
    """``a + b*x`` on ``interval``; non-negative throughout."""

    interval: Interval
    a: Fraction
    b: Fraction = ZERO

    def __post_init__(self):
        object.__setattr__(self, "a", as_rational(self.a))
        object.__setattr__(self, "b", as_rational(self.b))
        if not isinstance(self.interval, Interval):
            object.__setattr__(self, "interval", Interval(*self.interval))
        # affine, so checking both ends is enough
        if self.at(self.lo) < 0 or self.at(self.hi) < 0:
            raise NegativeDensityError(
                f"density {self.a} + {self.b}x is negative on {self.interval}"
            )

    @property
    def lo(self) -> Fraction:
        return self.interval.lo

    @property
    def hi(self) -> Fraction:
        return self.interval.hi

    def at(self, x: Fraction) -> Fraction:
        return self.a + self.b * x

    def antiderivative(self, x: Fraction) -> Fraction:
        return self.a * x + self.b * x * x / 2

    def integral(self, lo: Fraction, hi: Fraction) -> Fraction:
        """Integral over ``[lo, hi]`` clipped to this segment."""
        lo, hi = max(lo, self.lo), min(hi, self.hi)
        if lo >= hi:
            return ZERO
        return self.antiderivative(hi) - self.antiderivative(lo)


@dataclass(frozen=True)
class PiecewiseDensity:
    segments: tuple[DensitySegment, ...]

    def __post_init__(self):
        segs = tuple(sorted(self.segments, key=lambda s: (s.lo, s.hi)))
        segs = tuple(s for s in segs if not s.interval.degenerate)
        if not segs:
            raise SchemaError("a density needs at least one segment")
        if segs[0].lo != 0 or segs[-1].hi != 1:
            raise SchemaError("density segments must cover [0, 1]")
        for left, right in zip(segs, segs[1:]):
            if left.hi != right.lo:
                raise SchemaError(
                    f"density segments must tile [0, 1]: gap or overlap at {left.hi}/{right.lo}"
                )
        object.__setattr__(self, "segments", segs)

    @classmethod
    def constant(cls, c=1) -> PiecewiseDensity:
        return cls((DensitySegment(Interval(0, 1), c),))

    @classmethod
    def from_parts(cls, parts: Iterable[tuple], fill_zero: bool = True) -> PiecewiseDensity:
        """Build from ``(lo, hi, a[, b])`` tuples, zero-filling uncovered gaps."""
        segs = [DensitySegment(Interval(p[0], p[1]), p[2], p[3] if len(p) > 3 else 0) for p in parts]
        if fill_zero:
            segs.sort(key=lambda s: s.lo)
            filled, cursor = [], ZERO
            for s in segs:
                if s.lo > cursor:
                    filled.append(DensitySegment(Interval(cursor, s.lo), 0))
                filled.append(s)
                cursor = max(cursor, s.hi)
            if cursor < 1:
                filled.append(DensitySegment(Interval(cursor, 1), 0))
            segs = filled
        return cls(tuple(segs))

    @property
    def breakpoints(self) -> tuple[Fraction, ...]:
        return tuple(s.lo for s in self.segments) + (self.segments[-1].hi,)

    @property
    def is_constant(self) -> bool:
        """Piecewise constant (every slope is zero)."""
        return all(s.b == 0 for s in self.segments)

    def at(self, x) -> Fraction:
        x = as_rational(x)
        for s in self.segments:
            if s.lo <= x <= s.hi:
                return s.at(x)
        raise ValueError(f"{x} outside [0, 1]")

    def integral(self, lo, hi) -> Fraction:
        lo, hi = as_rational(lo), as_rational(hi)
        if lo >= hi:
            return ZERO
        return sum((s.integral(lo, hi) for s in self.segments if s.hi > lo and s.lo < hi), ZERO)

    def scaled(self, factor: Fraction) -> PiecewiseDensity:
        return PiecewiseDensity(
            tuple(DensitySegment(s.interval, s.a * factor, s.b * factor) for s in self.segments)
        )


def eval_value(density: PiecewiseDensity, piece: Piece) -> Fraction:
    """Exact integral of ``density`` over ``piece``."""
    return sum((density.integral(iv.lo, iv.hi) for iv in piece), ZERO)


@dataclass(frozen=True)
class Instance:
    """``densities[i][j]`` is agent i's disutility density when agent j holds a point.

    With ``strict`` (the default) every agent's totals must sum to exactly one.
    Discretized approximations are built with ``strict=False``.
    """

    densities: tuple[tuple[PiecewiseDensity, ...], ...]
    strict: bool = True
    scale: tuple[Fraction, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        rows = tuple(tuple(row) for row in self.densities)
        object.__setattr__(self, "densities", rows)
        n = len(rows)
        if n < 1:
            raise DimensionError("an instance needs at least one agent")
        for i, row in enumerate(rows):
            if len(row) != n:
                raise DimensionError(f"agent {i + 1} has {len(row)} densities, expected {n}")
        if self.strict:
            for i in range(n):
                total = self.row_total(i)
                if total != 1:
                    raise NormalizationError(i, total)

    @property
    def n(self) -> int:
        return len(self.densities)

    def density(self, i: int, j: int) -> PiecewiseDensity:
        return self.densities[i][j]

    def total(self, i: int, j: int) -> Fraction:
        return self.densities[i][j].integral(ZERO, ONE)

    def row_total(self, i: int) -> Fraction:
        return sum((self.total(i, j) for j in range(self.n)), ZERO)

    @cached_property
    def breakpoints(self) -> tuple[Fraction, ...]:
        pts = {ZERO, ONE}
        for row in self.densities:
            for d in row:
                pts.update(d.breakpoints)
        return tuple(sorted(pts))

    @cached_property
    def intervals(self) -> tuple[Interval, ...]:
        """The common refinement I_1..I_m of all density breakpoints."""
        bp = self.breakpoints
        return tuple(Interval(lo, hi) for lo, hi in zip(bp, bp[1:]))

    @property
    def m(self) -> int:
        return len(self.intervals)

    @cached_property
    def is_piecewise_constant(self) -> bool:
        return all(d.is_constant for row in self.densities for d in row)

    def value(self, i: int, j: int, piece: Piece) -> Fraction:
        return eval_value(self.densities[i][j], piece)

    def interval_values(self) -> list[list[list[Fraction]]]:
        """``vals[i][j][k] = V_ij(I_k)``."""
        ivs = self.intervals
        return [
            [[d.integral(iv.lo, iv.hi) for iv in ivs] for d in row]
            for row in self.densities
        ]


def normalize(instance: Instance) -> Instance:
    """Rescale each agent's densities so that its totals sum to one.

    The applied factors are kept in ``Instance.scale``.
    """
    factors = []
    rows = []
    for i in range(instance.n):
        total = instance.row_total(i)
        if total == 0:
            raise NormalizationError(i, total)
        f = 1 / total
        factors.append(f)
        rows.append(tuple(d.scaled(f) for d in instance.densities[i]))
    return Instance(tuple(rows), strict=True, scale=tuple(factors))


def _check_alloc(instance: Instance, alloc: Allocation):
    if alloc.n != instance.n:
        raise DimensionError(f"allocation has {alloc.n} pieces for {instance.n} agents")


def agent_value(instance: Instance, alloc: Allocation, i: int) -> Fraction:
    """V_i(A) = sum_j V_ij(A_j)."""
    _check_alloc(instance, alloc)
    return sum(
        (instance.value(i, j, alloc[j]) for j in range(instance.n)),
        ZERO,
    )


def social_cost(instance: Instance, alloc: Allocation) -> Fraction:
    """Total disutility e(A) = sum_i V_i(A)."""
    return sum((agent_value(instance, alloc, i) for i in range(instance.n)), ZERO)


def value_tensor(instance: Instance, alloc: Allocation) -> list[list[list[Fraction]]]:
    """``W[i][j][p] = V_ij(A_p)``: everything the fairness notions look at."""
    _check_alloc(instance, alloc)
    n = instance.n
    return [
        [[instance.value(i, j, alloc[p]) for p in range(n)] for j in range(n)]
        for i in range(n)
    ]


def ownership(alloc: Allocation) -> list[tuple[Interval, int | None]]:
    """Partition [0, 1] into maximal runs with a single owner (None = unallocated)."""
    pts = {ZERO, ONE}
    for piece in alloc:
        for iv in piece:
            pts.update((min(max(iv.lo, ZERO), ONE), min(max(iv.hi, ZERO), ONE)))
    pts = sorted(pts)
    runs: list[tuple[Interval, int | None]] = []
    for lo, hi in zip(pts, pts[1:]):
        mid = (lo + hi) / 2
        owner = None
        for i, piece in enumerate(alloc):
            if any(iv.lo < mid < iv.hi for iv in piece):
                owner = i
                break
        if runs and runs[-1][1] == owner:
            runs[-1] = (Interval(runs[-1][0].lo, hi), owner)
        else:
            runs.append((Interval(lo, hi), owner))
    return runs


def count_cuts(alloc: Allocation) -> int:
    """Interior points of (0, 1) where ownership changes."""
    return len(ownership(alloc)) - 1


@dataclass
class AllocationReport:
    overlaps: list[tuple[int, int, Interval]]
    out_of_range: list[tuple[int, Interval]]
    gaps: list[Interval]

    @property
    def valid(self) -> bool:
        return not self.overlaps and not self.out_of_range

    @property
    def complete(self) -> bool:
        return not self.gaps

    def to_doc(self) -> dict:
        return {
            "valid": self.valid,
            "complete": self.complete,
            "overlaps": [
                {"agents": [p + 1, q + 1], **interval_doc(iv)} for p, q, iv in self.overlaps
            ],
            "out_of_range": [{"agent": i + 1, **interval_doc(iv)} for i, iv in self.out_of_range],
            "gaps": [interval_doc(iv) for iv in self.gaps],
        }


def validate_allocation(instance: Instance | None, alloc: Allocation) -> AllocationReport:
    if instance is not None:
        _check_alloc(instance, alloc)
    overlaps = []
    for p in range(alloc.n):
        for q in range(p + 1, alloc.n):
            for a in alloc[p]:
                for b in alloc[q]:
                    common = a.intersect(b)
                    if common is not None:
                        overlaps.append((p, q, common))
    out_of_range = [
        (i, iv) for i, piece in enumerate(alloc) for iv in piece if iv.lo < 0 or iv.hi > 1
    ]
    union = Piece(tuple(iv for piece in alloc for iv in piece))
    gaps, cursor = [], ZERO
    for iv in union:
        if iv.lo > cursor:
            gaps.append(Interval(cursor, min(iv.lo, ONE)))
        cursor = max(cursor, iv.hi)
    if cursor < 1:
        gaps.append(Interval(cursor, ONE))
    return AllocationReport(overlaps, out_of_range, [g for g in gaps if not g.degenerate])


# -- documents ---------------------------------------------------------------


def interval_doc(iv: Interval) -> dict:
    return {"lo": fmt(iv.lo), "hi": fmt(iv.hi)}


def piece_doc(piece: Piece) -> list[dict]:
    return [interval_doc(iv) for iv in piece]


def allocation_to_doc(alloc: Allocation) -> dict:
    return {"pieces": [piece_doc(p) for p in alloc]}


def instance_to_doc(instance: Instance) -> dict:
    doc = {
        "n": instance.n,
        "densities": [
            [
                [
                    {"lo": fmt(s.lo), "hi": fmt(s.hi), "a": fmt(s.a), "b": fmt(s.b)}
                    for s in d.segments
                ]
                for d in row
            ]
            for row in instance.densities
        ],
    }
    if instance.scale is not None:
        doc["scale"] = [fmt(f) for f in instance.scale]
    return doc


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False)


def _load(text) -> dict:
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    if isinstance(text, str):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from None
    else:
        doc = text
    if not isinstance(doc, dict):
        raise SchemaError("top-level JSON value must be an object")
    return doc


def _interval_from(obj) -> Interval:
    if not isinstance(obj, dict) or "lo" not in obj or "hi" not in obj:
        raise SchemaError(f"interval must be an object with lo and hi: {obj!r}")
    return Interval(as_rational(obj["lo"]), as_rational(obj["hi"]))


def parse_instance(text, normalize_totals: bool = False) -> Instance:
    """Parse an instance document (JSON text or an already-decoded dict).

    ``normalize_totals`` rescales agents whose totals do not sum to one
    instead of raising :class:`NormalizationError`.
    """
    doc = _load(text)
    n = doc.get("n")
    dens = doc.get("densities")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise SchemaError("'n' must be a positive integer")
    if not isinstance(dens, list) or len(dens) != n:
        raise SchemaError(f"'densities' must be a list of {n} rows")
    rows = []
    for i, row in enumerate(dens):
        if not isinstance(row, list) or len(row) != n:
            raise SchemaError(f"densities[{i}] must be a list of {n} segment lists")
        out = []
        for j, segs in enumerate(row):
            if not isinstance(segs, list) or not segs:
                raise SchemaError(f"densities[{i}][{j}] must be a non-empty segment list")
            parsed = []
            for s in segs:
                iv = _interval_from(s)
                if "a" not in s:
                    raise SchemaError(f"segment in densities[{i}][{j}] lacks 'a'")
                parsed.append(DensitySegment(iv, as_rational(s["a"]), as_rational(s.get("b", "0"))))
            out.append(PiecewiseDensity(tuple(parsed)))
        rows.append(tuple(out))
    inst = Instance(tuple(rows), strict=False)
    if normalize_totals:
        return normalize(inst)
    for i in range(n):
        total = inst.row_total(i)
        if total != 1:
            raise NormalizationError(i, total)
    return Instance(inst.densities)


def parse_allocation(text) -> Allocation:
    doc = _load(text)
    pieces = doc.get("pieces")
    if not isinstance(pieces, list):
        raise SchemaError("'pieces' must be a list")
    out = []
    for piece in pieces:
        if not isinstance(piece, list):
            raise SchemaError("each piece must be a list of intervals")
        out.append(Piece(tuple(_interval_from(iv) for iv in piece)))
    return Allocation(tuple(out))
