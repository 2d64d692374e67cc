"""Extended Robertson-Webb queries with per-pair accounting.

A :class:`QuerySession` answers ``evaluate`` and ``cut`` queries from an
exact instance and records how many of each were asked for every
(evaluator, holder) pair.  Protocols take the session's ``evaluate`` as a
callable so their query cost can be measured.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import BadRange, SchemaError, Unreachable
from .exact import roots_in
from .model import ZERO, Instance, as_rational, fmt


@dataclass
class QueryLedger:
    eval_count: Counter = field(default_factory=Counter)
    cut_count: Counter = field(default_factory=Counter)

    @property
    def evals(self) -> int:
        return sum(self.eval_count.values())

    @property
    def cuts(self) -> int:
        return sum(self.cut_count.values())

    @property
    def total(self) -> int:
        return self.evals + self.cuts

    def reset(self):
        self.eval_count.clear()
        self.cut_count.clear()


def query_count(ledger: QueryLedger) -> dict:
    pairs = sorted(set(ledger.eval_count) | set(ledger.cut_count))
    return {
        "eval": ledger.evals,
        "cut": ledger.cuts,
        "total": ledger.total,
        "pairs": [
            {
                "i": i + 1,
                "j": j + 1,
                "eval": ledger.eval_count[i, j],
                "cut": ledger.cut_count[i, j],
            }
            for i, j in pairs
        ],
    }


def _check_agents(instance: Instance, i: int, j: int):
    if not (0 <= i < instance.n and 0 <= j < instance.n):
        raise BadRange(f"agent pair ({i + 1}, {j + 1}) out of range for n={instance.n}")


def evaluate(instance: Instance, i: int, j: int, x, y) -> Fraction:
    """V_ij([x, y]) without accounting."""
    x, y = as_rational(x), as_rational(y)
    _check_agents(instance, i, j)
    if not (0 <= x <= y <= 1):
        raise BadRange(f"need 0 <= x <= y <= 1, got x={x}, y={y}")
    return instance.density(i, j).integral(x, y)


def cut(instance: Instance, i: int, j: int, x, alpha) -> Fraction:
    """Smallest y >= x with V_ij([x, y]) = alpha, without accounting."""
    x, alpha = as_rational(x), as_rational(alpha)
    _check_agents(instance, i, j)
    if not 0 <= x <= 1:
        raise BadRange(f"need 0 <= x <= 1, got {x}")
    if alpha < 0:
        raise BadRange(f"alpha must be non-negative, got {alpha}")
    if alpha == 0:
        return x
    acc = ZERO
    for seg in instance.density(i, j).segments:
        if seg.hi <= x:
            continue
        s = max(seg.lo, x)
        mass = seg.integral(s, seg.hi)
        if acc + mass < alpha:
            acc += mass
            continue
        rest = alpha - acc
        # b/2 y^2 + a y - (a s + b s^2 / 2 + rest) = 0, increasing on [s, hi]
        roots = roots_in(seg.b / 2, seg.a, -(seg.antiderivative(s) + rest), s, seg.hi)
        return s if not roots else roots[0]
    raise Unreachable(
        f"V_{i + 1},{j + 1}([{x}, 1]) = {acc} < alpha = {alpha}", shortfall=alpha - acc
    )


class QuerySession:
    """Answers queries against ``instance`` and keeps a :class:`QueryLedger`."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.ledger = QueryLedger()

    def evaluate(self, i: int, j: int, x, y) -> Fraction:
        value = evaluate(self.instance, i, j, x, y)
        self.ledger.eval_count[i, j] += 1
        return value

    def cut(self, i: int, j: int, x, alpha) -> Fraction:
        y = cut(self.instance, i, j, x, alpha)
        self.ledger.cut_count[i, j] += 1
        return y

    def query_count(self) -> dict:
        return query_count(self.ledger)

    def reset(self):
        self.ledger.reset()


def replay(session: QuerySession, lines) -> list[dict]:
    """Run a query script: ``eval i j x y`` / ``cut i j x alpha`` per line.

    Agents are 1-based; blank lines and ``#`` comments are skipped.
    """
    answers = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5 or parts[0] not in ("eval", "cut"):
            raise SchemaError(f"line {lineno}: expected 'eval i j x y' or 'cut i j x alpha'")
        op = parts[0]
        try:
            i, j = int(parts[1]) - 1, int(parts[2]) - 1
        except ValueError:
            raise SchemaError(f"line {lineno}: agent indices must be integers") from None
        a, b = as_rational(parts[3]), as_rational(parts[4])
        if op == "eval":
            ans = session.evaluate(i, j, a, b)
        else:
            ans = session.cut(i, j, a, b)
        answers.append({"line": lineno, "query": line, "answer": fmt(ans)})
    return answers

