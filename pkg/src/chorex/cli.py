"""``chorex``: command-line entry point.

Every command prints one JSON document on stdout.  Exit status is 0 when the
command's main assertion holds, 1 on a failed assertion or a domain error
(the document then carries an ``error`` object), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

from . import approx, fixtures, optimize, oracle, protocols, rw
from .errors import ChorexError, SchemaError
from .fairness import Notion, audit
from .model import (
    _load,
    allocation_to_doc,
    as_rational,
    dumps,
    fmt,
    instance_to_doc,
    parse_allocation,
    parse_instance,
    validate_allocation,
)

ALL_NOTIONS = (Notion.PROPORTIONAL, Notion.SWAP_EF, Notion.SWAP_STABLE)


@dataclass
class CommandResult:
    exit_code: int
    report: dict


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}") from None


def _instance(path: str, normalize: bool):
    return parse_instance(_read(path), normalize_totals=normalize)


def _rational(text: str):
    try:
        return as_rational(text)
    except ChorexError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _notion(text: str) -> Notion:
    try:
        return Notion.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def cmd_check(args) -> CommandResult:
    first, second = _load(_read(args.first)), _load(_read(args.second))
    # accept either order: the instance is the document with densities
    if "densities" not in first and "densities" in second:
        first, second = second, first
    inst = parse_instance(first, normalize_totals=args.normalize)
    alloc = parse_allocation(second)
    validity = validate_allocation(inst, alloc)
    doc = {"allocation": validity.to_doc()}
    if not validity.valid:
        return CommandResult(1, doc)
    report = audit(inst, alloc, args.eps)
    notions = tuple(args.notions) if args.notions else ALL_NOTIONS
    doc["report"] = report.to_doc()
    doc["requested"] = [nt.value for nt in notions]
    ok = report.holds(*notions)
    doc["holds"] = ok
    return CommandResult(0 if ok else 1, doc)


_MODES = {
    "unconstrained": optimize.LpMode.UNCONSTRAINED,
    "prop": optimize.LpMode.PROPORTIONAL,
    "prop-swapef": optimize.LpMode.PROPORTIONAL_SWAP_EF,
    "prop-eps-swapef": optimize.LpMode.PROPORTIONAL_EPS_SWAP_EF,
    "swap-stable": optimize.LpMode.SWAP_STABLE,
}


def cmd_solve(args) -> CommandResult:
    inst = _instance(args.instance, args.normalize)
    mode = _MODES[args.mode]
    problem = optimize.build_lp(inst, mode, args.eps)
    if args.emit_lp is not None:
        text = problem.to_text()
        if args.emit_lp == "-":
            sys.stdout.write(text)
            return CommandResult(0, {})
        Path(args.emit_lp).write_text(text, encoding="utf-8")
    res = optimize.optimal_fair_allocation(inst, mode, args.eps)
    doc = {
        "mode": args.mode,
        "eps": fmt(as_rational(args.eps)),
        "objective": fmt(res.solution.objective),
        "fractions": res.solution.fractions.to_doc(),
        "allocation": allocation_to_doc(res.allocation),
        "report": res.report.to_doc(),
    }
    ok = res.report.satisfies(mode.notions)
    return CommandResult(0 if ok else 1, doc)


def cmd_protocol(args) -> CommandResult:
    inst = _instance(args.instance, args.normalize)
    doc = {"protocol": args.name}
    if args.name == "two-agent":
        session = rw.QuerySession(inst)
        alloc = protocols.two_agent_protocol(inst, session.evaluate)
        doc["queries"] = session.query_count()
        promised = (Notion.PROPORTIONAL, Notion.SWAP_EF)
    elif args.name == "uniform":
        alloc = protocols.uniform_allocation(inst)
        promised = ALL_NOTIONS
    else:
        alloc = protocols.sandwich_allocation(inst)
        promised = ALL_NOTIONS
    report = audit(inst, alloc)
    doc["allocation"] = allocation_to_doc(alloc)
    doc["report"] = report.to_doc()
    ok = report.holds(*promised)
    return CommandResult(0 if ok else 1, doc)


def cmd_gen(args) -> CommandResult:
    if args.kind == "thm3":
        if args.eps is None:
            raise SchemaError("gen thm3 needs --eps")
        inst = protocols.lower_bound_instance(args.n, args.eps)
        doc = instance_to_doc(inst)
        doc["allocation"] = allocation_to_doc(protocols.contiguous_allocation(args.n))["pieces"]
        return CommandResult(0, doc)
    if not args.id:
        raise SchemaError("gen example needs an id (ex1, ex2, ex3, ex4, thm8)")
    try:
        fx = fixtures.named_fixture(args.id, args.n)
    except KeyError as exc:
        raise SchemaError(exc.args[0]) from None
    return CommandResult(0, fx.document())


def cmd_approx(args) -> CommandResult:
    oracles = approx.parse_oracle_spec(_read(args.spec))
    approx.check_oracles(oracles, tolerance=args.tolerance)
    res = approx.approx_optimal(oracles, args.eps, args.mode, tolerance=args.tolerance)
    doc = res.to_doc()
    doc["allocation"] = allocation_to_doc(res.allocation)
    ok = res.audit.proportional and (args.mode == "prop" or res.audit.swap_ef)
    return CommandResult(0 if ok else 1, doc)


def cmd_rw(args) -> CommandResult:
    inst = _instance(args.instance, args.normalize)
    session = rw.QuerySession(inst)
    answers = rw.replay(session, _read(args.trace).splitlines())
    return CommandResult(0, {"answers": answers, "ledger": session.query_count()})


def cmd_search(args) -> CommandResult:
    spec = oracle.PropertySpec.of(args.require, args.forbid)
    w = oracle.search_counterexample(spec, args.n, args.m, args.g, args.seed, args.budget, args.partial)
    report = audit(w.instance, w.allocation)
    doc = {
        "spec": spec.to_doc(),
        "instance": instance_to_doc(w.instance),
        "allocation": allocation_to_doc(w.allocation),
        "report": report.to_doc(),
        "instances_tried": w.instances_tried,
        "allocations_examined": w.allocations_examined,
    }
    return CommandResult(0, doc)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chorex", description="Exact fair division of chores with externalities.")
    p.add_argument("--quiet", action="store_true", help="suppress prose on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def with_instance_flags(sp):
        sp.add_argument("--normalize", action="store_true", help="rescale each agent's totals to 1")
        return sp

    c = with_instance_flags(sub.add_parser("check", help="audit an allocation"))
    c.add_argument("first", help="instance or allocation document ('-' for stdin)")
    c.add_argument("second", help="the other document")
    c.add_argument("--eps", type=_rational, default=as_rational(0))
    c.add_argument("--notions", type=_notion, nargs="+", help="notions that must hold (default: all)")
    c.set_defaults(func=cmd_check)

    s = with_instance_flags(sub.add_parser("solve", help="optimal fair allocation by LP"))
    s.add_argument("instance")
    s.add_argument("--mode", choices=sorted(_MODES), default="prop-swapef")
    s.add_argument("--eps", type=_rational, default=as_rational(0))
    s.add_argument("--emit-lp", nargs="?", const="-", metavar="PATH", help="write the LP ('-' or no value: print it and stop)")
    s.set_defaults(func=cmd_solve)

    pr = with_instance_flags(sub.add_parser("protocol", help="run a constructive protocol"))
    pr.add_argument("name", choices=["two-agent", "uniform", "sandwich"])
    pr.add_argument("instance")
    pr.set_defaults(func=cmd_protocol)

    g = sub.add_parser("gen", help="emit instance documents")
    g.add_argument("kind", choices=["thm3", "example"])
    g.add_argument("id", nargs="?")
    g.add_argument("--n", type=int, default=3)
    g.add_argument("--eps", type=_rational)
    g.set_defaults(func=cmd_gen)

    a = sub.add_parser("approx", help="approximate optimum for Lipschitz densities")
    a.add_argument("spec", help="oracle-spec document")
    a.add_argument("--eps", type=_rational, required=True)
    a.add_argument("--mode", choices=list(approx.MODES), default="prop")
    a.add_argument("--tolerance", type=float, default=approx.DEFAULT_TOLERANCE)
    a.set_defaults(func=cmd_approx)

    r = with_instance_flags(sub.add_parser("rw", help="replay a Robertson-Webb query script"))
    r.add_argument("instance")
    r.add_argument("--trace", required=True)
    r.set_defaults(func=cmd_rw)

    se = sub.add_parser("search", help="search random instances for a counterexample")
    se.add_argument("--require", type=_notion, nargs="*", default=[])
    se.add_argument("--forbid", type=_notion, nargs="*", default=[])
    se.add_argument("--n", type=int, default=2)
    se.add_argument("--m", type=int, default=2)
    se.add_argument("--g", type=int, default=1)
    se.add_argument("--seed", type=int, default=0)
    se.add_argument("--budget", type=int, default=10**5)
    se.add_argument("--partial", action="store_true", help="allow unassigned cells")
    se.set_defaults(func=cmd_search)
    return p


def run(argv=None) -> CommandResult:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ChorexError as exc:
        return CommandResult(1, {"error": exc.to_doc()})


def main(argv=None) -> int:
    try:
        result = run(argv)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code) if isinstance(exc.code, int) else 2
    if result.report:
        sys.stdout.write(dumps(result.report))
        sys.stdout.write("\n")
    if result.exit_code and "error" in result.report and not _quiet(argv):
        print(f"chorex: {result.report['error']['message']}", file=sys.stderr)
    return result.exit_code


def _quiet(argv) -> bool:
    return "--quiet" in (sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
