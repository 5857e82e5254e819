"""Command-line interface: ``weq <command> ...``.

Exit status: 0 valid / ok, 1 invalid or failing self-test,
2 budget exceeded, 64 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .axioms import check_derivation
from .cograph import export_dot, graph_json, interpret
from .decider import (
    Budget, BudgetExceeded, Inequality, Mode, decide_full, parse_inequality, prepare,
)
from .derive import DerivationError, derive_square_free_any
from .qbf import QbfError, encode_pi3, encode_sigma2, eval_qbf, parse_qbf
from .terms import (
    Join, One, ParseError, Star, Term, Var, normalize_star, parse_term,
    render_term, slices,
)

EXIT_OK, EXIT_INVALID, EXIT_BUDGET, EXIT_USAGE = 0, 1, 2, 64
SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(args, doc: dict, text: str) -> None:
    if args.json:
        print(json.dumps({"schema_version": SCHEMA_VERSION, **doc}, sort_keys=True))
    elif text:
        print(text)


def _read(value: str) -> str:
    if value == "-":
        return sys.stdin.read()
    if value.startswith("@"):
        with open(value[1:], encoding="utf-8") as fh:
            return fh.read()
    return value


def _meet_prod_only(t: Term, one: bool = False) -> bool:
    if isinstance(t, Var):
        return True
    if isinstance(t, One):
        return one
    if isinstance(t, (Star, Join)):
        return False
    return _meet_prod_only(t.left, one) and _meet_prod_only(t.right, one)


def _mode(args) -> Mode:
    if args.strong or args.general:
        return Mode.GENERAL
    return Mode.POINTED


def _budget(args) -> Budget:
    overrides = {}
    for flag, key in (("max_vertices", "vertices"), ("max_slices", "slices"),
                      ("max_nodes", "nodes"), ("oracle_budget", "oracle")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    try:
        return Budget.from_env(**overrides)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _inequality(args) -> Inequality:
    ineq = parse_inequality(_read(args.expr), _mode(args))
    if args.strong and not (_meet_prod_only(ineq.lhs) and _meet_prod_only(ineq.rhs)):
        raise UsageError("--strong is only sound for terms built from variables, & and *")
    return ineq


# -- commands ----------------------------------------------------------------

def cmd_check(args, always_witness: bool = False) -> int:
    ineq = _inequality(args)
    w = decide_full(ineq, _budget(args))
    doc = {"inequality": str(ineq), "mode": ineq.mode.value, "valid": w is not None}
    if w is not None and (always_witness or args.json):
        doc["witness"] = w.to_json()
    if always_witness:
        print(json.dumps({"schema_version": SCHEMA_VERSION, **doc}, sort_keys=True))
    else:
        text = "valid" if w is not None else "invalid"
        if w is not None and args.verbose:
            text += "\n" + w.dumps()
        _emit(args, doc, text)
    return EXIT_OK if w is not None else EXIT_INVALID


def cmd_witness(args) -> int:
    return cmd_check(args, always_witness=True)


def cmd_graph(args) -> int:
    t = normalize_star(parse_term(_read(args.term)))
    if contains_join(t):
        raise UsageError("graphs are defined for join-free terms; use `slices` first")
    g = interpret(t)
    out = export_dot(g) if args.format == "dot" else graph_json(g) + "\n"
    sys.stdout.write(out)
    return EXIT_OK


def contains_join(t: Term) -> bool:
    if isinstance(t, (Var, One)):
        return False
    if isinstance(t, Star):
        return contains_join(t.child)
    return isinstance(t, Join) or contains_join(t.left) or contains_join(t.right)


def cmd_normalize(args) -> int:
    t = prepare(parse_term(_read(args.term)), _mode(args))
    s = render_term(t)
    _emit(args, {"term": s, "mode": _mode(args).value}, s)
    return EXIT_OK


def cmd_slices(args) -> int:
    budget = _budget(args)
    t = prepare(parse_term(_read(args.term)), _mode(args))
    try:
        out = [render_term(s) for s in slices(t, budget.slices)]
    except OverflowError:
        raise BudgetExceeded(f"more than {budget.slices} slices") from None
    _emit(args, {"slices": out, "count": len(out)}, "\n".join(out))
    return EXIT_OK


def cmd_qbf(args) -> int:
    q = parse_qbf(_read(args.input))
    if args.action == "solve":
        value = eval_qbf(q)
        _emit(args, {"prefix": q.prefix, "value": value}, str(value).lower())
        return EXIT_OK
    if q.prefix == "ea":
        ineq = encode_sigma2(q)
    elif q.prefix == "aea":
        ineq = encode_pi3(q)
    else:
        raise UsageError(f"cannot encode prefix {q.prefix!r}; expected 'ea' or 'aea'")
    _emit(args, {"prefix": q.prefix, "inequality": str(ineq), "mode": ineq.mode.value}, str(ineq))
    return EXIT_OK


def cmd_derive(args) -> int:
    ineq = parse_inequality(_read(args.expr), Mode.POINTED)
    for side in (ineq.lhs, ineq.rhs):
        if not _meet_prod_only(side, one=True):
            raise UsageError("derive handles terms built from variables, 1, & and *")
    try:
        d = derive_square_free_any(ineq.lhs, ineq.rhs)
    except DerivationError as exc:
        if "not valid" in str(exc):
            _emit(args, {"inequality": str(ineq), "valid": False}, "invalid")
            return EXIT_INVALID
        raise UsageError(str(exc)) from None
    ok = check_derivation(d)
    if args.json:
        _emit(args, {"derivation": d.to_json(), "checked": ok}, "")
    else:
        for i, s in enumerate(d.steps):
            p = f"{render_term(s.proves[0])} <= {render_term(s.proves[1])}"
            extra = s.axiom if s.axiom else ",".join(map(str, s.refs))
            print(f"{i}: {p}  [{s.rule}{' ' + extra if extra else ''}]")
    return EXIT_OK if ok else EXIT_INVALID


def cmd_selftest(args) -> int:
    from .suites import SUITES, run_suite

    names = args.suite or list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise UsageError(f"unknown suite(s): {', '.join(unknown)}; known: {', '.join(SUITES)}")
    results = []
    for name in names:
        res = run_suite(name, quick=args.quick)
        results.append(res)
        if not args.json:
            print(res.line(), flush=True)
            for f in res.failures:
                print(f"  {f}")
    if args.json:
        _emit(args, {"suites": [
            {"name": r.name, "passed": r.passed, "failed": r.failed, "ok": r.ok,
             "failures": r.failures}
            for r in results
        ]}, "")
    return EXIT_OK if all(r.ok for r in results) else EXIT_INVALID


# -- argument parsing --------------------------------------------------------

def _common(p: argparse.ArgumentParser, modes: bool = True, budgets: bool = True) -> None:
    p.add_argument("--json", action="store_true", help="machine-readable output")
    if modes:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--pointed", action="store_true", help="pointed degrees (default)")
        g.add_argument("--general", action="store_true", help="all degrees")
        g.add_argument("--strong", action="store_true",
                       help="strong reducibility; alias for --general, accepted only for &,* terms")
    if budgets:
        p.add_argument("--max-vertices", type=int, metavar="N", help="vertices per slice")
        p.add_argument("--max-slices", type=int, metavar="N", help="slices per side")
        p.add_argument("--max-nodes", type=int, metavar="N", help="search nodes per decision")
        p.add_argument("--oracle-budget", type=int, metavar="N", help="brute-force candidates")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="weq", description="Decide inequalities between Weihrauch-degree terms.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="decide an inequality 't <= u'")
    p.add_argument("expr", help="inequality, '-' for stdin or @file")
    p.add_argument("-v", "--verbose", action="store_true", help="print the witness too")
    _common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("witness", help="decide and print the JSON witness")
    p.add_argument("expr")
    _common(p)
    p.set_defaults(func=cmd_witness, verbose=False)

    p = sub.add_parser("graph", help="export the graph of a join-free term")
    p.add_argument("term")
    p.add_argument("--format", choices=("dot", "json"), default="dot")
    p.set_defaults(func=cmd_graph, json=False)

    p = sub.add_parser("normalize", help="print the normal form used by the decider")
    p.add_argument("term")
    _common(p, budgets=False)
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("slices", help="list the join-free slices of a term")
    p.add_argument("term")
    _common(p)
    p.set_defaults(func=cmd_slices)

    p = sub.add_parser("qbf", help="encode or evaluate a prenex CNF formula")
    p.add_argument("action", choices=("encode", "solve"))
    p.add_argument("input", help="formula text ('/' separates lines), '-' or @file")
    _common(p, modes=False, budgets=False)
    p.set_defaults(func=cmd_qbf)

    p = sub.add_parser("derive", help="derivation of 't <= u' with u square-free (pointed)")
    p.add_argument("expr")
    _common(p, modes=False, budgets=False)
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("selftest", help="run the oracle and property suites")
    p.add_argument("--suite", action="append", metavar="NAME", help="run only this suite (repeatable)")
    p.add_argument("--quick", action="store_true", help="smaller sweeps")
    _common(p, modes=False, budgets=False)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (UsageError, ParseError, QbfError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
