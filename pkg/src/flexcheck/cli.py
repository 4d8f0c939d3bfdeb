"""Command-line interface.

Exit codes: 0 coherent (or the query holds), 1 findings present (or the
query is refuted), 2 input error, 3 resource exhaustion or internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .checker import DEFAULT_MAX_STATES, StateBudgetExceeded, exists_trace
from .coherence import Analyzer, run_all
from .compiler import compile
from .emit import DIALECTS, emit_model
from .ltl import Ev, LAnd, format_ltl, translate_form, translate_inner
from .parser import parse_form, parse_spec
from .report import render_report, report_to_dict
from .syntax import SpecDocument, SpecError
from .trace import LassoTrace, render_trace, trace_to_dict

OK, FINDINGS, INPUT_ERROR, RESOURCE_ERROR = 0, 1, 2, 3


def _positive(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flexcheck", description="Coherence checking for FL normative specifications.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def analysis(p):
        p.add_argument("--max-states", type=_positive, default=DEFAULT_MAX_STATES, help="product-state budget per search")
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--figures", metavar="DIR", help="write a waveform PNG for every witness into DIR")

    p = sub.add_parser("check", help="run every coherence check and answer every query")
    p.add_argument("file")
    analysis(p)
    p.add_argument("--fast", action="store_true", help="only declared incompatibilities count")

    p = sub.add_parser("query", help="decide one query over the legal runs")
    p.add_argument("file")
    p.add_argument("name")
    analysis(p)

    p = sub.add_parser("trace", help="find a run satisfying a formula")
    p.add_argument("file")
    p.add_argument("formula", help="a rule or query name, or a deontic form such as 'OE(A & B)'")
    p.add_argument("--legal", action="store_true", help="also require every non-permission rule")
    analysis(p)

    p = sub.add_parser("compile", help="print the compiled background theory")
    p.add_argument("file")
    p.add_argument("--emit", choices=DIALECTS, default="neutral")
    p.add_argument("--reduce", action="store_true", help="skip the HAPPENING phase of actions never observed as happening")

    p = sub.add_parser("translate", help="print the LTL image of every rule and query")
    p.add_argument("file")
    return parser


def _load(path: str) -> SpecDocument:
    return parse_spec(Path(path).read_text(encoding="utf-8"))


def _figures(directory: str | None, named: list[tuple[str, LassoTrace | None]]) -> None:
    if directory is None:
        return
    from .figures import plot_trace

    for name, trace in named:
        if trace is not None:
            safe = "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in name)
            plot_trace(trace, Path(directory) / f"{safe}.png", title=name)


def _check(args, out) -> int:
    report = run_all(_load(args.file), max_states=args.max_states, fast=args.fast)
    if args.format == "json":
        out.write(json.dumps(report_to_dict(report, args.file), indent=2) + "\n")
    else:
        out.write(render_report(report, args.file))
    _figures(
        args.figures,
        [(f"{k}-{f.kind}-{'-'.join(f.rules)}", f.witness) for k, f in enumerate(report.findings, 1)]
        + [(f"confirmed-{c.check}", c.witness) for c in report.confirmations],
    )
    if report.findings:
        return FINDINGS
    return RESOURCE_ERROR if report.inconclusive else OK


def _query(args, out) -> int:
    an = Analyzer(_load(args.file), max_states=args.max_states)
    if args.name not in {q.name for q in an.doc.queries}:
        raise SpecError(f"no query named {args.name!r}")
    q = an.doc.query(args.name)
    holds, witness = an.answer_query(q)
    if args.format == "json":
        data = {"query": q.name, "holds": holds, "witness": None if witness is None else trace_to_dict(witness)}
        out.write(json.dumps(data, indent=2) + "\n")
    else:
        out.write(f"query {q.name}: {'holds in every legal run' if holds else 'refuted'}\n")
        if witness is not None:
            out.write(render_trace(witness) + "\n")
    _figures(args.figures, [(f"query-{q.name}", witness)])
    return OK if holds else FINDINGS


def _trace(args, out) -> int:
    doc = _load(args.file)
    named = {r.name: r.form for r in doc.rules} | {q.name: q.form for q in doc.queries}
    form = named.get(args.formula) or parse_form(args.formula, doc)
    an = Analyzer(doc, max_states=args.max_states)
    goal = translate_form(form) if form.op != "P" else translate_inner(form.body)
    ts = compile(an.doc, observe=[goal])
    if args.legal:
        goal = LAnd(an.legal(), goal)
    witness = exists_trace(ts, goal, max_states=args.max_states)
    if args.format == "json":
        data = {"formula": format_ltl(goal), "witness": None if witness is None else trace_to_dict(witness)}
        out.write(json.dumps(data, indent=2) + "\n")
    elif witness is None:
        out.write(f"no run satisfies {format_ltl(goal)}\n")
    else:
        out.write(render_trace(witness) + "\n")
    _figures(args.figures, [("trace", witness)])
    return OK if witness is not None else FINDINGS


def _compile(args, out) -> int:
    doc = _load(args.file)
    ts = compile(doc, reduce=args.reduce)
    specs = [(r.name, translate_form(r.form)) for r in doc.rules if r.form.op != "P"]
    specs += [(q.name, translate_form(q.form)) for q in doc.queries]
    out.write(emit_model(ts, specs, args.emit))
    return OK


def _translate(args, out) -> int:
    doc = _load(args.file)
    for r in doc.rules:
        if r.form.op == "P":
            out.write(f"{r.name}: permission, checked as {format_ltl(Ev(translate_inner(r.form.body)))} on some legal run\n")
        else:
            out.write(f"{r.name}: {format_ltl(translate_form(r.form))}\n")
    for q in doc.queries:
        out.write(f"{q.name}: {format_ltl(translate_form(q.form))}\n")
    return OK


_COMMANDS = {"check": _check, "query": _query, "trace": _trace, "compile": _compile, "translate": _translate}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args, sys.stdout)
    except (SpecError, OSError) as e:
        print(f"flexcheck: error: {e}", file=sys.stderr)
        return INPUT_ERROR
    except StateBudgetExceeded as e:
        print(f"flexcheck: inconclusive: {e}", file=sys.stderr)
        return RESOURCE_ERROR
    except Exception as e:  # noqa: BLE001 - report, never crash with a traceback
        print(f"flexcheck: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return RESOURCE_ERROR


if __name__ == "__main__":
    sys.exit(main())
