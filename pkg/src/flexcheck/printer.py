"""Canonical ``.flx`` pretty-printer."""

from __future__ import annotations

from .syntax import (
    Act,
    And,
    Bottom,
    Compare,
    Done,
    Eventually,
    EventuallyIn,
    Form,
    Happening,
    Implies,
    Inner,
    IsOpen,
    MacroRef,
    Name,
    Not,
    Or,
    Output,
    SpecDocument,
    Top,
)

_PREC = {Implies: 1, Or: 2, And: 3}


def _prec(node: Inner) -> int:
    return _PREC.get(type(node), 4)


def format_inner(node: Inner) -> str:
    match node:
        case Top():
            return "true"
        case Bottom():
            return "false"
        case Name(ident) | Act(ident) | MacroRef(ident):
            return ident
        case Happening(a):
            return f"happening({a})"
        case Done(a):
            return f"done({a})"
        case Output(a, label):
            return f"{a}.{label}"
        case IsOpen(i):
            return f"is_{i}"
        case Compare(c, op, v):
            return f"{c} {op} {v}"
        case Not(b):
            return "!" + _wrap(b, 4)
        case Eventually(b):
            return "<>" + _wrap(b, 4)
        case EventuallyIn(i, b):
            return f"<>_{i} " + _wrap(b, 4)
        case And(l, r):
            return f"{_wrap(l, 3)} & {_wrap(r, 4)}"
        case Or(l, r):
            return f"{_wrap(l, 2)} | {_wrap(r, 3)}"
        case Implies(l, r):
            return f"{_wrap(l, 2)} -> {_wrap(r, 1)}"
    raise TypeError(f"not an inner formula: {node!r}")


def _wrap(node: Inner, min_prec: int) -> str:
    text = format_inner(node)
    if _prec(node) < min_prec:
        return f"({text})"
    return text


def format_form(form: Form) -> str:
    rep = f"[{format_inner(form.reparation)}]" if form.reparation is not None else ""
    return f"{form.op}{rep}({format_inner(form.body)})"


def format_document(doc: SpecDocument) -> str:
    """Render ``doc`` as canonical FL source; implicit actions are written out."""
    out: list[str] = []
    for a in doc.actions.values():
        line = f"action {a.name}"
        if a.outputs:
            line += " output values {" + ", ".join(a.outputs) + "}"
        if a.scope:
            line += f" occurs only in scope {a.scope}"
        if a.guard is not None:
            line += f" requires that {format_inner(a.guard)}"
        out.append(line)
    for i in doc.intervals.values():
        end = i.end if i.end is not None else "+inf"
        line = f"interval {i.name} delimited by actions {i.begin} - {end}"
        if i.scope:
            line += f" occurs only in scope {i.scope}"
        if i.repeatedly:
            line += " repeatedly"
        out.append(line)
    for c in doc.counters.values():
        line = f"counter {c.name}"
        for word, acts in (("increases", c.inc_actions), ("decreases", c.dec_actions), ("resets", c.reset_actions)):
            if acts:
                line += f" {word} with actions {', '.join(acts)}"
        out.append(line + f" bound {c.bound}")
    for t in doc.temporal_actions:
        out.append("temporal actions " + ", ".join(t.points))
    for name, body in doc.macros.items():
        out.append(f"macro {name} = {format_inner(body)}")
    for l, r in doc.incompatibilities:
        out.append(f"incompatible {format_inner(l)}, {format_inner(r)}")
    for r in doc.rules:
        line = f"rule {r.name}: {format_form(r.form)}"
        if r.exception_of:
            line += f" exception of {r.exception_of}"
        out.append(line)
    for q in doc.queries:
        out.append(f"query {q.name}: {format_form(q.form)}")
    return "\n".join(out) + ("\n" if out else "")
