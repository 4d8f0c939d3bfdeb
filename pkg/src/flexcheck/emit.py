"""Textual renderings of a compiled system for inspection and external checkers.

``neutral`` mirrors the guard/set listing style: one block per controller
transition, with the committed locations declared up front. ``smv`` is a
single NuSMV module: an input variable picks the command of each step, TRANS
restricts the pick to enabled commands and ASSIGN applies its updates.
"""

from __future__ import annotations

import re

from .compiler import PHASE, Cond, GuardedCommand, TransitionSystem, Update
from .ltl import (
    HAPPENING,
    JUST_HAPPENED,
    Alw,
    CounterIs,
    DoneLatch,
    Ev,
    LAnd,
    LFalse,
    LImplies,
    LNot,
    LOr,
    LTrue,
    Ltl,
    Opened,
    OutputIs,
    Release,
    SignalIs,
    Until,
    format_ltl,
)

DIALECTS = ("neutral", "smv")


class UnsupportedDialect(ValueError):
    pass


def emit_model(ts: TransitionSystem, specs=(), dialect: str = "neutral") -> str:
    """Render ``ts`` and the named LTL ``specs`` (pairs of name and formula)."""
    specs = list(specs)
    match dialect:
        case "neutral":
            return _neutral(ts, specs)
        case "smv":
            return _Smv(ts).module(specs)
    raise UnsupportedDialect(f"unsupported dialect {dialect!r}; choose one of {', '.join(DIALECTS)}")


# neutral dialect ----------------------------------------------------------------


def _value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _neutral_cond(c: Cond) -> str:
    return f"{c.var} {c.op} {_value(c.value)}"


def _neutral_update(u: Update) -> str:
    if u.delta:
        sign = "+" if u.delta > 0 else "-"
        return f"{u.var} = {u.var} {sign} {abs(u.delta)}"
    return f"{u.var} = {_value(u.value)}"


def _is_urgency(c: Cond, ts: TransitionSystem) -> bool:
    return c.op == "!=" and c.var in ts.phase_vars and c.value in ts.committed


def _neutral(ts: TransitionSystem, specs) -> str:
    lines = []
    for v in ts.variables:
        match v.kind:
            case "interval" | "latch":
                lines.append(f"declare bool {v.name} = {_value(v.initial)}")
            case "counter":
                lines.append(f"declare int {v.name} = {v.initial} range {v.domain[0]}..{v.domain[-1]}")
            case _:
                lines.append(f"declare enum {v.name} = {v.initial} {{{', '.join(map(str, v.domain))}}}")
    if ts.committed:
        lines.append("committed " + ", ".join(sorted(ts.committed)))
    for a, b in ts.incompatibilities:
        lines.append(f"never {format_ltl(LAnd(a, b))}")
    blocks: dict[tuple[str, str, str], list[str]] = {}
    for cmd in ts.commands:
        guard = [
            _neutral_cond(c)
            for c in cmd.guard
            if not _is_urgency(c, ts) and not (c.var == cmd.phase_var and c.op == "=" and c.value == cmd.source)
        ]
        if cmd.condition is not None:
            cond = format_ltl(cmd.condition)
            guard.append(f"({cond})" if " " in cond else cond)
        sets = [_neutral_update(u) for u in cmd.updates if u.var != cmd.phase_var]
        text = f"  guard {' & '.join(guard) or 'true'} -> set {', '.join(sets) or 'nothing'};"
        blocks.setdefault((cmd.phase_var, cmd.source, cmd.target), []).append(text)
    for (phase, source, target), body in blocks.items():
        head = f"{source} -> {target}" if phase == PHASE else f"{phase}: {source} -> {target}"
        lines += ["", head, *body]
    if specs:
        lines.append("")
        lines += [f"ltlspec {name}: {format_ltl(f)}" for name, f in specs]
    return "\n".join(lines) + "\n"


# SMV --------------------------------------------------------------------------------

_RESERVED = set(
    """MODULE DEFINE MDEFINE CONSTANTS VAR IVAR FROZENVAR INIT TRANS INVAR SPEC CTLSPEC LTLSPEC
    PSLSPEC COMPUTE NAME INVARSPEC FAIRNESS JUSTICE COMPASSION ISA ASSIGN CONSTRAINT SIMPWFF
    CTLWFF LTLWFF PSLWFF COMPWFF IN MIN MAX MIRROR PRED PREDICATES process array of boolean
    integer real word word1 bool signed unsigned extend resize sizeof uwconst swconst EX AX EF
    AF EG AG E F O G H X Y Z A U S V T BU EBF ABF EBG ABG case esac mod next init union in xor
    xnor self TRUE FALSE count abs max min running""".split()
)


def smv_name(name: str) -> str:
    """A legal SMV identifier for a variable or constant name."""
    out = re.sub(r"\W", "_", name).rstrip("_")
    if not out[:1].isalpha() and not out.startswith("_"):
        out = "v_" + out
    return "s_" + out if out in _RESERVED else out


class _Smv:
    def __init__(self, ts: TransitionSystem):
        self.ts = ts
        self.names = {v.name: smv_name(v.name) for v in ts.variables}
        taken = set(self.names.values())
        self.consts: dict[str, str] = {}
        for v in ts.variables:
            for x in v.domain:
                if isinstance(x, str) and x not in self.consts:
                    c = smv_name(x)
                    self.consts[x] = "c_" + c if c in taken else c

    def value(self, v) -> str:
        if isinstance(v, bool):
            return "TRUE" if v else "FALSE"
        if isinstance(v, str):
            return self.consts[v]
        return str(v)

    def update(self, v, u) -> str:
        if not u.delta:
            return self.value(u.value)
        # clamped so the expression stays inside the declared range even in
        # unreachable states; the TRANS guards rule those out anyway
        name = self.names[v.name]
        if u.delta > 0:
            return f"min({name} + {u.delta}, {v.domain[-1]})"
        return f"max({name} - {-u.delta}, {v.domain[0]})"
    def cond(self, c: Cond) -> str:
        return f"{self.names[c.var]} {c.op} {self.value(c.value)}"

    def atom(self, f) -> str:
        ts = self.ts
        match f:
            case SignalIs(a, value) if a in ts.points:
                p = ts.points[a]
                phase = self.names[p.phase_var]
                if value == JUST_HAPPENED:
                    return f"{phase} = {self.value(p.location)}"
                return "FALSE" if value == HAPPENING else f"{phase} != {self.value(p.location)}"
            case SignalIs(a, value):
                if value == HAPPENING and a in ts.collapsed:
                    return "FALSE"
                return f"{self.names[a]} = {self.value(value)}"
            case OutputIs(a, label):
                name = f"{a}.output"
                return f"{self.names[name]} = {self.value(label)}" if name in self.names else "FALSE"
            case DoneLatch(a) if a in ts.points:
                p = ts.points[a]
                later = ts.variable(p.phase_var).domain[p.index :]
                return f"{self.names[p.phase_var]} in {{{', '.join(self.value(x) for x in later)}}}"
            case DoneLatch(a):
                return self.names[f"done({a})"]
            case Opened(i):
                return self.names[f"{i}_opened"]
            case CounterIs(c, op, v):
                return f"{self.names[c]} {op} {v}"
        raise TypeError(f)

    def formula(self, f: Ltl) -> str:
        match f:
            case LTrue():
                return "TRUE"
            case LFalse():
                return "FALSE"
            case LNot(b):
                return f"!{self.formula(b)}"
            case LAnd(a, b):
                return f"({self.formula(a)} & {self.formula(b)})"
            case LOr(a, b):
                return f"({self.formula(a)} | {self.formula(b)})"
            case LImplies(a, b):
                return f"({self.formula(a)} -> {self.formula(b)})"
            case Until(a, b):
                return f"({self.formula(a)} U {self.formula(b)})"
            case Release(a, b):
                return f"({self.formula(a)} V {self.formula(b)})"
            case Alw(b):
                return f"G {self.formula(b)}"
            case Ev(b):
                return f"F {self.formula(b)}"
        return f"({self.atom(f)})"

    def guard(self, cmd: GuardedCommand) -> str:
        parts = [self.cond(c) for c in cmd.guard]
        if cmd.committed_exit:
            parts.insert(0, self.cond(Cond(cmd.phase_var, "=", cmd.source)))
        if cmd.condition is not None:
            parts.append(self.formula(cmd.condition))
        return " & ".join(parts) or "TRUE"

    def module(self, specs) -> str:
        ts = self.ts
        cmds = [f"c{k}" for k in range(len(ts.commands))]
        lines = ["MODULE main", "VAR"]
        for v in ts.variables:
            match v.kind:
                case "interval" | "latch":
                    typ = "boolean"
                case "counter":
                    typ = f"{v.domain[0]}..{v.domain[-1]}"
                case _:
                    typ = "{" + ", ".join(self.value(x) for x in v.domain) + "}"
            lines.append(f"  {self.names[v.name]} : {typ};")
        lines += ["IVAR", f"  step : {{{', '.join(['stutter', *cmds])}}};", "ASSIGN"]
        for v in ts.variables:
            lines.append(f"  init({self.names[v.name]}) := {self.value(v.initial)};")
        for v in ts.variables:
            arms = []
            for c, cmd in zip(cmds, ts.commands):
                for u in cmd.updates:
                    if u.var == v.name:
                        rhs = self.update(v, u)
                        arms.append(f"    step = {c} : {rhs};")
            if arms:
                lines += [f"  next({self.names[v.name]}) := case", *arms, f"    TRUE : {self.names[v.name]};", "  esac;"]
            else:
                lines.append(f"  next({self.names[v.name]}) := {self.names[v.name]};")
        urgent = [
            f"{self.names[p]} != {self.value(loc)}" for p in ts.phase_vars for loc in ts.variable(p).domain if loc in ts.committed
        ]
        lines.append("TRANS")
        enabled = [f"(step = stutter -> {' & '.join(urgent) or 'TRUE'})"]
        enabled += [f"(step = {c} -> {self.guard(cmd)})" for c, cmd in zip(cmds, ts.commands)]
        lines.append("  " + "\n  & ".join(enabled))
        for a, b in ts.incompatibilities:
            lines += ["INVAR", f"  !{self.formula(LAnd(a, b))}"]
        for name, f in specs:
            lines.append(f"LTLSPEC NAME {smv_name(name)} := {self.formula(f)};")
        return "\n".join(lines) + "\n"

