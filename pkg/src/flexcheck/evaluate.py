"""Direct LTL evaluation on lasso words.

This is deliberately independent of the automaton pipeline: it works on plain
dict states and computes fixpoints position by position. It serves as the
soundness check for every witness the model checker returns and as the
reference semantics in the oracle tests.
"""

from __future__ import annotations

import operator

from .ltl import (
    Alw,
    Atom,
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
)

COMPARE = {"=": operator.eq, "<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge}


def holds_atom(atom: Atom, state: dict) -> bool:
    """Evaluate an atom on a dict state as produced by ``TransitionSystem.as_dict``."""
    match atom:
        case SignalIs(a, value):
            return state.get(a, "NOT_HAPPENING") == value
        case OutputIs(a, label):
            return state.get(f"{a}.output") == label
        case DoneLatch(a):
            return bool(state.get(f"done({a})", False))
        case Opened(i):
            return bool(state.get(f"{i}_opened", False))
        case CounterIs(c, op, v):
            return COMPARE[op](state.get(c, 0), v)
    raise TypeError(atom)


def evaluate(formula: Ltl, states: list[dict], loop_start: int, holds=holds_atom) -> bool:
    """Truth of ``formula`` at position 0 of ``states[:loop_start] (states[loop_start:])^omega``."""
    n = len(states)
    if not 0 <= loop_start < n:
        raise ValueError("loop start must index into the state list")
    succ = [i + 1 for i in range(n - 1)] + [loop_start]
    cache: dict[Ltl, list[bool]] = {}

    def fixpoint(a: list[bool], b: list[bool], least: bool) -> list[bool]:
        val = [least is False] * n
        while True:
            changed = False
            for i in reversed(range(n)):
                if least:
                    new = b[i] or (a[i] and val[succ[i]])
                else:
                    new = b[i] and (a[i] or val[succ[i]])
                if new != val[i]:
                    val[i] = new
                    changed = True
            if not changed:
                return val

    def ev(f: Ltl) -> list[bool]:
        if f in cache:
            return cache[f]
        match f:
            case LTrue():
                r = [True] * n
            case LFalse():
                r = [False] * n
            case Atom():
                r = [holds(f, s) for s in states]
            case LNot(b):
                r = [not x for x in ev(b)]
            case LAnd(l, rr):
                r = [x and y for x, y in zip(ev(l), ev(rr))]
            case LOr(l, rr):
                r = [x or y for x, y in zip(ev(l), ev(rr))]
            case LImplies(l, rr):
                r = [(not x) or y for x, y in zip(ev(l), ev(rr))]
            case Until(l, rr):
                r = fixpoint(ev(l), ev(rr), least=True)
            case Release(l, rr):
                r = fixpoint(ev(l), ev(rr), least=False)
            case Ev(b):
                r = fixpoint([True] * n, ev(b), least=True)
            case Alw(b):
                r = fixpoint([False] * n, ev(b), least=False)
            case _:
                raise TypeError(f)
        cache[f] = r
        return r

    return ev(formula)[0]
