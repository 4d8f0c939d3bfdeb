"""Independent reference implementations used as test oracles.

Nothing here calls the package's evaluator, automaton construction or search:
formulas are evaluated on lassos by fixpoint iteration over positions, and
trace existence is decided by enumerating short lassos of the state graph.
"""

from __future__ import annotations

import itertools
import operator
import random

from flexcheck.ltl import (
    FALSE,
    HAPPENING,
    JUST_HAPPENED,
    TRUE,
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
    NOT_HAPPENING,
    Opened,
    OutputIs,
    Release,
    SignalIs,
    Until,
)

_CMP = {"=": operator.eq, "<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge, "!=": operator.ne}


def atom_value(atom, state: dict) -> bool:
    """Truth of an atom in a readable state (``as_dict``) or in a letter keyed by atoms."""
    if atom in state:
        return bool(state[atom])
    match atom:
        case SignalIs(a, value):
            return state[a] == value
        case OutputIs(a, label):
            return state.get(f"{a}.output") == label
        case DoneLatch(a):
            return bool(state[f"done({a})"])
        case Opened(i):
            return bool(state[f"{i}_opened"])
        case CounterIs(c, op, v):
            return _CMP[op](state[c], v)
    raise KeyError(atom)


def holds(formula, states: list, loop: int) -> bool:
    """Whether the lasso ``states[:loop] (states[loop:])^ω`` satisfies ``formula`` at 0."""
    return _values(formula, states, loop)[0]


def _values(f, states, loop) -> list[bool]:
    n = len(states)
    nxt = [i + 1 if i + 1 < n else loop for i in range(n)]
    match f:
        case LTrue():
            return [True] * n
        case LFalse():
            return [False] * n
        case LNot(b):
            return [not x for x in _values(b, states, loop)]
        case LAnd(a, b):
            return [x and y for x, y in zip(_values(a, states, loop), _values(b, states, loop))]
        case LOr(a, b):
            return [x or y for x, y in zip(_values(a, states, loop), _values(b, states, loop))]
        case LImplies(a, b):
            return [(not x) or y for x, y in zip(_values(a, states, loop), _values(b, states, loop))]
        case Until(a, b):
            return _fix(_values(a, states, loop), _values(b, states, loop), nxt, least=True)
        case Release(a, b):
            return _fix(_values(a, states, loop), _values(b, states, loop), nxt, least=False)
        case Ev(b):
            return _fix([True] * n, _values(b, states, loop), nxt, least=True)
        case Alw(b):
            return _fix([False] * n, _values(b, states, loop), nxt, least=False)
    return [atom_value(f, s) for s in states]


def _fix(a, b, nxt, least: bool) -> list[bool]:
    """a U b (least fixpoint) or a R b (greatest fixpoint) over lasso positions."""
    n = len(a)
    val = [not least] * n
    for _ in range(n + 1):
        if least:
            val = [b[i] or (a[i] and val[nxt[i]]) for i in range(n)]
        else:
            val = [b[i] and (a[i] or val[nxt[i]]) for i in range(n)]
    return val


# Büchi acceptance of lasso words -------------------------------------------------


def accepts(aut, word: list[dict], loop: int) -> bool:
    """Whether automaton ``aut`` has an accepting run on the lasso word.

    Nodes are (automaton state, position, acceptance index). A run is accepting
    iff some reachable node lies on a cycle through a node whose automaton state
    is in every acceptance set in turn; with the degeneralized automata used
    here that is a single set.
    """
    n = len(word)
    nxt = [i + 1 if i + 1 < n else loop for i in range(n)]
    final = aut.accepting[0] if aut.accepting else frozenset(range(aut.n_states))

    def ok(q, i):
        return all(atom_value(a, word[i]) == pol for a, pol in aut.labels[q])

    start = [(q, 0) for q in aut.initial if ok(q, 0)]
    succ = {}
    seen = set(start)
    todo = list(start)
    while todo:
        q, i = todo.pop()
        out = [(r, nxt[i]) for r in aut.succ[q] if ok(r, nxt[i])]
        succ[(q, i)] = out
        for x in out:
            if x not in seen:
                seen.add(x)
                todo.append(x)
    for node in seen:
        if node[0] in final and _reaches(succ, node, node):
            return True
    return False


def _reaches(succ, src, dst) -> bool:
    stack = list(succ[src])
    seen = set()
    while stack:
        x = stack.pop()
        if x == dst:
            return True
        if x not in seen:
            seen.add(x)
            stack.extend(succ[x])
    return False


def lasso_words(props: list, max_len: int):
    """Every lasso word over ``props`` with prefix plus cycle of length at most ``max_len``."""
    letters = [dict(zip(props, bits)) for bits in itertools.product((False, True), repeat=len(props))]
    for n in range(1, max_len + 1):
        for word in itertools.product(letters, repeat=n):
            for loop in range(n):
                yield list(word), loop


# trace existence by lasso enumeration ----------------------------------------------


def brute_exists(ts, formula, max_len: int) -> bool:
    """Whether some lasso of ``ts`` with at most ``max_len`` distinct positions satisfies ``formula``.

    Consecutive repetitions are skipped when extending a path (the formulas are
    X-free, hence stutter-invariant); a state may still close a one-state cycle
    through its own stutter step.
    """
    succ_cache: dict = {}

    def succ(s):
        if s not in succ_cache:
            succ_cache[s] = ts.successors(s)
        return succ_cache[s]

    dicts: dict = {}

    def readable(s):
        if s not in dicts:
            dicts[s] = ts.as_dict(s)
        return dicts[s]

    def closes(path):
        last = path[-1]
        for j, s in enumerate(path):
            if s in succ(last):
                yield j

    stack = [[s] for s in ts.initial_states()]
    while stack:
        path = stack.pop()
        for j in closes(path):
            if holds(formula, [readable(s) for s in path], j):
                return True
        if len(path) < max_len:
            for t in succ(path[-1]):
                if t != path[-1]:
                    stack.append(path + [t])
    return False


def oracle_agrees(ts, formula, witness, base: int = 12) -> bool:
    """Whether the enumeration oracle reaches the checker's verdict.

    The bound is ``base``, raised to the witness length when the checker
    reports a witness, so a positive verdict is judged by a search able to
    reach it. Negative verdicts are only confirmed up to ``base`` positions.
    """
    bound = base if witness is None else max(base, len(witness.states))
    return (witness is not None) == brute_exists(ts, formula, bound)


# random instances --------------------------------------------------------------------


def random_formula(rng: random.Random, atoms: list, depth: int):
    if depth == 0 or rng.random() < 0.25:
        return rng.choice(atoms + [TRUE, FALSE] if rng.random() < 0.1 else atoms)
    op = rng.choice(["not", "and", "or", "implies", "until", "release", "ev", "alw"])
    sub = lambda: random_formula(rng, atoms, depth - 1)  # noqa: E731
    match op:
        case "not":
            return LNot(sub())
        case "and":
            return LAnd(sub(), sub())
        case "or":
            return LOr(sub(), sub())
        case "implies":
            return LImplies(sub(), sub())
        case "until":
            return Until(sub(), sub())
        case "release":
            return Release(sub(), sub())
        case "ev":
            return Ev(sub())
        case _:
            return Alw(sub())


def random_document(rng: random.Random) -> str:
    """FL source for a random background theory: at most three actions, one counter of bound 2."""
    names = ["A", "B", "C"][: rng.randint(1, 3)]
    lines = []
    interval = None
    if len(names) >= 2 and rng.random() < 0.5:
        begin, end = rng.sample(names, 2)
        interval = "i"
        lines.append(f"interval i delimited by actions {begin} - {end}")
    for a in names:
        decl = f"action {a}"
        if a == names[0] and rng.random() < 0.3:
            decl += " output values {x, y}"
        if interval and rng.random() < 0.25:
            decl += f" requires that {'!' if rng.random() < 0.5 else ''}is_i"
        lines.append(decl)
    if rng.random() < 0.6:
        inc = rng.choice(names)
        parts = [f"counter k increases with action {inc}"]
        rest = [a for a in names if a != inc]
        if rest:
            parts.append(f"decreases with action {rest[0]}")
        if len(rest) > 1 and rng.random() < 0.5:
            parts.append(f"resets with action {rest[1]}")
        lines.append(" ".join(parts) + " bound 2")
    return "\n".join(lines) + "\n"


def document_atoms(doc) -> list:
    atoms = [SignalIs(a, JUST_HAPPENED) for a in doc.actions]
    atoms += [DoneLatch(a) for a in doc.actions]
    atoms += [Opened(i) for i in doc.intervals]
    for c in doc.counters:
        atoms += [CounterIs(c, ">", 0), CounterIs(c, "=", 2)]
    for a in doc.actions.values():
        if a.outputs:
            atoms.append(OutputIs(a.name, a.outputs[0]))
    return atoms


# structural invariants of compiled systems --------------------------------------------

_SIGNAL_STEP = {
    NOT_HAPPENING: {HAPPENING, JUST_HAPPENED},
    HAPPENING: {JUST_HAPPENED},
    JUST_HAPPENED: {NOT_HAPPENING},
}


def structural_violations(ts, doc, limit: int = 200_000):
    """Yield a message for every broken invariant on the reachable graph of ``ts``."""
    states = ts.reachable(limit=limit)
    signals = [v.name for v in ts.variables if v.kind == "signal"]
    phases = [v.name for v in ts.variables if v.kind == "phase"]
    begins = {f"{i.name}_opened": i.begin for i in doc.intervals.values()}
    ends = {f"{i.name}_opened": i.end for i in doc.intervals.values()}
    for s in states:
        d = ts.as_dict(s)
        committed = [p for p in phases if d[p] in ts.committed]
        if len(committed) > 1:
            yield f"two committed locations in {d}"
        for v in ts.variables:
            if d[v.name] not in v.domain:
                yield f"{v.name}={d[v.name]} outside its domain"
        out = ts.successors(s)
        if committed and (s in out or len(out) != 1):
            yield f"committed state {d} must have exactly its exit"
        if not committed and s not in out:
            yield f"no stutter step at {d}"
        for t in out:
            if t == s:
                continue
            e = ts.as_dict(t)
            changed = [a for a in signals if d[a] != e[a]]
            if len(changed) > 1:
                yield f"signals {changed} change together"
            for a in changed:
                if e[a] not in _SIGNAL_STEP[d[a]]:
                    yield f"{a} moves from {d[a]} to {e[a]}"
                if e[a] == JUST_HAPPENED and e["_phase"] != f"just_{a}":
                    yield f"{a} completes outside its committed location"
            if d["_phase"] != "running":
                a = d["_phase"][len("just_"):]
                if e["_phase"] != "running" or e[a] != NOT_HAPPENING:
                    yield f"{a} stays JUST_HAPPENED for more than one state"
            for v in ts.variables:
                if d[v.name] == e[v.name]:
                    continue
                match v.kind:
                    case "latch":
                        action = v.name[len("done(") : -1]
                        if not e[v.name] or e[action] != JUST_HAPPENED:
                            yield f"{v.name} changes without {action}"
                    case "interval":
                        if e[v.name] and e[begins[v.name]] != JUST_HAPPENED:
                            yield f"{v.name} opens without its begin action"
                        if not e[v.name] and e.get(ends[v.name]) != JUST_HAPPENED:
                            yield f"{v.name} closes without its end action"
                    case "output":
                        if e[v.name[: -len(".output")]] != JUST_HAPPENED:
                            yield f"{v.name} changes without a completion"
            for flag, begin in begins.items():
                if begin in changed and e[begin] == JUST_HAPPENED and d[flag]:
                    yield f"{begin} completes while {flag[: -len('_opened')]} is already open"
