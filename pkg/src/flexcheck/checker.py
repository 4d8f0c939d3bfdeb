"""Explicit-state LTL model checking by nested depth-first search.

``exists_trace`` builds a Büchi automaton for the formula, explores the
synchronous product with the transition system on the fly and looks for an
accepting cycle. Every witness is replayed through the independent lasso
evaluator before it is returned.

Large conjunctions are handled by refinement: the search starts from a few
conjuncts over the cone of influence of their atoms, and a conjunct is added
only when the current witness violates it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .buchi import BuchiAutomaton, ltl_to_buchi
from .evaluate import evaluate
from .ltl import Alw, Ev, LNot, Ltl, Release, Until, conj, conjuncts, subformulas
from .trace import LassoTrace, build_trace

DEFAULT_MAX_STATES = 5_000_000


class StateBudgetExceeded(RuntimeError):
    """The product exploration visited more states than allowed."""

    def __init__(self, limit: int):
        self.limit = limit
        super().__init__(f"state budget of {limit} product states exceeded")


class WitnessError(AssertionError):
    """A witness failed independent replay; indicates an internal bug."""


@dataclass(frozen=True)
class Verdict:
    holds: bool
    counterexample: LassoTrace | None = None


class _Product:
    """On-the-fly product of a system with several Büchi automata.

    Nodes are ``(state, automaton states, k)``. The counter ``k`` walks
    round-robin over the automata whose acceptance is non-trivial, so one
    accepting set suffices for the nested search.
    """

    def __init__(self, ts, automata: list[BuchiAutomaton], max_states: int):
        self.ts = ts
        self.auts = list(automata)
        self.max_states = max_states
        self.count = 0
        distinct: dict = {}
        self.label_ids = [[distinct.setdefault(lits, len(distinct)) for lits in a.labels] for a in self.auts]
        self.label_fns = [ts.literal_predicate(lits) for lits in distinct]
        self.finals = [a.accepting[0] for a in self.auts]
        self.counting = [i for i, a in enumerate(self.auts) if len(self.finals[i]) < a.n_states]

    def label_ok(self, i: int, q: int, s) -> bool:
        return self.label_fns[self.label_ids[i][q]](s)

    def node(self, s, qs, k: int = 0):
        return (s, tuple(qs), k)

    def initial(self):
        out = []
        for s in self.ts.initial_states():
            options = [[q for q in sorted(a.initial) if self.label_ok(i, q, s)] for i, a in enumerate(self.auts)]
            out += [(s, combo, 0) for combo in itertools.product(*options)]
        return out

    def is_accepting(self, node) -> bool:
        if not self.counting:
            return True
        _, qs, k = node
        i = self.counting[0]
        return k == 0 and qs[i] in self.finals[i]

    def advance(self, qs, k: int) -> int:
        if not self.counting:
            return 0
        i = self.counting[k]
        return (k + 1) % len(self.counting) if qs[i] in self.finals[i] else k

    def step(self, qs, k: int, t, memo: dict) -> list:
        """Automaton successors of ``qs`` reading letter ``t``, with the new counter."""
        nk = self.advance(qs, k)
        options = []
        for i, q in enumerate(qs):
            ids = self.label_ids[i]
            opts = []
            for r in self.auts[i].succ[q]:
                lid = ids[r]
                ok = memo.get(lid)
                if ok is None:
                    ok = memo[lid] = self.label_fns[lid](t)
                if ok:
                    opts.append(r)
            if not opts:
                return []
            options.append(opts)
        return [(combo, nk) for combo in itertools.product(*options)]

    def successors(self, node):
        s, qs, k = node
        out = []
        for t in self.ts.successors(s):
            out += [(t, combo, nk) for combo, nk in self.step(qs, k, t, {})]
        return out

    def tick(self):
        self.count += 1
        if self.count > self.max_states:
            raise StateBudgetExceeded(self.max_states)


def _nested_dfs(prod: _Product):
    """Return (prefix, cycle) lists of product states, or None."""
    outer_seen: set = set()
    inner_seen: set = set()
    on_stack: dict = {}
    for root in prod.initial():
        if root in outer_seen:
            continue
        outer_seen.add(root)
        prod.tick()
        path = [root]
        on_stack[root] = 0
        iters = [iter(prod.successors(root))]
        while iters:
            nxt = next(iters[-1], None)
            if nxt is not None:
                if nxt not in outer_seen:
                    outer_seen.add(nxt)
                    prod.tick()
                    on_stack[nxt] = len(path)
                    path.append(nxt)
                    iters.append(iter(prod.successors(nxt)))
                continue
            node = path[-1]
            if prod.is_accepting(node):
                found = _inner_dfs(prod, node, on_stack, inner_seen)
                if found is not None:
                    k, tail = found
                    return path[:k], path[k:] + tail
            iters.pop()
            path.pop()
            del on_stack[node]
    return None


def _inner_dfs(prod: _Product, seed, on_stack: dict, seen: set):
    """Search a path from ``seed`` back into the outer stack.

    Returns (index of the stack state closing the cycle, inner path after seed).
    """
    path = [seed]
    iters = [iter(prod.successors(seed))]
    while iters:
        nxt = next(iters[-1], None)
        if nxt is None:
            iters.pop()
            path.pop()
            continue
        if nxt in on_stack:
            return on_stack[nxt], path[1:]
        if nxt not in seen:
            seen.add(nxt)
            prod.tick()
            path.append(nxt)
            iters.append(iter(prod.successors(nxt)))
    return None


def is_invariant(f: Ltl) -> bool:
    """``G p`` with ``p`` propositional."""
    return isinstance(f, Alw) and is_state_formula(f.body)


def is_state_formula(f: Ltl) -> bool:
    return not any(isinstance(n, (Alw, Ev, Until, Release)) for n in subformulas(f))


def search(ts, formula: Ltl, *, max_states: int = DEFAULT_MAX_STATES):
    """Raw lasso of system-state tuples satisfying ``formula``, or None."""
    automata = [ltl_to_buchi(p) for p in conjuncts(formula)]
    prod = _Product(ts, automata, max_states)
    found = _nested_dfs(prod)
    if found is None:
        return None
    prefix, cycle = found
    return [n[0] for n in prefix], [n[0] for n in cycle]


def satisfies(ts, raw: tuple[list, list], formula: Ltl) -> bool:
    prefix, cycle = raw
    states = [ts.as_dict(s) for s in prefix + cycle]
    return evaluate(formula, states, len(prefix))


def compact(raw: tuple[list, list]) -> tuple[list, list]:
    """Drop repeated consecutive states; harmless for stutter-invariant formulas."""
    prefix, cycle = raw
    seq = []
    for s in prefix:
        if not seq or seq[-1] != s:
            seq.append(s)
    loop = []
    for s in cycle:
        if not loop or loop[-1] != s:
            loop.append(s)
    while len(loop) > 1 and loop[-1] == loop[0]:
        loop.pop()
    while seq and seq[-1] == loop[0]:
        seq.pop()
    return seq, loop


def exists_trace(
    ts,
    formula: Ltl,
    *,
    max_states: int = DEFAULT_MAX_STATES,
    refine: bool = True,
    slice: bool = True,
) -> LassoTrace | None:
    """A lasso run of ``ts`` satisfying ``formula``, or None if there is none."""
    parts = conjuncts(formula)
    invariants = [p.body for p in parts if is_invariant(p)]
    temporal = [p for p in parts if not is_invariant(p)]
    # invariants are enforced by pruning states, not by the automaton
    ts = ts.constrained(invariants)
    if refine and len(temporal) > 1:
        chosen = [p for p in temporal if not isinstance(p, Alw)] or temporal[:1]
    else:
        chosen = list(temporal)
    while True:
        sub = conj(chosen)
        system = ts.restrict(ts.cone([sub])) if slice else ts
        raw = search(system, sub, max_states=max_states)
        if raw is None:
            return None
        missing = [p for p in temporal if p not in chosen and not satisfies(ts, raw, p)]
        if missing:
            chosen.append(missing[0])
            continue
        short = compact(raw)
        if short != raw and satisfies(ts, short, formula):
            raw = short
        if not satisfies(ts, raw, formula):
            raise WitnessError(f"witness does not satisfy {formula}")
        return build_trace(ts, *raw)


def holds_on_all(ts, formula: Ltl, **kw) -> Verdict:
    """Whether every run satisfies ``formula``; otherwise a counterexample."""
    witness = exists_trace(ts, LNot(formula), **kw)
    return Verdict(witness is None, witness)
