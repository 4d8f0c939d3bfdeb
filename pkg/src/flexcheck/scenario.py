"""Search for runs on which a reparation becomes impossible to honour.

A repaired rule with a propositional trigger ``v`` owes its reparation ``rho``
from every position where ``v`` holds. Against another rule's constraint
``T`` we look for a finite run that has triggered the reparation and reached
a point where ``rho`` can still be met and ``T`` can still be met, but never
both. This is an exists-forall property, so it is decided by a subset
construction over three automata (for ``rho``, ``T`` and their product)
combined with liveness of product states.
"""

from __future__ import annotations

import itertools
from collections import deque

from .buchi import BuchiAutomaton, ltl_to_buchi
from .checker import DEFAULT_MAX_STATES, StateBudgetExceeded, _nested_dfs, _Product, compact
from .ltl import Ltl
from .trace import LassoTrace, build_trace


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.count = 0

    def tick(self):
        self.count += 1
        if self.count > self.limit:
            raise StateBudgetExceeded(self.limit)


class _Liveness:
    """Which product states (system state, automaton state) start an accepting run."""

    def __init__(self, ts, automata: list[BuchiAutomaton], budget: _Budget):
        self.prod = _Product(ts, automata, budget.limit)
        self.prod.tick = budget.tick
        self.known: dict = {}

    def start(self, t) -> frozenset:
        """Automaton configurations (states, counter) that may begin at letter ``t``."""
        options = [
            [q for q in sorted(a.initial) if self.prod.label_ok(i, q, t)] for i, a in enumerate(self.prod.auts)
        ]
        return frozenset((combo, 0) for combo in itertools.product(*options))

    def step(self, configs: frozenset, t) -> frozenset:
        memo: dict = {}
        return frozenset(c for qs, k in configs for c in self.prod.step(qs, k, t, memo))

    def any_live(self, t, configs) -> bool:
        return any(self((t, qs, k)) for qs, k in configs)

    def __call__(self, node) -> bool:
        if node not in self.known:
            self._tarjan(node)
        return self.known[node]

    def _tarjan(self, root):
        prod, known = self.prod, self.known
        index: dict = {}
        low: dict = {}
        stack: list = []
        on: set = set()
        work = [(root, iter(prod.successors(root)))]
        index[root] = low[root] = 0
        stack.append(root)
        on.add(root)
        prod.tick()
        counter = 1
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt in known:
                    continue
                if nxt not in index:
                    index[nxt] = low[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on.add(nxt)
                    prod.tick()
                    work.append((nxt, iter(prod.successors(nxt))))
                    advanced = True
                    break
                if nxt in on:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] != index[node]:
                continue
            comp = []
            while True:
                x = stack.pop()
                on.discard(x)
                comp.append(x)
                if x == node:
                    break
            members = set(comp)
            succs = {x: prod.successors(x) for x in comp}
            cyclic = len(comp) > 1 or node in succs[node]
            live = cyclic and any(prod.is_accepting(x) for x in comp)
            if not live:
                live = any(known.get(y, False) for x in comp for y in succs[x] if y not in members)
            for x in comp:
                known[x] = live


def blocked_reparation(
    ts,
    trigger: Ltl,
    reparation: Ltl,
    constraint: Ltl,
    *,
    max_states: int = DEFAULT_MAX_STATES,
) -> LassoTrace | None:
    """A run reaching a point where ``reparation`` (owed since a ``trigger``
    state) and ``constraint`` (owed since the start) each remain achievable
    but can no longer be achieved together; None if there is no such run.
    """
    budget = _Budget(max_states)
    a_rho = ltl_to_buchi(reparation)
    a_con = ltl_to_buchi(constraint)
    live_rho = _Liveness(ts, [a_rho], budget)
    live_con = _Liveness(ts, [a_con], budget)
    live_joint = _Liveness(ts, [a_rho, a_con], budget)
    is_trigger = ts.predicate(trigger)

    def triggered(t, s_con):
        s_rho = live_rho.start(t)
        s_joint = frozenset(((i, j), 0) for (i,), _ in s_rho for (j,), _ in s_con)
        return (t, s_con, s_rho, s_joint)

    def classify(cfg):
        t, s_con, s_rho, s_joint = cfg
        if not live_con.any_live(t, s_con):
            return "dead"
        if s_rho is None:
            return "open"
        if not live_rho.any_live(t, s_rho):
            return "dead"
        if live_joint.any_live(t, s_joint):
            return "open"
        return "doomed"

    parent: dict = {}
    queue: deque = deque()

    def push(cfg, prev):
        if cfg in parent:
            return None
        budget.tick()
        parent[cfg] = prev
        verdict = classify(cfg)
        if verdict == "doomed":
            return cfg
        if verdict == "open":
            queue.append(cfg)
        return None

    for s0 in ts.initial_states():
        s_con = live_con.start(s0)
        found = push((s0, s_con, None, None), None)
        if found is None and is_trigger(s0):
            found = push(triggered(s0, s_con), None)
        if found is not None:
            return _witness(ts, found, parent, live_con)
    while queue:
        cfg = queue.popleft()
        s, s_con, s_rho, s_joint = cfg
        for t in ts.successors(s):
            n_con = live_con.step(s_con, t)
            if not n_con:
                continue
            if s_rho is None:
                found = push((t, n_con, None, None), cfg)
                if found is None and is_trigger(t):
                    found = push(triggered(t, n_con), cfg)
            else:
                found = push((t, n_con, live_rho.step(s_rho, t), live_joint.step(s_joint, t)), cfg)
            if found is not None:
                return _witness(ts, found, parent, live_con)
    return None


def _witness(ts, cfg, parent, live_con: _Liveness) -> LassoTrace:
    path = []
    node = cfg
    while node is not None:
        path.append(node[0])
        node = parent[node]
    path.reverse()
    t, s_con = cfg[0], cfg[1]
    # continue along a run that keeps the constraint
    qs, k = next(c for c in sorted(s_con) if live_con((t, *c)))
    prod = live_con.prod
    prod.initial = lambda: [(t, qs, k)]
    found = _nested_dfs(prod)
    prefix, cycle = found
    raw = (path[:-1] + [n[0] for n in prefix], [n[0] for n in cycle])
    return build_trace(ts, *compact(raw))
