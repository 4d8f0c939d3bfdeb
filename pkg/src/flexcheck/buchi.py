"""LTL to Büchi automata via the on-the-fly tableau construction.

Automata are *state-labelled*: a run ``n0 n1 ...`` reads word ``w0 w1 ...``
when every ``w_i`` satisfies the literal set of ``n_i``. Acceptance is first
generalized (one set per Until subformula) and then degeneralized with a
counter so that emptiness reduces to a single-set nested DFS.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .ltl import Atom, LAnd, LFalse, LNot, LOr, LTrue, Ltl, Release, Until, nnf, simplify

Literal = tuple[Atom, bool]


@dataclass(frozen=True)
class BuchiAutomaton:
    labels: tuple[tuple[Literal, ...], ...]
    succ: tuple[tuple[int, ...], ...]
    initial: frozenset[int]
    accepting: tuple[frozenset[int], ...]  # generalized: one set per condition
    names: tuple[object, ...] = field(default=(), compare=False)

    @property
    def n_states(self) -> int:
        return len(self.labels)

    @property
    def transitions(self):
        """(source, literal constraint, target) triples; constraints are on the target letter."""
        for s, targets in enumerate(self.succ):
            for t in targets:
                yield s, self.labels[t], t

    def is_single_set(self) -> bool:
        return len(self.accepting) == 1


def _is_literal(f: Ltl) -> bool:
    return isinstance(f, Atom) or (isinstance(f, LNot) and isinstance(f.body, Atom))


def _negate(f: Ltl) -> Ltl:
    return f.body if isinstance(f, LNot) else LNot(f)


@dataclass
class _Node:
    incoming: set
    new: list
    old: set
    next: set


def ltl_to_generalized(formula: Ltl) -> BuchiAutomaton:
    """Generalized Büchi automaton accepting exactly the models of ``formula``."""
    phi = simplify(nnf(formula))
    done: list[_Node] = []
    index: dict[tuple[frozenset, frozenset], int] = {}
    stack = [_Node({"init"}, [phi], set(), set())]

    while stack:
        node = stack.pop()
        if not node.new:
            key = (frozenset(node.old), frozenset(node.next))
            if key in index:
                done[index[key]].incoming |= node.incoming
                continue
            index[key] = len(done)
            done.append(node)
            stack.append(_Node({index[key]}, list(node.next), set(), set()))
            continue
        eta = node.new.pop()
        if eta in node.old:
            stack.append(node)
            continue
        if isinstance(eta, LFalse):
            continue
        if isinstance(eta, LTrue):
            # kept in old: it may be the right side of an Until to fulfil
            node.old.add(eta)
            stack.append(node)
            continue
        if _is_literal(eta):
            if _negate(eta) in node.old:
                continue
            node.old.add(eta)
            stack.append(node)
            continue
        old = node.old | {eta}
        match eta:
            case LAnd(l, r):
                stack.append(_Node(node.incoming, node.new + [x for x in (l, r) if x not in old], old, node.next))
            case LOr(l, r):
                stack.append(_Node(set(node.incoming), node.new + [l], set(old), set(node.next)))
                stack.append(_Node(set(node.incoming), node.new + [r], set(old), set(node.next)))
            case Until(l, r):
                stack.append(_Node(set(node.incoming), node.new + [l], set(old), node.next | {eta}))
                stack.append(_Node(set(node.incoming), node.new + [r], set(old), set(node.next)))
            case Release(l, r):
                stack.append(_Node(set(node.incoming), node.new + [r], set(old), node.next | {eta}))
                stack.append(_Node(set(node.incoming), node.new + [l, r], set(old), set(node.next)))
            case _:
                raise TypeError(f"formula not in negation normal form: {eta!r}")

    succ: list[list[int]] = [[] for _ in done]
    initial = set()
    for i, node in enumerate(done):
        for src in node.incoming:
            if src == "init":
                initial.add(i)
            else:
                succ[src].append(i)
    labels = []
    for node in done:
        lits = []
        for f in node.old:
            if isinstance(f, Atom):
                lits.append((f, True))
            elif isinstance(f, LNot) and isinstance(f.body, Atom):
                lits.append((f.body, False))
        labels.append(tuple(sorted(lits, key=repr)))
    untils = sorted({f for n in done for f in n.old if isinstance(f, Until)}, key=repr)
    accepting = tuple(
        frozenset(i for i, n in enumerate(done) if u not in n.old or u.right in n.old) for u in untils
    )
    return BuchiAutomaton(
        labels=tuple(labels),
        succ=tuple(tuple(sorted(set(s))) for s in succ),
        initial=frozenset(initial),
        accepting=accepting,
        names=tuple(range(len(done))),
    )


def degeneralize(gba: BuchiAutomaton) -> BuchiAutomaton:
    """Counter construction: copy ``i`` waits for acceptance set ``i``."""
    k = len(gba.accepting)
    if k == 0:
        everything = frozenset(range(gba.n_states))
        return BuchiAutomaton(gba.labels, gba.succ, gba.initial, (everything,), gba.names)
    if k == 1:
        return gba
    ids: dict[tuple[int, int], int] = {}
    order: list[tuple[int, int]] = []

    def ident(q: int, i: int) -> int:
        if (q, i) not in ids:
            ids[(q, i)] = len(order)
            order.append((q, i))
        return ids[(q, i)]

    initial = frozenset(ident(q, 0) for q in sorted(gba.initial))
    succ: list[tuple[int, ...]] = []
    pos = 0
    while pos < len(order):
        q, i = order[pos]
        j = (i + 1) % k if q in gba.accepting[i] else i
        succ.append(tuple(ident(t, j) for t in gba.succ[q]))
        pos += 1
    labels = tuple(gba.labels[q] for q, _ in order)
    accepting = frozenset(n for n, (q, i) in enumerate(order) if i == 0 and q in gba.accepting[0])
    return BuchiAutomaton(labels, tuple(succ), initial, (accepting,), tuple(order))


def ltl_to_buchi(formula: Ltl) -> BuchiAutomaton:
    """Single-acceptance-set Büchi automaton for ``formula``."""
    return degeneralize(ltl_to_generalized(formula))


def _merge_labels(a: tuple[Literal, ...], b: tuple[Literal, ...]) -> tuple[Literal, ...] | None:
    merged = dict(a)
    for atom, pol in b:
        if merged.get(atom, pol) != pol:
            return None
        merged[atom] = pol
    return tuple(sorted(merged.items(), key=repr))


def product(b1: BuchiAutomaton, b2: BuchiAutomaton) -> BuchiAutomaton:
    """Synchronous product of two single-set automata, as a two-set generalized automaton.

    Every compatible state pair is kept and marked initial, so a run may be
    started from any pair; ``names`` maps state ids back to pairs.
    """
    pairs = []
    labels = []
    for i in range(b1.n_states):
        for j in range(b2.n_states):
            lab = _merge_labels(b1.labels[i], b2.labels[j])
            if lab is not None:
                pairs.append((i, j))
                labels.append(lab)
    ids = {p: n for n, p in enumerate(pairs)}
    succ = tuple(
        tuple(sorted(ids[(x, y)] for x in b1.succ[i] for y in b2.succ[j] if (x, y) in ids)) for i, j in pairs
    )
    f1, f2 = b1.accepting[0], b2.accepting[0]
    accepting = (
        frozenset(n for n, (i, _) in enumerate(pairs) if i in f1),
        frozenset(n for n, (_, j) in enumerate(pairs) if j in f2),
    )
    return BuchiAutomaton(tuple(labels), succ, frozenset(range(len(pairs))), accepting, tuple(pairs))
