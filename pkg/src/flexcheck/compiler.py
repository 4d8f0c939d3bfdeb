"""Compile a background theory into a finite guarded-command transition system.

One controller owns every action. Each action ``A`` has a signal variable
cycling through NOT_HAPPENING, HAPPENING and JUST_HAPPENED; the completing
command moves the controller phase to the committed location ``just_A`` and
the only command enabled there returns the signal to NOT_HAPPENING. Outputs,
done-latches, interval flags and counters change atomically with completion.

Temporal actions get their own phase variable whose point locations are
committed. At most one phase variable is ever in a committed location.

Exploration order, which fixes witness traces: the stutter step first, then
commands in declaration order (actions in document order, then temporal
action sequences), and within one action start before completion, with
completions in output-label order.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field, replace

from . import syntax as fl
from .ltl import (
    HAPPENING,
    JUST_HAPPENED,
    NOT_HAPPENING,
    TRUE,
    Atom,
    CounterIs,
    DoneLatch,
    LAnd,
    LFalse,
    LImplies,
    LNot,
    LOr,
    LTrue,
    Ltl,
    Opened,
    OutputIs,
    SignalIs,
    atoms,
    conj,
    translate_inner,
)

PHASE = "_phase"
RUNNING = "running"
UNSET = "UNSET"

_OPS = {
    "=": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


class CompileError(fl.SpecError):
    pass


class UnobservedAtomError(KeyError):
    """An atom refers to state that this system does not materialize."""


@dataclass(frozen=True)
class StateVariable:
    name: str
    kind: str  # signal | output | interval | latch | counter | phase
    domain: tuple
    initial: object


@dataclass(frozen=True)
class Cond:
    var: str
    op: str
    value: object


@dataclass(frozen=True)
class Update:
    var: str
    value: object = None
    delta: int = 0  # non-zero means "add delta" instead of "set value"


@dataclass(frozen=True)
class GuardedCommand:
    owner: str
    kind: str  # start | complete | exit | enter | leave
    phase_var: str
    source: str
    target: str
    guard: tuple[Cond, ...] = ()
    condition: Ltl | None = None  # user guard, a propositional state formula
    updates: tuple[Update, ...] = ()
    committed_exit: bool = False
    label: str | None = None


@dataclass(frozen=True)
class PointInfo:
    phase_var: str
    location: str
    index: int  # position in the phase variable's domain


class TransitionSystem:
    """Immutable guarded-command system with an on-the-fly successor function."""

    def __init__(
        self,
        variables: tuple[StateVariable, ...],
        commands: tuple[GuardedCommand, ...],
        committed: frozenset[str],
        incompatibilities: tuple[tuple[Ltl, Ltl], ...] = (),
        points: dict[str, PointInfo] | None = None,
        collapsed: frozenset[str] = frozenset(),
        warnings: tuple[str, ...] = (),
        active: frozenset[str] | None = None,
    ):
        self.variables = variables
        self.commands = commands
        self.committed = committed
        self.incompatibilities = incompatibilities
        self.points = dict(points or {})
        self.collapsed = collapsed
        self.warnings = warnings
        self.owners = tuple(dict.fromkeys(c.owner for c in commands))
        self.active = frozenset(self.owners) if active is None else active
        self.index = {v.name: i for i, v in enumerate(variables)}
        self._atom_cache: dict[Atom, object] = {}
        self._ready = False

    # construction helpers ---------------------------------------------------

    def constrained(self, invariants) -> TransitionSystem:
        """Keep only states satisfying every propositional ``invariant``."""
        invariants = tuple(invariants)
        if not invariants:
            return self
        ts = self.with_changes(incompatibilities=self.incompatibilities + tuple((LNot(f), TRUE) for f in invariants))
        ts.active = self.active
        return ts

    def with_changes(self, **kw) -> TransitionSystem:
        args = dict(
            variables=self.variables,
            commands=self.commands,
            committed=self.committed,
            incompatibilities=self.incompatibilities,
            points=self.points,
            collapsed=self.collapsed,
            warnings=self.warnings,
        )
        args.update(kw)
        return TransitionSystem(**args)

    def restrict(self, owners) -> TransitionSystem:
        """The same system with every command of the other owners disabled."""
        ts = self.with_changes()
        ts.active = frozenset(owners) & frozenset(self.owners)
        return ts

    def variable(self, name: str) -> StateVariable:
        return self.variables[self.index[name]]

    @property
    def actions(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if v.kind == "signal")

    @property
    def phase_vars(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if v.kind == "phase")

    @property
    def initial_state(self) -> tuple:
        return tuple(v.initial for v in self.variables)

    def _build(self):
        self._ready = True
        self._phase_idx = tuple(self.index[p] for p in self.phase_vars)
        self._exits: dict[tuple[int, object], list] = {}
        self._enters: list = []
        for cmd in self.commands:
            if cmd.owner not in self.active:
                continue
            compiled = self._compile_command(cmd)
            if cmd.committed_exit:
                self._exits.setdefault((self.index[cmd.phase_var], cmd.source), []).append(compiled)
            else:
                self._enters.append(compiled)
        pairs = [self.predicate(conj([a, b])) for a, b in self.incompatibilities]
        self._pruned = (lambda s: any(p(s) for p in pairs)) if pairs else None

    def _compile_command(self, cmd: GuardedCommand):
        checks = tuple((self.index[c.var], _OPS[c.op], c.value) for c in cmd.guard)
        cond = self.predicate(cmd.condition) if cmd.condition is not None else None
        ups = tuple((self.index[u.var], u.value, u.delta) for u in cmd.updates)
        return checks, cond, ups, cmd

    # state predicates ---------------------------------------------------------

    def atom_fn(self, atom: Atom):
        fn = self._atom_cache.get(atom)
        if fn is None:
            fn = self._atom_cache[atom] = self.predicate(atom)
        return fn

    def atom_expr(self, atom: Atom) -> str:
        """Python expression over the state tuple ``s`` deciding ``atom``."""
        match atom:
            case SignalIs(a, value) if a in self.points:
                p = self.points[a]
                i = self.index[p.phase_var]
                if value == JUST_HAPPENED:
                    return f"s[{i}] == {p.location!r}"
                if value == NOT_HAPPENING:
                    return f"s[{i}] != {p.location!r}"
                return "False"
            case SignalIs(a, value):
                if a not in self.index:
                    raise UnobservedAtomError(a)
                if value == HAPPENING and a in self.collapsed:
                    raise UnobservedAtomError(f"happening({a}) is not materialized")
                return f"s[{self.index[a]}] == {value!r}"
            case OutputIs(a, label):
                i = self.index.get(f"{a}.output")
                return "False" if i is None else f"s[{i}] == {label!r}"
            case DoneLatch(a) if a in self.points:
                p = self.points[a]
                i = self.index[p.phase_var]
                later = frozenset(self.variables[i].domain[p.index :])
                return f"s[{i}] in {set(later)!r}"
            case DoneLatch(a):
                i = self.index.get(f"done({a})")
                if i is None:
                    raise UnobservedAtomError(f"done({a}) is not materialized")
                return f"s[{i}]"
            case Opened(name):
                return f"s[{self.index[f'{name}_opened']}]"
            case CounterIs(c, op, v):
                return f"s[{self.index[c]}] {'==' if op == '=' else op} {v}"
        raise TypeError(atom)

    def expr(self, f: Ltl) -> str:
        match f:
            case LTrue():
                return "True"
            case LFalse():
                return "False"
            case Atom():
                return "(" + self.atom_expr(f) + ")"
            case LNot(b):
                return f"(not {self.expr(b)})"
            case LAnd(l, r):
                return f"({self.expr(l)} and {self.expr(r)})"
            case LOr(l, r):
                return f"({self.expr(l)} or {self.expr(r)})"
            case LImplies(l, r):
                return f"((not {self.expr(l)}) or {self.expr(r)})"
        raise ValueError(f"not a state formula: {f}")

    def predicate(self, f: Ltl):
        """Compile a propositional formula into a predicate on state tuples."""
        return eval("lambda s: " + self.expr(f))

    def literal_predicate(self, lits) -> object:
        """Predicate for a conjunction of (atom, polarity) literals."""
        if not lits:
            return lambda s: True
        parts = [self.expr(a) if pol else f"(not {self.expr(a)})" for a, pol in lits]
        return eval("lambda s: " + " and ".join(parts))

    def supports(self, f: Ltl) -> bool:
        try:
            for a in atoms(f):
                self.atom_fn(a)
        except (UnobservedAtomError, KeyError):
            return False
        return True

    # semantics ----------------------------------------------------------------

    def initial_states(self) -> list[tuple]:
        if not self._ready:
            self._build()
        s = self.initial_state
        if self._pruned is not None and self._pruned(s):
            return []
        return [s]

    def is_committed(self, s: tuple) -> bool:
        if not self._ready:
            self._build()
        return any(s[i] in self.committed for i in self._phase_idx)

    def successors(self, s: tuple) -> list[tuple]:
        if not self._ready:
            self._build()
        for i in self._phase_idx:
            exits = self._exits.get((i, s[i]))
            if exits is not None:
                return self._fire(s, exits)
            if s[i] in self.committed:
                return []  # committed owner is outside the active slice
        out = [s]
        out.extend(self._fire(s, self._enters))
        return out

    def _fire(self, s: tuple, cmds) -> list[tuple]:
        out = []
        pruned = self._pruned
        for checks, cond, ups, _ in cmds:
            if not all(op(s[i], v) for i, op, v in checks):
                continue
            if cond is not None and not cond(s):
                continue
            t = list(s)
            for i, value, delta in ups:
                t[i] = t[i] + delta if delta else value
            t = tuple(t)
            if pruned is not None and pruned(t):
                continue
            out.append(t)
        return out

    def fired_command(self, s: tuple, t: tuple) -> GuardedCommand | None:
        """The command taking ``s`` to ``t``; None for the stutter step."""
        if s == t and not self.is_committed(s):
            return None
        if not self._ready:
            self._build()
        for cmds in [*self._exits.values(), self._enters]:
            for checks, cond, ups, cmd in cmds:
                if self._fire(s, [(checks, cond, ups, cmd)]) == [t]:
                    return cmd
        return None

    def as_dict(self, s: tuple) -> dict:
        """Readable valuation, including pseudo-entries for temporal points."""
        d = {v.name: s[i] for i, v in enumerate(self.variables)}
        for name, p in self.points.items():
            i = self.index[p.phase_var]
            order = self.variables[i].domain.index(s[i])
            d[name] = JUST_HAPPENED if s[i] == p.location else NOT_HAPPENING
            d[f"done({name})"] = order >= p.index
        return d

    # slicing --------------------------------------------------------------------

    def atom_vars(self, atom: Atom) -> set[str]:
        match atom:
            case SignalIs(a, _) | DoneLatch(a) if a in self.points:
                return {self.points[a].phase_var}
            case SignalIs(a, _):
                return {a}
            case OutputIs(a, _):
                return {f"{a}.output"} if f"{a}.output" in self.index else set()
            case DoneLatch(a):
                return {f"done({a})"}
            case Opened(i):
                return {f"{i}_opened"}
            case CounterIs(c, _, _):
                return {c}
        raise TypeError(atom)

    def cone(self, formulas) -> frozenset[str]:
        """Owners whose commands can influence the atoms of ``formulas``."""
        writers: dict[str, set[str]] = {}
        reads: dict[str, set[str]] = {}
        for cmd in self.commands:
            for u in cmd.updates:
                if u.var not in self.phase_vars:
                    writers.setdefault(u.var, set()).add(cmd.owner)
            r = reads.setdefault(cmd.owner, set())
            r.update(c.var for c in cmd.guard if c.var not in self.phase_vars)
            r.update(u.var for u in cmd.updates if u.var not in self.phase_vars)
            if cmd.condition is not None:
                for a in atoms(cmd.condition):
                    r |= self.atom_vars(a)
        pair_vars = [set().union(*(self.atom_vars(a) for a in atoms(conj(p)))) for p in self.incompatibilities]
        todo: set[str] = set()
        for f in formulas:
            for a in atoms(f):
                todo |= self.atom_vars(a)
        seen_vars: set[str] = set()
        owners: set[str] = set()
        while todo:
            v = todo.pop()
            if v in seen_vars:
                continue
            seen_vars.add(v)
            for pv in pair_vars:
                if v in pv:
                    todo |= pv - seen_vars
            for o in writers.get(v, ()):
                if o not in owners:
                    owners.add(o)
                    todo |= reads.get(o, set()) - seen_vars
        return frozenset(owners)

    def reachable(self, limit: int | None = None) -> list[tuple]:
        """Every reachable state in breadth-first order."""
        seen = dict.fromkeys(self.initial_states())
        frontier = list(seen)
        while frontier:
            nxt = []
            for s in frontier:
                for t in self.successors(s):
                    if t not in seen:
                        seen[t] = None
                        nxt.append(t)
                        if limit is not None and len(seen) > limit:
                            raise OverflowError("reachable state limit exceeded")
            frontier = nxt
        return list(seen)


# compilation -------------------------------------------------------------------


def observed_atoms(doc: fl.SpecDocument, extra=()) -> set[Atom]:
    """Atoms mentioned anywhere in the document or in ``extra`` formulas."""
    found: set[Atom] = set()
    for a in doc.actions.values():
        if a.guard is not None:
            found |= atoms(translate_inner(a.guard))
    for l, r in doc.incompatibilities:
        found |= atoms(translate_inner(l)) | atoms(translate_inner(r))
    for r in list(doc.rules) + list(doc.queries):
        found |= atoms(translate_inner(r.form.body))
        if r.form.reparation is not None:
            found |= atoms(translate_inner(r.form.reparation))
    for f in extra:
        found |= atoms(f)
    return found


def compile(doc: fl.SpecDocument, *, observe=(), reduce: bool = True) -> TransitionSystem:
    """Compile the background theory of ``doc``.

    ``observe`` lists extra formulas whose atoms must be supported. With
    ``reduce`` on, actions whose HAPPENING value is never observed skip that
    phase: they go straight from NOT_HAPPENING to JUST_HAPPENED. This is
    stutter-equivalent for the X-free formulas used here.
    """
    seen = observed_atoms(doc, observe)
    happening = {a.action for a in seen if isinstance(a, SignalIs) and a.value == HAPPENING}
    latched = {a.action for a in seen if isinstance(a, (DoneLatch, OutputIs))}
    collapsed = frozenset(a for a in doc.actions if reduce and a not in happening)

    variables: list[StateVariable] = [StateVariable(PHASE, "phase", (RUNNING,), RUNNING)]
    commands: list[GuardedCommand] = []
    warnings: list[str] = []
    for decl in doc.actions.values():
        v, c = _compile_action(decl, decl.name in collapsed, decl.name in latched)
        variables += v
        commands += c
    phase_dom = (RUNNING,) + tuple(f"just_{a}" for a in doc.actions)
    variables[0] = replace(variables[0], domain=phase_dom)
    ts = TransitionSystem(
        tuple(variables),
        tuple(commands),
        frozenset(phase_dom[1:]),
        collapsed=collapsed,
        warnings=tuple(warnings),
    )
    for decl in doc.intervals.values():
        ts = compile_interval(decl, ts)
    for decl in doc.counters.values():
        ts = compile_counter(decl, ts)
    for n, decl in enumerate(doc.temporal_actions, start=1):
        ts = compile_temporal_actions(decl, ts, name=f"_time{n}")
    return urgency_guards(apply_incompatibilities(doc, ts))


def _compile_action(decl: fl.ActionDecl, collapsed: bool, latched: bool):
    a = decl.name
    sig = (NOT_HAPPENING, JUST_HAPPENED) if collapsed else (NOT_HAPPENING, HAPPENING, JUST_HAPPENED)
    variables = [StateVariable(a, "signal", sig, NOT_HAPPENING)]
    if decl.outputs:
        variables.append(StateVariable(f"{a}.output", "output", (UNSET,) + decl.outputs, UNSET))
    if latched:
        variables.append(StateVariable(f"done({a})", "latch", (False, True), False))
    cond = translate_inner(decl.guard) if decl.guard is not None else None
    scope = (Cond(f"{decl.scope}_opened", "=", True),) if decl.scope else ()
    commands = []
    if not collapsed:
        commands.append(
            GuardedCommand(
                a, "start", PHASE, RUNNING, RUNNING,
                guard=(Cond(a, "=", NOT_HAPPENING),) + scope,
                condition=cond,
                updates=(Update(a, HAPPENING),),
            )
        )
    before = NOT_HAPPENING if collapsed else HAPPENING
    base_updates = (Update(a, JUST_HAPPENED), Update(PHASE, f"just_{a}"))
    if latched:
        base_updates += (Update(f"done({a})", True),)
    for label in decl.outputs or (None,):
        ups = base_updates + ((Update(f"{a}.output", label),) if label is not None else ())
        commands.append(
            GuardedCommand(
                a, "complete", PHASE, RUNNING, f"just_{a}",
                guard=(Cond(a, "=", before),) + scope,
                condition=cond,
                updates=ups,
                label=label,
            )
        )
    commands.append(
        GuardedCommand(
            a, "exit", PHASE, f"just_{a}", RUNNING,
            guard=(Cond(a, "=", JUST_HAPPENED),),
            updates=(Update(a, NOT_HAPPENING), Update(PHASE, RUNNING)),
            committed_exit=True,
        )
    )
    return variables, commands


def _extend_completions(ts: TransitionSystem, action: str, guard=(), updates=()) -> tuple[GuardedCommand, ...]:
    out = []
    for c in ts.commands:
        if c.owner == action and c.kind == "complete":
            c = replace(c, guard=c.guard + tuple(guard), updates=c.updates + tuple(updates))
        out.append(c)
    return tuple(out)


def compile_interval(decl: fl.IntervalDecl, ts: TransitionSystem) -> TransitionSystem:
    """Add ``<name>_opened``; the begin action opens it and the end action closes it."""
    flag = f"{decl.name}_opened"
    variables = ts.variables + (StateVariable(flag, "interval", (False, True), False),)
    ts = ts.with_changes(variables=variables)
    begin_guard = [Cond(flag, "=", False)]
    if decl.scope:
        begin_guard.append(Cond(f"{decl.scope}_opened", "=", True))
    commands = _extend_completions(ts, decl.begin, begin_guard, [Update(flag, True)])
    ts = ts.with_changes(commands=commands)
    if decl.end is not None:
        commands = _extend_completions(ts, decl.end, [Cond(flag, "=", True)], [Update(flag, False)])
        ts = ts.with_changes(commands=commands)
    warnings = list(ts.warnings)
    for c in ts.commands:
        if c.owner == decl.begin and c.kind == "complete" and Cond(flag, "=", True) in c.guard:
            warnings.append(f"interval {decl.name} can never open: {decl.begin} only occurs inside it")
            break
    return ts.with_changes(warnings=tuple(dict.fromkeys(warnings)))


def compile_counter(decl: fl.CounterDecl, ts: TransitionSystem) -> TransitionSystem:
    """Add a bounded counter updated by the completions of its actions."""
    c = decl.name
    variables = ts.variables + (StateVariable(c, "counter", tuple(range(decl.bound + 1)), 0),)
    ts = ts.with_changes(variables=variables)
    warnings = list(ts.warnings)
    for a in decl.inc_actions:
        ts = ts.with_changes(commands=_extend_completions(ts, a, [Cond(c, "<", decl.bound)], [Update(c, delta=1)]))
        warnings.append(f"completion of {a} is disabled while {c} = {decl.bound}")
    for a in decl.dec_actions:
        ts = ts.with_changes(commands=_extend_completions(ts, a, [Cond(c, ">", 0)], [Update(c, delta=-1)]))
    for a in decl.reset_actions:
        ts = ts.with_changes(commands=_extend_completions(ts, a, [], [Update(c, 0)]))
    return ts.with_changes(warnings=tuple(warnings))


def compile_temporal_actions(decl: fl.TemporalActionsDecl, ts: TransitionSystem, *, name: str = "_time1") -> TransitionSystem:
    """Add a phase variable visiting the points in order, gaps in between."""
    locs: list[str] = ["gap_0"]
    for k, p in enumerate(decl.points, start=1):
        locs += [p, f"gap_{k}"]
    variables = ts.variables + (StateVariable(name, "phase", tuple(locs), "gap_0"),)
    points = dict(ts.points)
    commands = list(ts.commands)
    for k, p in enumerate(decl.points, start=1):
        points[p] = PointInfo(name, p, 2 * k - 1)
        commands.append(
            GuardedCommand(name, "enter", name, f"gap_{k - 1}", p, guard=(Cond(name, "=", f"gap_{k - 1}"),), updates=(Update(name, p),))
        )
        commands.append(
            GuardedCommand(name, "leave", name, p, f"gap_{k}", guard=(Cond(name, "=", p),), updates=(Update(name, f"gap_{k}"),), committed_exit=True)
        )
    return ts.with_changes(
        variables=variables,
        commands=tuple(commands),
        committed=ts.committed | frozenset(decl.points),
        points=points,
    )


def urgency_guards(ts: TransitionSystem) -> TransitionSystem:
    """Make explicit that only committed exits may fire from a committed location.

    The successor function already enforces this; the explicit guards keep
    emitted models faithful.
    """
    conds = []
    for v in ts.variables:
        if v.kind == "phase":
            conds += [Cond(v.name, "!=", loc) for loc in v.domain if loc in ts.committed]
    commands = tuple(
        c if c.committed_exit else replace(c, guard=c.guard + tuple(x for x in conds if x not in c.guard))
        for c in ts.commands
    )
    return ts.with_changes(commands=commands)


def apply_incompatibilities(doc: fl.SpecDocument, ts: TransitionSystem) -> TransitionSystem:
    """Prune every transition whose target satisfies both sides of a declared pair."""
    if not doc.incompatibilities:
        return ts
    pairs = tuple((translate_inner(l), translate_inner(r)) for l, r in doc.incompatibilities)
    warnings = list(ts.warnings)
    for (l, r), (fl_l, fl_r) in zip(pairs, doc.incompatibilities):
        if l == r:
            from .printer import format_inner

            warnings.append(f"{format_inner(fl_l)} is declared incompatible with itself and can never hold")
    return ts.with_changes(incompatibilities=ts.incompatibilities + pairs, warnings=tuple(warnings))
