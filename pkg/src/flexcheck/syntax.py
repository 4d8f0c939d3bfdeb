"""Abstract syntax of FL documents: declarations, inner formulas and deontic rules."""

from __future__ import annotations

from dataclasses import dataclass, field


class SpecError(Exception):
    """Base class for every input error. Carries an optional source position."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(where + message)


class LexError(SpecError):
    pass


class ParseError(SpecError):
    pass


class NestingError(ParseError):
    pass


class UndeclaredError(SpecError):
    pass


class DuplicateError(SpecError):
    pass


class MacroCycleError(SpecError):
    pass


class RangeError(SpecError):
    pass


class ExceptionTargetError(SpecError):
    pass


# Inner formulas -------------------------------------------------------------


class Inner:
    """Node of an inner (non-deontic) formula."""

    def children(self) -> tuple[Inner, ...]:
        return ()


@dataclass(frozen=True)
class Top(Inner):
    pass


@dataclass(frozen=True)
class Bottom(Inner):
    pass


@dataclass(frozen=True)
class Name(Inner):
    """Identifier not yet resolved against the declarations."""

    ident: str
    pos: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Act(Inner):
    """The action has just finished (its signal is JUST_HAPPENED)."""

    action: str


@dataclass(frozen=True)
class Happening(Inner):
    action: str


@dataclass(frozen=True)
class Done(Inner):
    """The action finished at least once in the past."""

    action: str


@dataclass(frozen=True)
class Output(Inner):
    action: str
    label: str
    pos: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class IsOpen(Inner):
    interval: str


@dataclass(frozen=True)
class Compare(Inner):
    counter: str
    op: str
    value: int
    pos: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class MacroRef(Inner):
    macro: str


@dataclass(frozen=True)
class Not(Inner):
    body: Inner

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class And(Inner):
    left: Inner
    right: Inner

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Or(Inner):
    left: Inner
    right: Inner

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Implies(Inner):
    left: Inner
    right: Inner

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Eventually(Inner):
    body: Inner

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class EventuallyIn(Inner):
    interval: str
    body: Inner

    def children(self):
        return (self.body,)


ATOM_TYPES = (Top, Bottom, Name, Act, Happening, Done, Output, IsOpen, Compare, MacroRef)


def walk(node: Inner):
    """Yield every node of a formula, parents before children."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(n.children()))


def rebuild(node: Inner, fn) -> Inner:
    """Bottom-up map: rebuild ``node`` with ``fn`` applied to every rebuilt subterm."""
    match node:
        case Not(b):
            node = Not(rebuild(b, fn))
        case And(l, r):
            node = And(rebuild(l, fn), rebuild(r, fn))
        case Or(l, r):
            node = Or(rebuild(l, fn), rebuild(r, fn))
        case Implies(l, r):
            node = Implies(rebuild(l, fn), rebuild(r, fn))
        case Eventually(b):
            node = Eventually(rebuild(b, fn))
        case EventuallyIn(i, b):
            node = EventuallyIn(i, rebuild(b, fn))
    return fn(node)


def is_propositional(node: Inner) -> bool:
    return not any(isinstance(n, (Eventually, EventuallyIn)) for n in walk(node))


# Deontic forms and declarations ---------------------------------------------

DEONTIC_OPS = ("O", "F", "OE", "P")


@dataclass(frozen=True)
class Form:
    """A deontic formula. ``reparation`` is set only for repaired O and F."""

    op: str
    body: Inner
    reparation: Inner | None = None

    @property
    def repaired(self) -> bool:
        return self.reparation is not None


@dataclass(frozen=True)
class Rule:
    name: str
    form: Form
    exception_of: str | None = None
    surface_text: str = field(default="", compare=False)


@dataclass(frozen=True)
class Query:
    name: str
    form: Form
    surface_text: str = field(default="", compare=False)


@dataclass(frozen=True)
class ActionDecl:
    name: str
    outputs: tuple[str, ...] = ()
    scope: str | None = None
    guard: Inner | None = None
    implicit: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class IntervalDecl:
    name: str
    begin: str
    end: str | None  # None stands for +inf
    scope: str | None = None
    repeatedly: bool = False


@dataclass(frozen=True)
class CounterDecl:
    name: str
    inc_actions: tuple[str, ...] = ()
    dec_actions: tuple[str, ...] = ()
    reset_actions: tuple[str, ...] = ()
    bound: int = 8
    bound_given: bool = True


@dataclass(frozen=True)
class TemporalActionsDecl:
    points: tuple[str, ...]


@dataclass(frozen=True)
class SpecDocument:
    actions: dict[str, ActionDecl] = field(default_factory=dict)
    intervals: dict[str, IntervalDecl] = field(default_factory=dict)
    counters: dict[str, CounterDecl] = field(default_factory=dict)
    temporal_actions: tuple[TemporalActionsDecl, ...] = ()
    macros: dict[str, Inner] = field(default_factory=dict)
    incompatibilities: tuple[tuple[Inner, Inner], ...] = ()
    rules: tuple[Rule, ...] = ()
    queries: tuple[Query, ...] = ()
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def rule(self, name: str) -> Rule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)

    def query(self, name: str) -> Query:
        for q in self.queries:
            if q.name == name:
                return q
        raise KeyError(name)

    @property
    def points(self) -> tuple[str, ...]:
        return tuple(p for t in self.temporal_actions for p in t.points)
