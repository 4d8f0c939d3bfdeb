"""LTL formulas over transition-system state predicates, and the FL translation.

Canonical linear syntax (used by ``flexcheck translate`` and the SMV emitter)::

    true  false  A=JUST_HAPPENED  A=HAPPENING  done(A)  A.output=lbl
    i_opened  bbc>0  !x  G x  F x  (x & y)  (x | y)  (x -> y)  (x U y)  (x R y)

Binary operators are always parenthesised, so printing is unambiguous.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

from . import syntax as fl

JUST_HAPPENED = "JUST_HAPPENED"
HAPPENING = "HAPPENING"
NOT_HAPPENING = "NOT_HAPPENING"
SIGNAL_VALUES = (NOT_HAPPENING, HAPPENING, JUST_HAPPENED)


class Ltl:
    def children(self) -> tuple[Ltl, ...]:
        return ()

    def __str__(self) -> str:
        return format_ltl(self)


class Atom(Ltl):
    """A decidable predicate over one transition-system state."""


@dataclass(frozen=True)
class SignalIs(Atom):
    action: str
    value: str = JUST_HAPPENED


@dataclass(frozen=True)
class OutputIs(Atom):
    action: str
    label: str


@dataclass(frozen=True)
class DoneLatch(Atom):
    action: str


@dataclass(frozen=True)
class Opened(Atom):
    interval: str


@dataclass(frozen=True)
class CounterIs(Atom):
    counter: str
    op: str
    value: int


@dataclass(frozen=True)
class LTrue(Ltl):
    pass


@dataclass(frozen=True)
class LFalse(Ltl):
    pass


@dataclass(frozen=True)
class LNot(Ltl):
    body: Ltl

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class LAnd(Ltl):
    left: Ltl
    right: Ltl

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class LOr(Ltl):
    left: Ltl
    right: Ltl

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class LImplies(Ltl):
    left: Ltl
    right: Ltl

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Until(Ltl):
    left: Ltl
    right: Ltl

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Release(Ltl):
    left: Ltl
    right: Ltl

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Ev(Ltl):
    body: Ltl

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class Alw(Ltl):
    body: Ltl

    def children(self):
        return (self.body,)


TRUE = LTrue()
FALSE = LFalse()


def conj(parts) -> Ltl:
    parts = list(parts)
    if not parts:
        return TRUE
    return reduce(LAnd, parts)


def conjuncts(f: Ltl) -> list[Ltl]:
    """Flatten nested top-level conjunctions."""
    if isinstance(f, LAnd):
        return conjuncts(f.left) + conjuncts(f.right)
    if isinstance(f, LTrue):
        return []
    return [f]


def subformulas(f: Ltl):
    stack = [f]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(n.children())


def atoms(f: Ltl) -> set[Atom]:
    return {n for n in subformulas(f) if isinstance(n, Atom)}


def size(f: Ltl) -> int:
    return sum(1 for _ in subformulas(f))


# printing -------------------------------------------------------------------

_BIN = {LAnd: "&", LOr: "|", LImplies: "->", Until: "U", Release: "R"}


def format_atom(a: Atom) -> str:
    match a:
        case SignalIs(action, value):
            return f"{action}={value}"
        case OutputIs(action, label):
            return f"{action}.output={label}"
        case DoneLatch(action):
            return f"done({action})"
        case Opened(i):
            return f"{i}_opened"
        case CounterIs(c, op, v):
            return f"{c}{op}{v}"
    raise TypeError(a)


def format_ltl(f: Ltl) -> str:
    """Concrete syntax; binary subformulas are parenthesized except at the top."""
    text = _fmt(f)
    return text[1:-1] if type(f) in _BIN else text


def _fmt(f: Ltl) -> str:
    match f:
        case LTrue():
            return "true"
        case LFalse():
            return "false"
        case Atom():
            return format_atom(f)
        case LNot(b):
            inner = _fmt(b)
            if isinstance(b, (SignalIs, OutputIs, CounterIs)):
                inner = f"({inner})"
            return "!" + inner
        case Ev(b):
            return "F " + _fmt(b)
        case Alw(b):
            return "G " + _fmt(b)
    op = _BIN[type(f)]
    return f"({_fmt(f.left)} {op} {_fmt(f.right)})"


# translation ----------------------------------------------------------------


def translate_inner(phi: fl.Inner) -> Ltl:
    """Map an inner FL formula to LTL, homomorphically except for the atoms and ``<>_i``."""
    match phi:
        case fl.Top():
            return TRUE
        case fl.Bottom():
            return FALSE
        case fl.Act(a):
            return SignalIs(a, JUST_HAPPENED)
        case fl.Happening(a):
            return SignalIs(a, HAPPENING)
        case fl.Done(a):
            return DoneLatch(a)
        case fl.Output(a, label):
            # an unset output never satisfies a label test
            return LAnd(OutputIs(a, label), DoneLatch(a))
        case fl.IsOpen(i):
            return Opened(i)
        case fl.Compare(c, op, v):
            return CounterIs(c, op, v)
        case fl.Not(b):
            return LNot(translate_inner(b))
        case fl.And(l, r):
            return LAnd(translate_inner(l), translate_inner(r))
        case fl.Or(l, r):
            return LOr(translate_inner(l), translate_inner(r))
        case fl.Implies(l, r):
            return LImplies(translate_inner(l), translate_inner(r))
        case fl.Eventually(b):
            return Ev(translate_inner(b))
        case fl.EventuallyIn(i, b):
            opened = Opened(i)
            return LImplies(opened, Until(opened, translate_inner(b)))
    raise TypeError(f"cannot translate {phi!r}; expand macros first")


class NotAConstraintError(ValueError):
    """Raised when a permission is passed where a constraint is expected."""


def translate_form(form: fl.Form) -> Ltl:
    phi = translate_inner(form.body)
    match form.op, form.reparation:
        case "O", None:
            return Alw(phi)
        case "F", None:
            return Alw(LNot(phi))
        case "O", rho:
            return Alw(LImplies(LNot(phi), translate_inner(rho)))
        case "F", rho:
            return Alw(LImplies(phi, translate_inner(rho)))
        case "OE", None:
            return Ev(phi)
        case "P", _:
            raise NotAConstraintError("permissions are checks, not constraints")
    raise ValueError(f"malformed form {form!r}")


def translate_rule(rule: fl.Rule) -> Ltl:
    return translate_form(rule.form)


def legal_constraint(rules) -> Ltl:
    """Conjunction of the translations of every non-permission rule."""
    return conj(translate_rule(r) for r in rules if r.form.op != "P")


def violation(form: fl.Form) -> Ltl:
    """State formula that triggers the reparation of a repaired rule."""
    phi = translate_inner(form.body)
    return LNot(phi) if form.op == "O" else phi


def strip_reparation(form: fl.Form) -> fl.Form:
    return fl.Form(form.op, form.body)


# normal forms ---------------------------------------------------------------


def nnf(f: Ltl) -> Ltl:
    """Negation normal form over {true, false, literals, &, |, U, R}."""
    return _nnf(f, False)


def _nnf(f: Ltl, neg: bool) -> Ltl:
    match f:
        case LTrue():
            return FALSE if neg else TRUE
        case LFalse():
            return TRUE if neg else FALSE
        case Atom():
            return LNot(f) if neg else f
        case LNot(b):
            return _nnf(b, not neg)
        case LAnd(l, r):
            cls = LOr if neg else LAnd
            return cls(_nnf(l, neg), _nnf(r, neg))
        case LOr(l, r):
            cls = LAnd if neg else LOr
            return cls(_nnf(l, neg), _nnf(r, neg))
        case LImplies(l, r):
            cls = LAnd if neg else LOr
            return cls(_nnf(l, not neg), _nnf(r, neg))
        case Until(l, r):
            cls = Release if neg else Until
            return cls(_nnf(l, neg), _nnf(r, neg))
        case Release(l, r):
            cls = Until if neg else Release
            return cls(_nnf(l, neg), _nnf(r, neg))
        case Ev(b):
            return Release(FALSE, _nnf(b, True)) if neg else Until(TRUE, _nnf(b, False))
        case Alw(b):
            return Until(TRUE, _nnf(b, True)) if neg else Release(FALSE, _nnf(b, False))
    raise TypeError(f)


def simplify(f: Ltl) -> Ltl:
    """Cheap syntactic cleanup: double negation and boolean constants."""
    match f:
        case LNot(b):
            b = simplify(b)
            if isinstance(b, LNot):
                return b.body
            if isinstance(b, LTrue):
                return FALSE
            if isinstance(b, LFalse):
                return TRUE
            return LNot(b)
        case LAnd(l, r):
            l, r = simplify(l), simplify(r)
            if isinstance(l, LTrue):
                return r
            if isinstance(r, LTrue):
                return l
            if isinstance(l, LFalse) or isinstance(r, LFalse):
                return FALSE
            return LAnd(l, r)
        case LOr(l, r):
            l, r = simplify(l), simplify(r)
            if isinstance(l, LFalse):
                return r
            if isinstance(r, LFalse):
                return l
            if isinstance(l, LTrue) or isinstance(r, LTrue):
                return TRUE
            return LOr(l, r)
        case LImplies(l, r):
            return LImplies(simplify(l), simplify(r))
        case Until(l, r):
            l, r = simplify(l), simplify(r)
            if isinstance(r, (LTrue, LFalse)) or isinstance(l, LFalse):
                return r
            return Until(l, r)
        case Release(l, r):
            l, r = simplify(l), simplify(r)
            if isinstance(r, (LTrue, LFalse)) or isinstance(l, LTrue):
                return r
            return Release(l, r)
        case Ev(b):
            return Ev(simplify(b))
        case Alw(b):
            return Alw(simplify(b))
    return f
