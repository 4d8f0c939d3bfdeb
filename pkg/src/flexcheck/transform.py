"""Document-level rewrites: macro expansion, exception flags and trivial reparations."""

from __future__ import annotations

from dataclasses import replace

from .syntax import (
    And,
    Bottom,
    Form,
    Implies,
    Inner,
    MacroCycleError,
    MacroRef,
    Not,
    Or,
    ExceptionTargetError,
    SpecDocument,
    rebuild,
    walk,
)


def _macro_order(macros: dict[str, Inner]) -> list[str]:
    order: list[str] = []
    state: dict[str, int] = {}

    def visit(name: str, path: list[str]):
        if state.get(name) == 2:
            return
        if state.get(name) == 1:
            cycle = " -> ".join(path[path.index(name):] + [name])
            raise MacroCycleError(f"cyclic macro definition: {cycle}")
        state[name] = 1
        for n in walk(macros[name]):
            if isinstance(n, MacroRef):
                visit(n.macro, path + [name])
        state[name] = 2
        order.append(name)

    for name in macros:
        visit(name, [])
    return order


def expand_macros(doc: SpecDocument) -> SpecDocument:
    """Substitute every macro reference by its (transitively expanded) body."""
    expanded: dict[str, Inner] = {}
    for name in _macro_order(doc.macros):
        expanded[name] = _subst(doc.macros[name], expanded)
    if not any(isinstance(n, MacroRef) for f in _all_formulas(doc) for n in walk(f)):
        return replace(doc, macros=expanded) if expanded != doc.macros else doc

    def form(f: Form) -> Form:
        rep = _subst(f.reparation, expanded) if f.reparation is not None else None
        return Form(f.op, _subst(f.body, expanded), rep)

    actions = {
        k: replace(a, guard=_subst(a.guard, expanded)) if a.guard is not None else a
        for k, a in doc.actions.items()
    }
    return replace(
        doc,
        actions=actions,
        macros=expanded,
        incompatibilities=tuple((_subst(l, expanded), _subst(r, expanded)) for l, r in doc.incompatibilities),
        rules=tuple(replace(r, form=form(r.form)) for r in doc.rules),
        queries=tuple(replace(q, form=form(q.form)) for q in doc.queries),
    )


def _subst(node: Inner, expanded: dict[str, Inner]) -> Inner:
    return rebuild(node, lambda n: expanded[n.macro] if isinstance(n, MacroRef) else n)


def _all_formulas(doc: SpecDocument):
    for a in doc.actions.values():
        if a.guard is not None:
            yield a.guard
    for pair in doc.incompatibilities:
        yield from pair
    for r in list(doc.rules) + list(doc.queries):
        yield r.form.body
        if r.form.reparation is not None:
            yield r.form.reparation


def apply_exceptions(doc: SpecDocument) -> SpecDocument:
    """Fold permissions flagged as exceptions into the prohibitions they relax.

    ``F(phi)`` excepted by ``P(psi)`` becomes ``F(phi & !psi)``; the permission
    itself stays in the document and is still checked.
    """
    by_target: dict[str, list] = {}
    for r in doc.rules:
        if r.exception_of is not None:
            by_target.setdefault(r.exception_of, []).append(r)
    if not by_target:
        return doc
    from .printer import format_form

    rules = []
    names = {r.name: r for r in doc.rules}
    for target in by_target:
        if target not in names or names[target].form.op != "F":
            raise ExceptionTargetError(f"exception target {target!r} is not a prohibition")
    for r in doc.rules:
        perms = by_target.get(r.name)
        if perms:
            body = r.form.body
            for p in perms:
                body = And(body, Not(p.form.body))
            form = Form(r.form.op, body, r.form.reparation)
            note = ", ".join(p.name for p in perms)
            r = replace(r, form=form, surface_text=f"{format_form(form)}  # excepted by {note}")
        rules.append(r)
    return replace(doc, rules=tuple(rules))


def drop_false_reparations(doc: SpecDocument) -> SpecDocument:
    """Rewrite ``O[false](phi)`` to ``O(phi)`` and ``F[false](phi)`` to ``F(phi)``.

    A reparation that can never be met repairs nothing, so the two forms have
    the same models; dropping it keeps the reparation checks from reporting on
    a reparation that is only nominal.
    """
    if not any(isinstance(r.form.reparation, Bottom) for r in doc.rules):
        return doc
    rules = tuple(
        replace(r, form=Form(r.form.op, r.form.body)) if isinstance(r.form.reparation, Bottom) else r for r in doc.rules
    )
    return replace(doc, rules=rules)


def normalize(node: Inner) -> Inner:
    """Eliminate ``|`` and ``->`` in favour of ``!`` and ``&``."""

    def step(n: Inner) -> Inner:
        match n:
            case Or(l, r):
                return Not(And(_neg(l), _neg(r)))
            case Implies(l, r):
                return Not(And(l, _neg(r)))
            case Not(Not(b)):
                return b
        return n

    return rebuild(node, step)


def _neg(n: Inner) -> Inner:
    return n.body if isinstance(n, Not) else Not(n)
