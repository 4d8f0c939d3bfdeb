from __future__ import annotations

import random

import pytest

from conftest import CASES
from flexcheck.parser import parse_form, parse_spec
from flexcheck.printer import format_document, format_form
from flexcheck.syntax import (
    Act,
    Compare,
    And,
    Done,
    DuplicateError,
    Eventually,
    EventuallyIn,
    ExceptionTargetError,
    Form,
    IntervalDecl,
    IsOpen,
    LexError,
    MacroCycleError,
    MacroRef,
    NestingError,
    Not,
    Or,
    Output,
    ParseError,
    RangeError,
    SpecError,
    UndeclaredError,
    walk,
)
from flexcheck.transform import apply_exceptions, expand_macros, normalize

CORPUS = sorted(CASES.glob("*.flx"))


def test_interval_declaration():
    doc = parse_spec("interval student delimited by actions Enroll-Graduate")
    assert doc.intervals["student"] == IntervalDecl("student", "Enroll", "Graduate")


def test_open_ended_interval_without_dash():
    doc = parse_spec("interval graduate delimited by actions Graduate+inf")
    assert doc.intervals["graduate"].end is None


def test_empty_input_gives_empty_document():
    doc = parse_spec("")
    assert (doc.actions, doc.intervals, doc.counters, doc.rules, doc.queries) == ({}, {}, {}, (), ())


def test_comments_and_unicode_operators():
    doc = parse_spec("action A # trailing\naction B\nrule r: O(A → ◇B)\n")
    assert doc.rule("r").form == parse_spec("action A\naction B\nrule r: O(A -> <>B)").rule("r").form


def test_atom_kinds_resolve():
    doc = parse_spec(
        """action A output values {x, y}
        interval i delimited by actions B - C
        counter k increases with action A bound 3
        rule r: O(A & happening(A) & done(A) & A.x & is_i & k >= 2 & <>_i A)"""
    )
    kinds = {type(n) for n in walk(doc.rule("r").form.body)}
    assert {Act, Done, Output, IsOpen, Compare, EventuallyIn}.issubset(kinds)


def test_university_case_study_shape():
    doc = parse_spec((CASES / "university.flx").read_text())
    assert len(doc.rules) == 8 and len(doc.queries) == 1
    rule9 = parse_spec((CASES / "university-rule9.flx").read_text())
    assert len(rule9.rules) == 9


@pytest.mark.parametrize(
    "source, error",
    [
        ("action A $", LexError),
        ("action", ParseError),
        ("rule r: O(B)", UndeclaredError),
        ("action A\naction A", DuplicateError),
        ("action A\ninterval A delimited by actions B - C", DuplicateError),
        ("action A\nmacro m = n\nmacro n = m\nrule r: O(m)", MacroCycleError),
        ("counter k increases with action A bound 2\nrule r: O(k > 3)", RangeError),
        ("action A\nrule r: F(A)\nrule s: O(A) exception of r", ExceptionTargetError),
        ("action A\nrule r: O(A)\nrule s: P(A) exception of r", ExceptionTargetError),
        ("action A\nrule r: O(O(A))", NestingError),
        ("action A\nrule r: P[A](A)", ParseError),
        ("action A\nrule r: OE[A](A)", ParseError),
        ("action A\nquery q: P(A)", ParseError),
        ("interval i delimited by actions A - A", ParseError),
        ("action A output values {x, x}", DuplicateError),
    ],
)
def test_input_errors(source, error):
    with pytest.raises(error):
        parse_spec(source)


def test_errors_carry_positions():
    with pytest.raises(SpecError) as info:
        parse_spec("action A\n\nrule r: O(Missing)")
    assert info.value.line == 3 and info.value.column is not None


def test_counter_without_bound_warns():
    doc = parse_spec("counter k increases with action A")
    assert doc.counters["k"].bound == 8
    assert any("no bound" in w for w in doc.warnings)


def test_surface_text_is_the_source_slice():
    doc = parse_spec("action A\naction B\nrule r:   F[ B ]( A )  ")
    assert doc.rule("r").surface_text == "F[ B ]( A )"


@pytest.mark.parametrize("path", CORPUS, ids=lambda p: p.name)
def test_surface_text_reparses_to_the_same_form(path):
    doc = parse_spec(path.read_text(), expand=False)
    for r in doc.rules:
        assert parse_form(r.surface_text, doc) == r.form


@pytest.mark.parametrize("path", CORPUS, ids=lambda p: p.name)
def test_print_parse_fixpoint(path):
    once = parse_spec(path.read_text(), expand=False)
    text = format_document(once)
    twice = parse_spec(text, expand=False)
    assert twice == once
    assert format_document(twice) == text


# macros ---------------------------------------------------------------------


def test_teacher_macro_expands_to_three_output_tests_with_done():
    doc = parse_spec((CASES / "university.flx").read_text())
    body = doc.rule("r4").form.body
    assert not any(isinstance(n, MacroRef) for n in walk(body))
    outputs = {n.label for n in walk(body) if isinstance(n, Output)}
    assert outputs == {"teacher_c1", "teacher_c2", "teacher_c3"}
    assert Done("Apply") in set(walk(body))


def test_no_macros_is_identity():
    doc = parse_spec("action A\nrule r: O(A)", expand=False)
    assert expand_macros(doc) is doc


def _naive_expand(node, macros):
    # repeated one-level substitution until no reference remains
    from flexcheck.syntax import rebuild

    for _ in range(len(macros) + 1):
        node = rebuild(node, lambda n: macros[n.macro] if isinstance(n, MacroRef) else n)
    return node


def test_nested_macros_match_naive_substitution():
    src = "action A\naction B\nmacro inner = A & !B\nmacro outer = inner | <>inner\nrule r: O(outer -> B)"
    raw = parse_spec(src, expand=False)
    expected = _naive_expand(raw.rule("r").form.body, raw.macros)
    assert expand_macros(raw).rule("r").form.body == expected
    assert not any(isinstance(n, MacroRef) for n in walk(expected))


def test_expand_macros_is_idempotent():
    raw = parse_spec((CASES / "university.flx").read_text(), expand=False)
    once = expand_macros(raw)
    assert expand_macros(once) == once


# exceptions -------------------------------------------------------------------


def test_exception_rewrites_prohibition():
    doc = parse_spec((CASES / "kill-selfdefense.flx").read_text())
    rewritten = apply_exceptions(doc)
    f = rewritten.rule("no_kill").form
    assert f == Form("F", And(Act("Kill"), Not(And(Act("Kill"), IsOpen("self_defense")))))
    assert "excepted by defend" in rewritten.rule("no_kill").surface_text
    assert rewritten.rule("defend") == doc.rule("defend")


def test_no_exception_flags_is_identity():
    doc = parse_spec("action A\nrule r: F(A)")
    assert apply_exceptions(doc) is doc


def test_two_exceptions_in_either_order_are_equivalent():
    from flexcheck.checker import exists_trace
    from flexcheck.compiler import compile
    from flexcheck.ltl import LNot, LOr, LAnd, translate_form

    head = "action A\naction B\naction C\nrule f: F(A)\n"
    one = apply_exceptions(parse_spec(head + "rule p: P(B) exception of f\nrule q: P(C) exception of f"))
    two = apply_exceptions(parse_spec(head + "rule q: P(C) exception of f\nrule p: P(B) exception of f"))
    a, b = translate_form(one.rule("f").form), translate_form(two.rule("f").form)
    ts = compile(one)
    differ = LOr(LAnd(a, LNot(b)), LAnd(b, LNot(a)))
    assert exists_trace(ts, differ) is None


# normalization ------------------------------------------------------------------


def _random_inner(rng, depth):
    if depth == 0:
        return rng.choice([Act("A"), Act("B"), IsOpen("i")])
    match rng.randrange(5):
        case 0:
            return Not(_random_inner(rng, depth - 1))
        case 1:
            return And(_random_inner(rng, depth - 1), _random_inner(rng, depth - 1))
        case 2:
            return Or(_random_inner(rng, depth - 1), _random_inner(rng, depth - 1))
        case 3:
            from flexcheck.syntax import Implies

            return Implies(_random_inner(rng, depth - 1), _random_inner(rng, depth - 1))
        case _:
            return Eventually(_random_inner(rng, depth - 1))


def _truth(node, env):
    from flexcheck.syntax import Implies

    match node:
        case Not(b):
            return not _truth(b, env)
        case And(l, r):
            return _truth(l, env) and _truth(r, env)
        case Or(l, r):
            return _truth(l, env) or _truth(r, env)
        case Implies(l, r):
            return (not _truth(l, env)) or _truth(r, env)
        case Eventually(b):
            return env[("ev", b)]
    return env[node]


def test_normalize_removes_or_and_implies_and_preserves_truth():
    from flexcheck.syntax import Implies

    rng = random.Random(3)
    for _ in range(200):
        node = _random_inner(rng, 3)
        norm = normalize(node)
        assert not any(isinstance(n, (Or, Implies)) for n in walk(norm))
        # treat each eventuality as an opaque proposition keyed on its normalized body
        evs = {n.body for n in walk(node) if isinstance(n, Eventually)}
        for bits in range(8):
            env = {Act("A"): bool(bits & 1), Act("B"): bool(bits & 2), IsOpen("i"): bool(bits & 4)}
            for k, b in enumerate(sorted(evs, key=repr)):
                env[("ev", b)] = env[("ev", normalize(b))] = bool((bits + k) & 1)
            assert _truth(node, env) == _truth(norm, env)


def test_format_form_round_trips():
    doc = parse_spec("action A\naction B\ninterval i delimited by actions A - B")
    for text in ["O(A -> <>_i B)", "F[!is_i](A & B)", "OE(done(A) | happening(B))", "P(!(A & B))"]:
        form = parse_form(text, doc)
        assert parse_form(format_form(form), doc) == form
