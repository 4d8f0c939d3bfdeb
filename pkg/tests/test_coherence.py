"""Coherence checks on small fixtures.

The background theory has a single initial state in which nothing has
happened, so a bare action atom can never hold at every position. Fixtures
use ``p = <>A`` instead: ``O(p)`` holds when A recurs forever and ``F(p)``
when A never happens, which makes each rule satisfiable on its own.
"""

from __future__ import annotations

import itertools
from dataclasses import replace

import pytest

from flexcheck.checker import exists_trace
from flexcheck.coherence import Analyzer, find_guilty_rules, run_all
from flexcheck.ltl import JUST_HAPPENED, Ev, LAnd, LNot, LOr, SignalIs, translate_form
from flexcheck.parser import parse_form, parse_spec
from oracles import holds

HEAD = """action A
action B
action Q
action R
interval i delimited by actions A - B
macro p = <>A
macro q = <>Q
macro r = <>R
"""


def report(rules: str, **kw):
    return run_all(parse_spec(HEAD + rules), **kw)


def kinds(rep):
    return sorted((f.kind, f.rules) for f in rep.findings)


def test_empty_document_is_coherent():
    rep = run_all(parse_spec(""))
    assert rep.coherent and rep.findings == []


def test_no_rules_confirms_joint_satisfiability():
    rep = report("")
    assert rep.coherent
    assert [c.check for c in rep.confirmations] == ["joint-satisfiability"]


def test_obligation_and_prohibition_of_the_same_thing():
    rep = report("rule o: O(p)\nrule f: F(p)")
    assert kinds(rep) == [("no-legal-behaviour", ("o", "f"))]


def test_guilty_rules_are_minimal():
    doc = parse_spec(HEAD + "rule o: O(p)\nrule f: F(p)\nrule other: O(<>R)")
    core = find_guilty_rules(doc)
    assert core == ["o", "f"]
    an = Analyzer(doc)
    for drop in core:
        rest = [n for n in core if n != drop]
        assert an.exists(an.legal(rest)) is not None


def test_guilty_singleton():
    assert find_guilty_rules(parse_spec("action A\nrule bottom: O(false)")) == ["bottom"]


def test_two_independent_conflicts_give_the_later_core():
    doc = parse_spec(HEAD + "rule o1: O(p)\nrule f1: F(p)\nrule o2: O(q)\nrule f2: F(q)")
    # deletion drops o1 and f1 first while o2, f2 still conflict
    assert find_guilty_rules(doc) == ["o2", "f2"]


def test_contradicting_primary_obligations_with_compatible_reparations():
    rep = report("rule a: O[q](p)\nrule b: O[r](!p)")
    assert ("contradicting-obligations", ("a", "b")) in kinds(rep)
    assert "no-legal-behaviour" not in {k for k, _ in kinds(rep)}


def test_no_repaired_rules_skip_the_primary_check():
    an = Analyzer(parse_spec(HEAD + "rule a: O(p)"))
    assert an.check_primary_obligations() is None


def test_reparation_forbidden_by_another_rule():
    rep = report("rule a: O[q](p)\nrule b: F(q)")
    assert ("forbidden-reparation", ("a", "b")) in kinds(rep)


def test_lone_repaired_rule_is_fine():
    assert report("rule a: O[q](p)").coherent


def test_conflicting_reparations():
    doc = HEAD + "incompatible is_i, !is_i\n" + "rule a: O[is_i](<>Q)\nrule b: O[!is_i](<>R)"
    rep = run_all(parse_spec(doc))
    found = [f for f in rep.findings if f.kind == "conflicting-reparations"]
    assert [f.rules for f in found] == [("a", "b")]
    w = found[0].witness
    q, r = SignalIs("Q", JUST_HAPPENED), SignalIs("R", JUST_HAPPENED)
    both = Ev(LAnd(LNot(Ev(q)), LNot(Ev(r))))
    assert holds(both, w.states, w.loop_start)


def test_equal_reparations_never_conflict():
    rep = report("rule a: O[q](p)\nrule b: O[q](<>B)")
    assert "conflicting-reparations" not in {k for k, _ in kinds(rep)}


def test_reparation_of_an_unviolable_obligation_never_conflicts():
    doc = HEAD + "incompatible is_i, !is_i\n" + "rule a: O[is_i](p)\nrule b: O[!is_i](true)"
    rep = run_all(parse_spec(doc))
    assert "conflicting-reparations" not in {k for k, _ in kinds(rep)}


def test_trivial_permission_is_confirmed():
    rep = report("rule any: P(true)")
    assert rep.coherent
    assert any(c.check == "permission any" for c in rep.confirmations)


def test_permission_witness_exercises_the_permission():
    rep = report("rule may: P(B)")
    (c,) = [c for c in rep.confirmations if c.check == "permission may"]
    assert holds(Ev(SignalIs("B", JUST_HAPPENED)), c.witness.states, c.witness.loop_start)


def test_blocked_permission_names_the_blockers():
    rep = report("rule may: P(B)\nrule never: F(B)\nrule unrelated: O(<>Q)")
    assert kinds(rep) == [("impossible-permission", ("may", "never"))]


def test_exceptions_remove_the_spurious_conflict():
    # B closes i, so B & !is_i is reachable
    flagged = report("rule no: F(B)\nrule yes: P(B & !is_i) exception of no")
    unflagged = report("rule no: F(B)\nrule yes: P(B & !is_i)")
    assert flagged.coherent
    assert kinds(unflagged) == [("impossible-permission", ("yes", "no"))]


def test_queries():
    rep = report("rule o: O(p)\nquery nothing: F(false)\nquery itself: O(p)\nquery never_a: F(A)")
    assert kinds(rep) == [("query-refuted", ("never_a",))]
    confirmed = {c.check for c in rep.confirmations}
    assert {"query nothing", "query itself"} <= confirmed
    refuted = rep.refuted_queries[0]
    assert holds(Ev(SignalIs("A", JUST_HAPPENED)), refuted.witness.states, refuted.witness.loop_start)
    assert rep.coherent  # a refuted query is not a coherence problem


def test_obligation_equals_obligation_repaired_by_false():
    doc = parse_spec(HEAD)
    plain = translate_form(parse_form("O(<>A)", doc))
    repaired = translate_form(parse_form("O[false](<>A)", doc))
    ts = Analyzer(doc).ts
    differ = LOr(LAnd(plain, LNot(repaired)), LAnd(repaired, LNot(plain)))
    assert exists_trace(ts, differ) is None


def test_rule_order_does_not_change_findings():
    rules = ["rule a: O[q](p)", "rule b: F(q)", "rule c: P(B)", "rule d: F(B)", "rule e: O(<>R)"]
    seen = set()
    for order in itertools.permutations(rules):
        rep = report("\n".join(order))
        seen.add(frozenset((f.kind, frozenset(f.rules)) for f in rep.findings))
    assert len(seen) == 1


def test_incompatibility_relation():
    doc = parse_spec(HEAD + "action StudentFine\naction TeacherFine\nincompatible StudentFine, TeacherFine")
    an = Analyzer(doc)
    inner = lambda text: parse_form(f"O({text})", doc).body  # noqa: E731
    assert an.incompatible(inner("StudentFine"), inner("TeacherFine"))
    assert not an.incompatible(inner("A"), inner("A"))
    assert an.incompatible(inner("is_i"), inner("!is_i"))
    assert an.incompatible(inner("A"), inner("B"))  # two actions never complete together
    fast = Analyzer(doc, fast=True)
    assert not fast.incompatible(inner("is_i"), inner("!is_i"))


def test_unrealizable_background():
    rep = run_all(parse_spec("action A\nincompatible !A, !A"))
    assert kinds(rep) == [("unrealizable-background", ())]
    assert any("incompatible with itself" in w for w in rep.warnings)


def test_tiny_budget_is_reported_as_inconclusive():
    rep = report("rule a: O[q](p)\nrule b: F(q)", max_states=2)
    assert rep.inconclusive and not rep.findings


FIXTURES = [
    "rule o: O(p)\nrule f: F(p)",
    "rule a: O[q](p)\nrule b: O[r](!p)",
    "rule a: O[q](p)\nrule b: F(q)",
    "rule may: P(B)\nrule never: F(B)\nrule unrelated: O(<>Q)",
    "incompatible is_i, !is_i\nrule a: O[is_i](<>Q)\nrule b: O[!is_i](<>R)",
    "rule a: O(p)\nrule c: O[q](<>B)\nrule b: F(q)",
]


def _verdicts(rep):
    return sorted((f.kind, f.rules) for f in rep.findings), rep.coherent


@pytest.mark.parametrize("rules", FIXTURES)
def test_obligation_and_false_repaired_obligation_agree_on_every_check(rules):
    plain = report(rules)
    falsified = report(rules.replace("O(p)", "O[false](p)").replace("F(q)", "F[false](q)"))
    assert _verdicts(plain) == _verdicts(falsified)


@pytest.mark.parametrize("rules", FIXTURES)
def test_findings_are_self_contained(rules):
    doc = parse_spec(HEAD + rules)
    for f in run_all(doc).findings:
        alone = replace(doc, rules=tuple(r for r in doc.rules if r.name in f.rules))
        assert f.kind in {g.kind for g in run_all(alone).findings}
