"""Coherence analysis of a normative specification.

Every check reduces to trace existence over the compiled background theory.
Findings name the rules involved; confirmations carry the witness that shows
a check passed. A check that runs out of budget is recorded as inconclusive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import syntax as fl
from .checker import DEFAULT_MAX_STATES, StateBudgetExceeded, exists_trace
from .compiler import compile
from .ltl import (
    TRUE,
    Alw,
    CounterIs,
    Ev,
    LAnd,
    LNot,
    Ltl,
    Release,
    Until,
    conj,
    strip_reparation,
    subformulas,
    translate_form,
    translate_inner,
    violation,
)
from .printer import format_form, format_inner
from .scenario import blocked_reparation
from .trace import LassoTrace
from .transform import apply_exceptions, drop_false_reparations

# witness enrichment is optional, so it gets a small budget of its own
ENRICH_BUDGET = 100_000

KINDS = (
    "unrealizable-background",
    "no-legal-behaviour",
    "contradicting-obligations",
    "forbidden-reparation",
    "conflicting-reparations",
    "impossible-permission",
    "query-refuted",
)


@dataclass(frozen=True)
class Finding:
    kind: str
    rules: tuple[str, ...]
    explanation: str
    witness: LassoTrace | None = None
    severity: str = "error"  # error | warning


@dataclass(frozen=True)
class Confirmation:
    check: str
    detail: str
    witness: LassoTrace | None = None


@dataclass(frozen=True)
class Inconclusive:
    check: str
    reason: str


@dataclass
class CoherenceReport:
    findings: list[Finding] = field(default_factory=list)
    confirmations: list[Confirmation] = field(default_factory=list)
    inconclusive: list[Inconclusive] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def coherence_findings(self) -> list[Finding]:
        return [f for f in self.findings if f.kind != "query-refuted"]

    @property
    def refuted_queries(self) -> list[Finding]:
        return [f for f in self.findings if f.kind == "query-refuted"]

    @property
    def coherent(self) -> bool:
        return not self.coherence_findings


def _is_state_formula(f: Ltl) -> bool:
    return not any(isinstance(n, (Alw, Ev, Until, Release)) for n in subformulas(f))


class Analyzer:
    """Shared state for the checks on one document: compiled system and translations."""

    def __init__(self, doc: fl.SpecDocument, *, max_states: int = DEFAULT_MAX_STATES, fast: bool = False):
        self.source = doc
        self.doc = drop_false_reparations(apply_exceptions(doc))
        self.max_states = max_states
        self.fast = fast
        self.ts = compile(self.doc)
        self.rules = {r.name: r for r in self.doc.rules}
        self.constraints = [r for r in self.doc.rules if r.form.op != "P"]
        self.permissions = [r for r in self.doc.rules if r.form.op == "P"]
        self._tr = {r.name: translate_form(r.form) for r in self.constraints}

    # primitives --------------------------------------------------------------

    def exists(self, formula: Ltl) -> LassoTrace | None:
        return exists_trace(self.ts, formula, max_states=self.max_states)

    def tr(self, name: str) -> Ltl:
        return self._tr[name]

    def legal(self, names=None) -> Ltl:
        names = [r.name for r in self.constraints] if names is None else names
        return conj(self.tr(n) for n in names)

    def text(self, name: str) -> str:
        r = self.rules[name]
        return r.surface_text or format_form(r.form)

    def incompatible(self, phi: fl.Inner, psi: fl.Inner) -> bool:
        """Declared incompatible, or (unless fast) never true together on any run."""
        for a, b in self.doc.incompatibilities:
            if (a, b) in ((phi, psi), (psi, phi)):
                return True
        if self.fast:
            return False
        return self.exists(Ev(LAnd(translate_inner(phi), translate_inner(psi)))) is None

    def guilty(self, names: list[str], extra: Ltl = TRUE, tr=None) -> list[str]:
        """Deletion-based minimal subset of ``names`` that admits no trace with ``extra``."""
        tr = tr or self.tr
        core = list(names)
        for n in list(core):
            rest = [m for m in core if m != n]
            if self.exists(conj([*(tr(m) for m in rest), extra])) is None:
                core = rest
        return core

    # checks --------------------------------------------------------------------

    def check_background_realizable(self) -> Finding | None:
        if self.exists(TRUE) is None:
            return Finding(
                "unrealizable-background",
                (),
                "the background theory admits no infinite run",
            )
        return None

    def check_joint_satisfiability(self, report: CoherenceReport) -> bool:
        names = [r.name for r in self.constraints]
        phi = self.legal()
        witness = self.exists(phi)
        if witness is None:
            core = self.guilty(names)
            listing = "; ".join(f"{n}: {self.text(n)}" for n in core)
            report.findings.append(
                Finding("no-legal-behaviour", tuple(core), f"no run satisfies all rules; minimal conflicting set: {listing}")
            )
            return False
        witness = self._informative(phi, witness)
        report.confirmations.append(Confirmation("joint-satisfiability", "a legal behaviour exists", witness))
        return True

    def _informative(self, phi: Ltl, witness: LassoTrace) -> LassoTrace:
        """Prefer a legal witness that also exercises violations and their reparations,
        with every counter settling back to zero again and again.
        """
        goal = phi
        budget = min(self.max_states, ENRICH_BUDGET)
        wishes = [Ev(violation(r.form)) for r in self.constraints if r.form.repaired]
        if wishes:
            wishes += [Alw(Ev(CounterIs(c, "=", 0))) for c in self.doc.counters]
        for wish in wishes:
            attempt = LAnd(goal, wish)
            try:
                better = exists_trace(self.ts, attempt, max_states=budget)
            except StateBudgetExceeded:
                continue
            if better is not None:
                goal, witness = attempt, better
        return witness

    def check_primary_obligations(self) -> Finding | None:
        if not any(r.form.repaired for r in self.constraints):
            return None
        stripped = {r.name: translate_form(strip_reparation(r.form)) for r in self.constraints}
        names = [r.name for r in self.constraints]
        if self.exists(conj(stripped.values())) is not None:
            return None
        core = self.guilty(names, tr=stripped.__getitem__)
        return Finding(
            "contradicting-obligations",
            tuple(core),
            "the primary obligations of "
            + ", ".join(core)
            + " cannot be met together; only their reparations make the rules jointly satisfiable",
        )

    def check_forbidden_reparations(self) -> list[Finding]:
        findings = []
        for r in self.constraints:
            if not r.form.repaired:
                continue
            rho = translate_inner(r.form.reparation)
            trig = violation(r.form)
            for other in self.constraints:
                if other.name == r.name:
                    continue
                found = self._forbidden_pair(r, other, rho, trig)
                if found is not None:
                    findings.append(found)
        return findings

    def _forbidden_pair(self, r: fl.Rule, other: fl.Rule, rho: Ltl, trig: Ltl) -> Finding | None:
        pair = (r.name, other.name)
        rep = format_inner(r.form.reparation)
        if other.form.op == "F":
            if self.exists(LAnd(self.tr(other.name), Ev(rho))) is None:
                return Finding(
                    "forbidden-reparation",
                    pair,
                    f"the reparation {rep} of {r.name} ({self.text(r.name)}) can never occur "
                    f"without breaking {other.name} ({self.text(other.name)})",
                )
            return None
        if other.form.op != "O" or other.form.repaired:
            return None
        if self.incompatible(r.form.reparation, other.form.body):
            return Finding(
                "forbidden-reparation",
                pair,
                f"the reparation {rep} of {r.name} is incompatible with the obligation "
                f"{other.name} ({self.text(other.name)})",
            )
        if self.fast or not _is_state_formula(trig):
            return None
        return self._blocked(r, other, rho, trig)

    def _invariants(self, exclude: set[str]) -> list[Ltl]:
        out = []
        for r in self.constraints:
            f = self.tr(r.name)
            if r.name not in exclude and isinstance(f, Alw) and _is_state_formula(f.body):
                out.append(f.body)
        return out

    def _blocked(self, r: fl.Rule, other: fl.Rule, rho: Ltl, trig: Ltl) -> Finding | None:
        constraint = self.tr(other.name)
        invariants = self._invariants({r.name, other.name})
        severity = "error"
        witness = None
        for attempt in ([invariants] if invariants else []) + [[]]:
            ts = self.ts.with_changes(
                incompatibilities=self.ts.incompatibilities + tuple((LNot(i), TRUE) for i in attempt)
            )
            ts = ts.restrict(ts.cone([trig, rho, constraint]))
            witness = blocked_reparation(ts, trig, rho, constraint, max_states=self.max_states)
            if witness is not None:
                break
            severity = "warning"
        if witness is None:
            return None
        explanation = (
            f"the reparation of {r.name} ({self.text(r.name)}) contradicts {other.name} "
            f"({self.text(other.name)}): some runs reach a point where the reparation can no "
            f"longer be honoured while obeying {other.name}"
        )
        if severity == "warning":
            explanation += "; such runs already break another rule that has no reparation"
        return Finding("forbidden-reparation", (r.name, other.name), explanation, witness, severity)

    def check_conflicting_reparations(self) -> list[Finding]:
        repaired = [r for r in self.constraints if r.form.repaired]
        findings = []
        for i, r in enumerate(repaired):
            for other in repaired[i + 1 :]:
                if not self.incompatible(r.form.reparation, other.form.reparation):
                    continue
                witness = self.exists(Ev(LAnd(violation(r.form), violation(other.form))))
                if witness is None:
                    continue
                findings.append(
                    Finding(
                        "conflicting-reparations",
                        (r.name, other.name),
                        f"{r.name} and {other.name} can be violated at once, but their reparations "
                        f"{format_inner(r.form.reparation)} and {format_inner(other.form.reparation)} "
                        "are incompatible",
                        witness,
                    )
                )
        return findings

    def check_permission(self, p: fl.Rule, report: CoherenceReport):
        goal = Ev(translate_inner(p.form.body))
        witness = self.exists(LAnd(self.legal(), goal))
        if witness is not None:
            report.confirmations.append(Confirmation(f"permission {p.name}", f"{self.text(p.name)} can be exercised", witness))
            return
        blockers = self.guilty([r.name for r in self.constraints], extra=goal)
        why = ", ".join(blockers) if blockers else "the background theory"
        report.findings.append(
            Finding(
                "impossible-permission",
                (p.name, *blockers),
                f"permission {p.name} ({self.text(p.name)}) can never be exercised legally; blocked by {why}",
            )
        )

    def answer_query(self, q: fl.Query) -> tuple[bool, LassoTrace | None]:
        witness = self.exists(LAnd(self.legal(), LNot(translate_form(q.form))))
        return witness is None, witness


def run_all(doc: fl.SpecDocument, *, max_states: int = DEFAULT_MAX_STATES, fast: bool = False) -> CoherenceReport:
    """Run every check in order and collect the results."""
    an = Analyzer(doc, max_states=max_states, fast=fast)
    report = CoherenceReport(warnings=list(doc.warnings) + list(an.ts.warnings))

    def guarded(check: str, fn):
        try:
            return fn()
        except StateBudgetExceeded as e:
            report.inconclusive.append(Inconclusive(check, str(e)))
            return None

    bg = guarded("background-realizability", an.check_background_realizable)
    if bg is not None:
        report.findings.append(bg)
        return report
    legal = guarded("joint-satisfiability", lambda: an.check_joint_satisfiability(report))
    f = guarded("primary-obligations", an.check_primary_obligations)
    if f is not None:
        report.findings.append(f)
    report.findings += guarded("forbidden-reparations", an.check_forbidden_reparations) or []
    report.findings += guarded("conflicting-reparations", an.check_conflicting_reparations) or []
    if legal is False:
        for p in an.permissions:
            report.inconclusive.append(Inconclusive(f"permission {p.name}", "skipped: no legal behaviour exists"))
        for q in an.doc.queries:
            report.inconclusive.append(Inconclusive(f"query {q.name}", "skipped: no legal behaviour exists"))
        return report
    for p in an.permissions:
        guarded(f"permission {p.name}", lambda p=p: an.check_permission(p, report))
    for q in an.doc.queries:
        result = guarded(f"query {q.name}", lambda q=q: an.answer_query(q))
        if result is None:
            continue
        holds, witness = result
        if holds:
            report.confirmations.append(Confirmation(f"query {q.name}", f"{format_form(q.form)} holds in every legal run"))
        else:
            report.findings.append(
                Finding("query-refuted", (q.name,), f"{format_form(q.form)} does not hold: some legal run violates it", witness)
            )
    return report


def find_guilty_rules(doc: fl.SpecDocument, names=None, **kw) -> list[str]:
    an = Analyzer(doc, **kw)
    names = names or [r.name for r in an.constraints]
    return an.guilty(list(names))


def answer_query(doc: fl.SpecDocument, name: str, **kw) -> tuple[bool, LassoTrace | None]:
    an = Analyzer(doc, **kw)
    return an.answer_query(an.doc.query(name))
