"""Rendering of coherence reports as text and as JSON-ready dictionaries."""

from __future__ import annotations

import json
import textwrap

from .coherence import CoherenceReport, Finding
from .trace import render_trace, trace_to_dict

SCHEMA_VERSION = 1


def _indent(text: str, by: int = 4) -> str:
    return textwrap.indent(text, " " * by)


def _summary(report: CoherenceReport) -> str:
    n = len(report.coherence_findings)
    q = len(report.refuted_queries)
    parts = ["coherent" if n == 0 else f"{n} coherence finding{'s' if n != 1 else ''}"]
    if q:
        parts.append(f"{q} refuted quer{'ies' if q != 1 else 'y'}")
    if report.inconclusive:
        parts.append(f"{len(report.inconclusive)} inconclusive")
    return ", ".join(parts)


def _finding_text(f: Finding) -> list[str]:
    head = f"[{f.severity}] {f.kind}"
    if f.rules:
        head += f" ({', '.join(f.rules)})"
    lines = [head, _indent(f.explanation, 2)]
    if f.witness is not None:
        lines += ["  witness:", _indent(render_trace(f.witness))]
    return lines


def render_report(report: CoherenceReport, source: str = "") -> str:
    """Human-readable report: summary line, findings, confirmations, leftovers."""
    lines = [f"{source}: {_summary(report)}" if source else _summary(report)]
    for f in report.findings:
        lines.append("")
        lines += _finding_text(f)
    if report.confirmations:
        lines.append("")
        for c in report.confirmations:
            lines.append(f"confirmed {c.check}: {c.detail}")
            if c.witness is not None and c.check == "joint-satisfiability":
                lines += ["  witness:", _indent(render_trace(c.witness))]
    for i in report.inconclusive:
        lines.append(f"inconclusive {i.check}: {i.reason}")
    for w in report.warnings:
        lines.append(f"warning: {w}")
    return "\n".join(lines) + "\n"


def report_to_dict(report: CoherenceReport, source: str = "") -> dict:
    def witness(t):
        return None if t is None else trace_to_dict(t)

    return {
        "schema_version": SCHEMA_VERSION,
        "source": source,
        "coherent": report.coherent,
        "findings": [
            {
                "kind": f.kind,
                "rules": list(f.rules),
                "severity": f.severity,
                "explanation": f.explanation,
                "witness": witness(f.witness),
            }
            for f in report.findings
        ],
        "confirmations": [{"check": c.check, "detail": c.detail, "witness": witness(c.witness)} for c in report.confirmations],
        "inconclusive": [{"check": i.check, "reason": i.reason} for i in report.inconclusive],
        "warnings": list(report.warnings),
    }


def report_to_json(report: CoherenceReport, source: str = "") -> str:
    return json.dumps(report_to_dict(report, source), indent=2)
