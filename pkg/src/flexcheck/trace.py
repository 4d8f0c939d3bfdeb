"""Lasso traces: construction from system states, text timelines and JSON."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .ltl import JUST_HAPPENED


@dataclass(frozen=True)
class StepInfo:
    completed: str | None = None
    label: str | None = None
    changed: tuple[str, ...] = ()
    opened: tuple[str, ...] = ()
    closed: tuple[str, ...] = ()


@dataclass(frozen=True)
class LassoTrace:
    """``prefix`` then ``cycle`` repeated forever; states are plain dicts."""

    prefix: tuple[dict, ...]
    cycle: tuple[dict, ...]
    annotations: tuple[StepInfo, ...] = field(default=(), compare=False)
    intervals: tuple[str, ...] = field(default=(), compare=False)
    counters: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not self.cycle:
            raise ValueError("a lasso needs a non-empty cycle")

    @property
    def states(self) -> list[dict]:
        return list(self.prefix) + list(self.cycle)

    @property
    def loop_start(self) -> int:
        return len(self.prefix)

    def completions(self) -> list[str]:
        """Completed actions in order of occurrence, one lap of the cycle."""
        return [a.completed for a in self.annotations if a.completed]

    def first_index(self, action: str, after: int = -1) -> int | None:
        for i, a in enumerate(self.annotations):
            if i > after and a.completed == action:
                return i
        return None


def build_trace(ts, prefix: list[tuple], cycle: list[tuple]) -> LassoTrace:
    """Wrap raw state tuples of ``ts`` into an annotated lasso."""
    raw = list(prefix) + list(cycle)
    states = [ts.as_dict(s) for s in raw]
    intervals = tuple(v.name[: -len("_opened")] for v in ts.variables if v.kind == "interval")
    counters = tuple(v.name for v in ts.variables if v.kind == "counter")
    signals = list(ts.actions) + list(ts.points)
    hidden = set(ts.phase_vars) | set(ts.points) | {f"done({p})" for p in ts.points}
    notes = []
    for k, d in enumerate(states):
        prev = states[k - 1] if k > 0 else None
        done = next((a for a in signals if d.get(a) == JUST_HAPPENED), None)
        label = d.get(f"{done}.output") if done else None
        changed = tuple(x for x in d if prev is not None and x not in hidden and d[x] != prev[x])
        opened = tuple(i for i in intervals if d[f"{i}_opened"] and (prev is None or not prev[f"{i}_opened"]))
        closed = tuple(i for i in intervals if prev is not None and prev[f"{i}_opened"] and not d[f"{i}_opened"])
        notes.append(StepInfo(done, label, changed, opened, closed))
    n = len(prefix)
    return LassoTrace(tuple(states[:n]), tuple(states[n:]), tuple(notes), intervals, counters)


def render_trace(trace: LassoTrace) -> str:
    """One line per state: step, completed action, interval events, counters."""
    lines = []
    for k, (d, note) in enumerate(zip(trace.states, trace.annotations)):
        if note.completed and note.label is not None:
            event = f"{note.completed} ⇒ {note.label}"
        elif note.completed:
            event = note.completed
        else:
            event = "·"
        extra = []
        if note.opened:
            extra.append("opens " + ", ".join(note.opened))
        if note.closed:
            extra.append("closes " + ", ".join(note.closed))
        open_now = [i for i in trace.intervals if d[f"{i}_opened"]]
        extra.append("open: " + (", ".join(open_now) if open_now else "-"))
        if trace.counters:
            extra.append(" ".join(f"{c}={d[c]}" for c in trace.counters))
        mark = "  ◀ loop" if k == trace.loop_start else ""
        lines.append(f"{k:>4}  {event:<34} {' | '.join(extra)}{mark}")
    lines.append(f"      ↻ repeats from step {trace.loop_start}")
    return "\n".join(lines)


def _plain(v):
    return v if isinstance(v, (bool, int, str)) or v is None else str(v)


def trace_to_dict(trace: LassoTrace) -> dict:
    steps = []
    for k, (d, note) in enumerate(zip(trace.states, trace.annotations)):
        steps.append(
            {
                "step": k,
                "completed": note.completed,
                "output": note.label,
                "changed": list(note.changed),
                "open_intervals": [i for i in trace.intervals if d[f"{i}_opened"]],
                "counters": {c: d[c] for c in trace.counters},
                "state": {key: _plain(val) for key, val in d.items()},
            }
        )
    return {"loop_start": trace.loop_start, "steps": steps}


def trace_from_dict(data: dict) -> LassoTrace:
    """Inverse of ``trace_to_dict`` (annotations are restored from the steps)."""
    states = [dict(s["state"]) for s in data["steps"]]
    notes = [StepInfo(s["completed"], s["output"], tuple(s["changed"])) for s in data["steps"]]
    k = data["loop_start"]
    intervals = tuple(sorted({key[: -len("_opened")] for key in states[0] if key.endswith("_opened")}))
    counters = tuple(data["steps"][0]["counters"])
    return LassoTrace(tuple(states[:k]), tuple(states[k:]), tuple(notes), intervals, counters)


def trace_to_json(trace: LassoTrace) -> str:
    return json.dumps(trace_to_dict(trace), indent=2)
