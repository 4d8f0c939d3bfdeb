"""Waveform pictures of lasso traces."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .ltl import HAPPENING, JUST_HAPPENED  # noqa: E402
from .trace import LassoTrace  # noqa: E402

_LEVEL = {JUST_HAPPENED: 1.0, HAPPENING: 0.5}


def _signals(trace: LassoTrace) -> list[str]:
    """Actions that ever leave NOT_HAPPENING, in first-activity order."""
    seen: dict[str, None] = {}
    for d in trace.states:
        for key, value in d.items():
            if value in _LEVEL and key not in seen:
                seen[key] = None
    return list(seen)


def plot_trace(trace: LassoTrace, path: str | Path, title: str = "") -> Path:
    """Draw one row per active action, open interval and counter; save as PNG."""
    states = trace.states
    steps = list(range(len(states) + 1))
    rows = (
        [("signal", a) for a in _signals(trace)]
        + [("interval", i) for i in trace.intervals if any(d[f"{i}_opened"] for d in states)]
        + [("counter", c) for c in trace.counters]
    )
    height = max(1, len(rows))
    fig, axes = plt.subplots(height, 1, sharex=True, figsize=(max(6, 0.35 * len(states) + 2), 0.55 * height + 1), squeeze=False)
    for ax, (kind, name) in zip(axes[:, 0], rows):
        match kind:
            case "signal":
                ys = [_LEVEL.get(d.get(name), 0.0) for d in states]
                ax.set_ylim(-0.2, 1.2)
                ax.set_yticks([])
            case "interval":
                ys = [1.0 if d[f"{name}_opened"] else 0.0 for d in states]
                ax.fill_between(steps, 0, ys + ys[-1:], step="post", alpha=0.3)
                ax.set_ylim(-0.2, 1.2)
                ax.set_yticks([])
                name = f"is_{name}"
            case "counter":
                ys = [d[name] for d in states]
                top = max(ys + [1])
                ax.set_ylim(-0.2, top + 0.2)
                ax.set_yticks(range(top + 1))
        ax.step(steps, ys + ys[-1:], where="post", linewidth=1.5)
        ax.set_ylabel(name, rotation=0, ha="right", va="center", fontsize=8)
        ax.axvspan(trace.loop_start, len(states), color="0.9", zorder=0)
        for side in ("top", "right"):
            ax.spines[side].set_visible(False)
    if not rows:
        axes[0, 0].set_yticks([])
        axes[0, 0].axvspan(trace.loop_start, len(states), color="0.9", zorder=0)
    axes[-1, 0].set_xlabel(f"step (shaded: cycle repeating from step {trace.loop_start})")
    if title:
        fig.suptitle(title, fontsize=10)
    fig.tight_layout()
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out
