"""Directly-follows model discovery with frequency and performance annotation.

Each case yields a trace of activity instances ordered by the time the job
first reached a milestone state (by default: running, i.e. scheduler wait
is excluded). Adjacent trace entries become model edges carrying counts
and duration statistics; edges present in both directions mark activity
pairs that can execute in either order.
"""

from __future__ import annotations

import enum
import logging
import statistics
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime

from .eventlog import CaseLog
from .observer import EventKind
from .snapshots import COMPLETED, PENDING, RUNNING, JobState

logger = logging.getLogger(__name__)

# How far along its lifecycle a state is; "other" states never satisfy a
# milestone.
_STATE_RANK = {
    "pending": 0,
    "running": 1,
    "suspended": 1,
    "completing": 2,
    "completed": 3,
    "other": -1,
}

MILESTONES = {"pending": PENDING, "running": RUNNING, "completed": COMPLETED}


class DurationMode(enum.Enum):
    START_START = "start-start"
    COMPLETION_START = "completion-start"


@dataclass(frozen=True)
class TraceStep:
    activity: str
    at: datetime
    completed_at: datetime | None = None


@dataclass(frozen=True)
class Trace:
    case_id: str
    steps: tuple[TraceStep, ...]


@dataclass
class EdgeStats:
    durations: list[float] = field(default_factory=list)

    @property
    def frequency(self) -> int:
        return len(self.durations)

    @property
    def mean(self) -> float:
        return statistics.fmean(self.durations)

    @property
    def median(self) -> float:
        return statistics.median(self.durations)


@dataclass
class Dfg:
    activities: Counter = field(default_factory=Counter)
    edges: dict[tuple[str, str], EdgeStats] = field(default_factory=dict)
    start_activities: Counter = field(default_factory=Counter)
    end_activities: Counter = field(default_factory=Counter)

    @property
    def is_empty(self) -> bool:
        return not self.activities


@dataclass(frozen=True)
class ParallelRelation:
    pairs: frozenset[tuple[str, str]]


def project_case_traces(log: CaseLog, milestone: JobState = RUNNING) -> list[Trace]:
    """Project the log onto one trace per case.

    Each job contributes one entry, anchored at its first event at-or-after
    the milestone state; jobs that never reach the milestone are dropped
    (counted in a warning). Entries sort by timestamp, ties by job id.
    """
    threshold = _STATE_RANK[milestone.kind]
    per_case: dict[str, dict[str, list]] = {}
    case_order: list[str] = []
    dropped = 0
    for event in log.events:
        jobs = per_case.get(event.case_id)
        if jobs is None:
            jobs = per_case[event.case_id] = {}
            case_order.append(event.case_id)
        jobs.setdefault(event.job_id, []).append(event)

    traces: list[Trace] = []
    for case_id in sorted(case_order):
        entries = []
        for job_id, events in per_case[case_id].items():
            events.sort(key=lambda e: e.timestamp)
            anchor = next(
                (e for e in events if _STATE_RANK[e.lifecycle.kind] >= threshold), None
            )
            if anchor is None:
                dropped += 1
                continue
            completed = next(
                (
                    e.timestamp
                    for e in events
                    if e.event_kind == EventKind.SYNTHETIC_COMPLETED
                    or e.lifecycle == COMPLETED
                ),
                None,
            )
            entries.append((anchor.timestamp, job_id, anchor.activity, completed))
        entries.sort(key=lambda item: (item[0], item[1]))
        traces.append(
            Trace(
                case_id,
                tuple(TraceStep(activity, at, completed) for at, _, activity, completed in entries),
            )
        )
    if dropped:
        logger.warning("%d job(s) never reached milestone %s; dropped", dropped, milestone.kind)
    return traces


def discover_dfg(
    traces: list[Trace], duration_mode: DurationMode = DurationMode.START_START
) -> Dfg:
    """Count directly-follows edges and collect per-edge durations.

    Durations are successor anchor time minus predecessor anchor time
    (start-start) or minus predecessor completion time (completion-start;
    falls back to the anchor when no completion was observed, and clamps
    at zero since a successor may start before the predecessor vanishes).
    """
    dfg = Dfg()
    for trace in traces:
        steps = trace.steps
        if not steps:
            continue
        dfg.start_activities[steps[0].activity] += 1
        dfg.end_activities[steps[-1].activity] += 1
        for step in steps:
            dfg.activities[step.activity] += 1
        for prev, nxt in zip(steps, steps[1:]):
            if duration_mode == DurationMode.COMPLETION_START and prev.completed_at is not None:
                anchor = prev.completed_at
            else:
                anchor = prev.at
            duration = max(0.0, (nxt.at - anchor).total_seconds())
            dfg.edges.setdefault((prev.activity, nxt.activity), EdgeStats()).durations.append(
                duration
            )
    return dfg


def merge_dfgs(a: Dfg, b: Dfg) -> Dfg:
    """Pointwise merge: frequency sums and duration-list concatenation."""
    merged = Dfg(
        activities=a.activities + b.activities,
        start_activities=a.start_activities + b.start_activities,
        end_activities=a.end_activities + b.end_activities,
    )
    for source in (a, b):
        for edge, stats in source.edges.items():
            merged.edges.setdefault(edge, EdgeStats()).durations.extend(stats.durations)
    return merged


def detect_parallel(dfg: Dfg) -> ParallelRelation:
    """Unordered activity pairs observed in both directions."""
    pairs = set()
    for a, b in dfg.edges:
        if a != b and (b, a) in dfg.edges:
            pairs.add((min(a, b), max(a, b)))
    return ParallelRelation(frozenset(pairs))


def humanize_duration(seconds: float) -> str:
    total = int(round(seconds))
    hours, rem = divmod(total, 3600)
    minutes, secs = divmod(rem, 60)
    if hours:
        return f"{hours}h{minutes}m{secs}s"
    if minutes:
        return f"{minutes}m{secs}s"
    return f"{secs}s"


def export_dot(
    dfg: Dfg,
    parallel: ParallelRelation | None = None,
    *,
    min_edge_freq: int = 1,
) -> str:
    """Render the model as deterministic DOT text.

    Edge labels read "frequency / mean / median"; pen width scales with the
    mean duration so bottleneck arcs dominate visually. Edges of a parallel
    pair are drawn dashed.
    """
    lines = ["digraph dfg {"]
    if not dfg.is_empty:
        lines.append("  rankdir=LR;")
        lines.append('  node [shape=box, fontname="Helvetica"];')
        for name in sorted(dfg.activities):
            lines.append(f'  "{name}" [label="{name} ({dfg.activities[name]})"];')
        edges = {
            edge: stats
            for edge, stats in dfg.edges.items()
            if stats.frequency >= min_edge_freq
        }
        max_mean = max((stats.mean for stats in edges.values()), default=0.0)
        parallel_pairs = parallel.pairs if parallel is not None else frozenset()
        for (a, b), stats in sorted(edges.items()):
            label = (
                f"{stats.frequency} / {humanize_duration(stats.mean)}"
                f" / {humanize_duration(stats.median)}"
            )
            penwidth = 1.0 + (4.0 * stats.mean / max_mean if max_mean > 0 else 0.0)
            attrs = [f'label="{label}"', f'penwidth={penwidth:.2f}']
            if (min(a, b), max(a, b)) in parallel_pairs:
                attrs.append("style=dashed")
            lines.append(f'  "{a}" -> "{b}" [{", ".join(attrs)}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
