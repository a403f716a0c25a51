"""Case-annotated event log persistence and summary statistics."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Mapping

from .observer import LATE_DEPENDENCY, EventKind
from .snapshots import DependencySpec, JobState, parse_dependency_spec
from .timeutil import format_iso, parse_iso

CSV_HEADER = [
    "case_id",
    "activity",
    "lifecycle",
    "event_kind",
    "timestamp",
    "job_id",
    "account",
    "group",
    "dependency_raw",
]


class EventLogError(Exception):
    pass


class SchemaMismatch(EventLogError):
    def __init__(self, header) -> None:
        super().__init__(f"unexpected CSV header: {header}")
        self.header = header


class BadTimestamp(EventLogError):
    def __init__(self, row_number: int, value: str) -> None:
        super().__init__(f"bad timestamp {value!r} in row {row_number}")
        self.row_number = row_number
        self.value = value


@dataclass(frozen=True)
class CaseEvent:
    case_id: str
    activity: str
    lifecycle: JobState
    event_kind: EventKind
    timestamp: datetime
    job_id: str
    account: str
    group: str
    dependency_raw: str


@dataclass
class CaseLog:
    events: list[CaseEvent]

    def __len__(self) -> int:
        return len(self.events)

    def accounts(self) -> set[str]:
        return {e.account for e in self.events}

    def job_ids(self) -> set[str]:
        return {e.job_id for e in self.events}


def write_csv(log: CaseLog, destination) -> int:
    """Write the log; returns the number of data rows written."""
    own = isinstance(destination, (str, Path))
    fh = open(destination, "w", newline="") if own else destination
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for event in log.events:
            writer.writerow(
                [
                    event.case_id,
                    event.activity,
                    event.lifecycle.code,
                    event.event_kind.value,
                    format_iso(event.timestamp),
                    event.job_id,
                    event.account,
                    event.group,
                    event.dependency_raw,
                ]
            )
        return len(log.events)
    finally:
        if own:
            fh.close()


def read_csv(source) -> CaseLog:
    own = isinstance(source, (str, Path))
    fh = open(source, newline="") if own else source
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise SchemaMismatch(header)
        events = []
        for row_number, row in enumerate(reader, start=2):
            if len(row) != len(CSV_HEADER):
                raise SchemaMismatch(row)
            case_id, activity, lifecycle, kind, ts, job_id, account, group, dep = row
            try:
                timestamp = parse_iso(ts)
            except ValueError:
                raise BadTimestamp(row_number, ts) from None
            events.append(
                CaseEvent(
                    case_id=case_id,
                    activity=activity,
                    lifecycle=JobState.from_code(lifecycle),
                    event_kind=EventKind(kind),
                    timestamp=timestamp,
                    job_id=job_id,
                    account=account,
                    group=group,
                    dependency_raw=dep,
                )
            )
        return CaseLog(events)
    finally:
        if own:
            fh.close()


@dataclass(frozen=True)
class LogStats:
    num_events: int
    num_unique_jobs: int
    num_accounts: int
    pct_accounts_explicit: float
    pct_jobs_explicit: float
    window: tuple[datetime, datetime] | None


def first_dependencies_from_log(log: CaseLog) -> dict[str, DependencySpec]:
    """Recover first-sight dependency specs from the creation rows of a log."""
    first_deps: dict[str, DependencySpec] = {}
    for event in log.events:
        if event.job_id in first_deps:
            continue
        if (
            event.event_kind == EventKind.CREATED
            and event.dependency_raw != LATE_DEPENDENCY
        ):
            first_deps[event.job_id] = parse_dependency_spec(event.dependency_raw)
        else:
            first_deps[event.job_id] = DependencySpec.empty()
    return first_deps


def compute_stats(log: CaseLog, first_deps: Mapping[str, DependencySpec]) -> LogStats:
    """Summarize the log: counts, explicit-dependency fractions, time window.

    CPU/RAM averages are out of scope: the six observed queue columns carry
    no resource fields.
    """
    if not log.events:
        return LogStats(0, 0, 0, 0.0, 0.0, None)
    jobs = log.job_ids()
    accounts = log.accounts()
    job_account = {e.job_id: e.account for e in log.events}
    explicit_jobs = {
        j for j in jobs if not first_deps.get(j, DependencySpec.empty()).is_empty
    }
    explicit_accounts = {job_account[j] for j in explicit_jobs}
    timestamps = [e.timestamp for e in log.events]
    return LogStats(
        num_events=len(log.events),
        num_unique_jobs=len(jobs),
        num_accounts=len(accounts),
        pct_accounts_explicit=len(explicit_accounts) / len(accounts),
        pct_jobs_explicit=len(explicit_jobs) / len(jobs),
        window=(min(timestamps), max(timestamps)),
    )


_STATS_LABELS = [
    "Number of events",
    "Number of unique submitted jobs",
    "Number of accounts",
    "Percentage of accounts who submitted jobs with explicit interdependencies",
    "Percentage of jobs defined with explicit interdependencies",
    "Observation window",
]


def render_stats(stats: LogStats) -> str:
    """Render the statistics as an aligned two-column text block."""
    if stats.window is None:
        window = "-"
    else:
        window = f"{format_iso(stats.window[0])} .. {format_iso(stats.window[1])}"
    values = [
        str(stats.num_events),
        str(stats.num_unique_jobs),
        str(stats.num_accounts),
        f"{stats.pct_accounts_explicit * 100:.2f}%",
        f"{stats.pct_jobs_explicit * 100:.2f}%",
        window,
    ]
    width = max(len(label) for label in _STATS_LABELS)
    lines = [
        f"{label.ljust(width)}  {value}" for label, value in zip(_STATS_LABELS, values)
    ]
    return "\n".join(lines)
