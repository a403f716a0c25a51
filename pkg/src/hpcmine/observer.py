"""Queue observation: snapshot acquisition, diffing, and event registration.

Each polling round compares the current snapshot against the retained
per-job state. A job id never seen before yields a creation event; a known
job with a changed state yields a state-change event; an unchanged job
yields nothing. Jobs that leave the queue receive a synthetic completion
event so downstream models get terminal timestamps.
"""

from __future__ import annotations

import csv
import enum
import logging
import shlex
import subprocess
import time as _time
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Iterator, Protocol

from .snapshots import (
    COMPLETED,
    PENDING,
    DependencySpec,
    JobRow,
    JobState,
    normalize_command,
    parse_dependency_spec,
    parse_snapshot,
)
from .timeutil import format_iso, parse_basic, parse_iso

logger = logging.getLogger(__name__)

DEFAULT_SQUEUE_COMMAND = 'squeue -o "%a %i %E %o %t %g"'
DEFAULT_INTERVAL_SECONDS = 30.0

# Marker for jobs first observed past PENDING, whose dependency view is gone.
LATE_DEPENDENCY = "(late)"

EVENTS_CSV_HEADER = [
    "job_id",
    "account",
    "group",
    "activity",
    "state",
    "event_kind",
    "timestamp",
    "dependency_raw",
]


class ObserverError(Exception):
    pass


class InconsistentSnapshot(ObserverError):
    """Rows of one snapshot carry differing observation times."""


class OutOfOrderSnapshot(ObserverError):
    """A snapshot's observation time regressed below its predecessor's."""


class SourceFailure(ObserverError):
    """The snapshot source failed; already-produced events were kept."""


class EventKind(enum.Enum):
    CREATED = "created"
    STATE_CHANGED = "state_changed"
    SYNTHETIC_COMPLETED = "synthetic_completed"


@dataclass(frozen=True)
class JobEvent:
    job_id: str
    account: str
    group: str
    activity: str
    state: JobState
    dependency_raw: str
    kind: EventKind
    timestamp: datetime


@dataclass(frozen=True)
class TrackedJob:
    state: JobState
    first_dependency: DependencySpec
    first_dependency_raw: str
    account: str
    group: str
    activity: str
    first_seen_at: datetime
    last_seen_at: datetime


@dataclass
class ObserverState:
    """Retained per-job view; insertion order is first-seen order."""

    jobs: dict[str, TrackedJob]

    @classmethod
    def empty(cls) -> "ObserverState":
        return cls({})

    def first_dependencies(self) -> dict[str, DependencySpec]:
        return {job_id: t.first_dependency for job_id, t in self.jobs.items()}


def diff_snapshot(
    state: ObserverState, rows: list[JobRow]
) -> tuple[list[JobEvent], ObserverState]:
    """Register events for one snapshot against the retained state.

    The first observation of a job fixes its dependency view: the column is
    only trustworthy while the job is PENDING, so a job first seen in a
    later state gets an empty spec flagged with the "(late)" marker.
    """
    observed = {row.observed_at for row in rows}
    if len(observed) > 1:
        raise InconsistentSnapshot(f"snapshot rows carry {len(observed)} observation times")

    events: list[JobEvent] = []
    jobs = dict(state.jobs)
    for row in rows:
        activity = normalize_command(row.command_path)
        tracked = jobs.get(row.job_id)
        if tracked is None:
            if row.state == PENDING:
                first_dep = parse_dependency_spec(row.dependency_raw)
                dep_raw = row.dependency_raw
            else:
                first_dep = DependencySpec.empty()
                dep_raw = LATE_DEPENDENCY
            jobs[row.job_id] = TrackedJob(
                state=row.state,
                first_dependency=first_dep,
                first_dependency_raw=dep_raw,
                account=row.account,
                group=row.group,
                activity=activity,
                first_seen_at=row.observed_at,
                last_seen_at=row.observed_at,
            )
            events.append(
                JobEvent(
                    job_id=row.job_id,
                    account=row.account,
                    group=row.group,
                    activity=activity,
                    state=row.state,
                    dependency_raw=dep_raw,
                    kind=EventKind.CREATED,
                    timestamp=row.observed_at,
                )
            )
        else:
            if tracked.state != row.state:
                events.append(
                    JobEvent(
                        job_id=row.job_id,
                        account=row.account,
                        group=row.group,
                        activity=tracked.activity,
                        state=row.state,
                        dependency_raw=row.dependency_raw,
                        kind=EventKind.STATE_CHANGED,
                        timestamp=row.observed_at,
                    )
                )
            jobs[row.job_id] = replace(
                tracked, state=row.state, last_seen_at=row.observed_at
            )
    return events, ObserverState(jobs)


def finalize_vanished(
    state: ObserverState, rows: list[JobRow], observed_at: datetime
) -> tuple[list[JobEvent], ObserverState]:
    """Emit synthetic completions for tracked jobs absent from this snapshot.

    Finished jobs stay in the state (marked completed) so they are not
    re-created if a stale row reappears.
    """
    present = {row.job_id for row in rows}
    events: list[JobEvent] = []
    jobs = dict(state.jobs)
    for job_id, tracked in state.jobs.items():
        if job_id in present or tracked.state == COMPLETED:
            continue
        events.append(
            JobEvent(
                job_id=job_id,
                account=tracked.account,
                group=tracked.group,
                activity=tracked.activity,
                state=COMPLETED,
                dependency_raw="(null)",
                kind=EventKind.SYNTHETIC_COMPLETED,
                timestamp=observed_at,
            )
        )
        jobs[job_id] = replace(tracked, state=COMPLETED, last_seen_at=observed_at)
    return events, ObserverState(jobs)


@dataclass(frozen=True)
class Snapshot:
    observed_at: datetime
    text: str


class SnapshotSource(Protocol):
    def __iter__(self) -> Iterator[Snapshot]: ...


class EventSink(Protocol):
    def append(self, event: JobEvent) -> None: ...


class ListSink:
    def __init__(self) -> None:
        self.events: list[JobEvent] = []

    def append(self, event: JobEvent) -> None:
        self.events.append(event)


class CsvEventSink:
    """Streams raw events to CSV as they are produced."""

    def __init__(self, destination) -> None:
        self._own = isinstance(destination, (str, Path))
        self._fh = open(destination, "w", newline="") if self._own else destination
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(EVENTS_CSV_HEADER)
        self.rows = 0

    def append(self, event: JobEvent) -> None:
        self._writer.writerow(
            [
                event.job_id,
                event.account,
                event.group,
                event.activity,
                event.state.code,
                event.kind.value,
                format_iso(event.timestamp),
                event.dependency_raw,
            ]
        )
        self.rows += 1

    def close(self) -> None:
        if self._own:
            self._fh.close()

    def __enter__(self) -> "CsvEventSink":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_events_csv(source) -> list[JobEvent]:
    own = isinstance(source, (str, Path))
    fh = open(source, newline="") if own else source
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != EVENTS_CSV_HEADER:
            raise SourceFailure(f"unexpected events CSV header: {header}")
        events = []
        for row in reader:
            job_id, account, group, activity, state, kind, ts, dep = row
            events.append(
                JobEvent(
                    job_id=job_id,
                    account=account,
                    group=group,
                    activity=activity,
                    state=JobState.from_code(state),
                    dependency_raw=dep,
                    kind=EventKind(kind),
                    timestamp=parse_iso(ts),
                )
            )
        return events
    finally:
        if own:
            fh.close()


SNAPSHOT_FILE_PREFIX = "snapshot_"
SNAPSHOT_FILE_SUFFIX = ".txt"


def snapshot_filename(observed_at: datetime) -> str:
    from .timeutil import format_basic

    return f"{SNAPSHOT_FILE_PREFIX}{format_basic(observed_at)}{SNAPSHOT_FILE_SUFFIX}"


class ReplayDirectorySource:
    """Reads snapshot_<ISO8601-basic-UTC>.txt files from a directory."""

    def __init__(self, directory) -> None:
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise FileNotFoundError(f"replay directory not found: {self.directory}")

    def __iter__(self) -> Iterator[Snapshot]:
        paths = sorted(self.directory.glob(f"{SNAPSHOT_FILE_PREFIX}*{SNAPSHOT_FILE_SUFFIX}"))
        for path in paths:
            stamp = path.name[len(SNAPSHOT_FILE_PREFIX) : -len(SNAPSHOT_FILE_SUFFIX)]
            try:
                observed_at = parse_basic(stamp)
            except ValueError as exc:
                raise SourceFailure(f"bad snapshot filename {path.name}") from exc
            try:
                text = path.read_text()
            except OSError as exc:
                raise SourceFailure(str(exc)) from exc
            yield Snapshot(observed_at, text)


class CommandSource:
    """Runs a squeue-style command periodically and yields its output.

    The runner and clock are injectable so tests never need a cluster.
    Iteration ends when max_snapshots is reached or the runner raises.
    """

    def __init__(
        self,
        command: str = DEFAULT_SQUEUE_COMMAND,
        interval: float = DEFAULT_INTERVAL_SECONDS,
        runner: Callable[[list[str]], str] | None = None,
        clock: Callable[[], datetime] | None = None,
        sleep: Callable[[float], None] = _time.sleep,
        max_snapshots: int | None = None,
    ) -> None:
        self.argv = shlex.split(command)
        self.interval = interval
        self.runner = runner or self._run_subprocess
        self.clock = clock or (lambda: datetime.now(timezone.utc).replace(microsecond=0))
        self.sleep = sleep
        self.max_snapshots = max_snapshots

    @staticmethod
    def _run_subprocess(argv: list[str]) -> str:
        result = subprocess.run(argv, capture_output=True, text=True)
        if result.returncode != 0:
            raise SourceFailure(
                f"{argv[0]} exited with {result.returncode}: {result.stderr.strip()}"
            )
        return result.stdout

    def __iter__(self) -> Iterator[Snapshot]:
        produced = 0
        while self.max_snapshots is None or produced < self.max_snapshots:
            observed_at = self.clock()
            try:
                text = self.runner(self.argv)
            except SourceFailure:
                raise
            except Exception as exc:
                raise SourceFailure(str(exc)) from exc
            yield Snapshot(observed_at, text)
            produced += 1
            if self.max_snapshots is None or produced < self.max_snapshots:
                self.sleep(self.interval)


@dataclass
class ObservationSummary:
    snapshots: int
    events: int
    state: ObserverState


def run_observation(
    source: Iterable[Snapshot],
    sink: EventSink,
    *,
    synthetic_complete: bool = True,
    state: ObserverState | None = None,
) -> ObservationSummary:
    """Drive the observation loop over a snapshot source.

    Snapshots must arrive in nondecreasing observation-time order. Events
    already appended to the sink survive a source failure.
    """
    state = state if state is not None else ObserverState.empty()
    snapshots = 0
    events = 0
    last_at: datetime | None = None
    iterator = iter(source)
    while True:
        try:
            snapshot = next(iterator)
        except StopIteration:
            break
        except KeyboardInterrupt:
            logger.info("observation interrupted; stopping")
            break
        if last_at is not None and snapshot.observed_at < last_at:
            raise OutOfOrderSnapshot(
                f"snapshot at {snapshot.observed_at} after {last_at}"
            )
        last_at = snapshot.observed_at
        rows = parse_snapshot(snapshot.text, snapshot.observed_at)
        new_events, state = diff_snapshot(state, rows)
        if synthetic_complete:
            vanished, state = finalize_vanished(state, rows, snapshot.observed_at)
            new_events.extend(vanished)
        for event in new_events:
            sink.append(event)
        events += len(new_events)
        snapshots += 1
    return ObservationSummary(snapshots=snapshots, events=events, state=state)
