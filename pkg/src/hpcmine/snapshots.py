"""Parsing of squeue-style queue snapshots into structured job rows.

A snapshot is plain text with six whitespace-separated logical columns per
job: ACCOUNT JOBID DEPENDENCY COMMAND ST GROUP. The COMMAND column may
carry arguments (and thus embedded spaces), so the row is parsed
positionally from both ends.
"""

from __future__ import annotations

import enum
import logging
import re
from dataclasses import dataclass
from datetime import datetime

logger = logging.getLogger(__name__)

UNKNOWN_COMMAND = "<unknown>"


@dataclass(frozen=True)
class JobState:
    """A job's scheduler state, keyed by its compact squeue code."""

    kind: str
    code: str

    @classmethod
    def from_code(cls, code: str) -> "JobState":
        return _STATES_BY_CODE.get(code, cls("other", code))

    @property
    def is_other(self) -> bool:
        return self.kind == "other"

    def __str__(self) -> str:
        return self.code


PENDING = JobState("pending", "PD")
RUNNING = JobState("running", "R")
COMPLETING = JobState("completing", "CG")
COMPLETED = JobState("completed", "CD")
SUSPENDED = JobState("suspended", "S")

_STATES_BY_CODE = {s.code: s for s in (PENDING, RUNNING, COMPLETING, COMPLETED, SUSPENDED)}


class DependencyCondition(enum.Enum):
    AFTER_OK = "afterok"
    AFTER_ANY = "afterany"
    AFTER_NOT_OK = "afternotok"
    AFTER = "after"
    UNKNOWN = "unknown"


_KNOWN_CONDITIONS = {
    c.value: c for c in DependencyCondition if c is not DependencyCondition.UNKNOWN
}

_NO_DEPENDENCY_VALUES = {"", "(null)", "null"}


@dataclass(frozen=True)
class DependencyClause:
    condition: DependencyCondition
    tag: str
    targets: tuple[str, ...]


@dataclass(frozen=True)
class DependencySpec:
    """Parsed DEPENDENCY column value: zero or more condition clauses."""

    clauses: tuple[DependencyClause, ...] = ()

    @classmethod
    def empty(cls) -> "DependencySpec":
        return cls(())

    @property
    def is_empty(self) -> bool:
        return not self.clauses

    def targets(self) -> list[str]:
        out: list[str] = []
        for clause in self.clauses:
            out.extend(clause.targets)
        return out


@dataclass(frozen=True)
class JobRow:
    """One parsed line of a queue snapshot."""

    account: str
    job_id: str
    dependency_raw: str
    command_path: str
    state: JobState
    group: str
    observed_at: datetime


@dataclass(frozen=True)
class MalformedRow:
    """A skipped data line that did not have enough columns."""

    line_number: int
    line: str


def parse_dependency_spec(raw: str) -> DependencySpec:
    """Parse a DEPENDENCY column value.

    Total: any input yields a spec. Unrecognized condition tags degrade to
    UNKNOWN clauses so observation never aborts on scheduler quirks.
    """
    raw = raw.strip()
    if raw.lower() in _NO_DEPENDENCY_VALUES:
        return DependencySpec.empty()
    clauses = []
    for part in re.split(r"[,?]", raw):
        part = part.strip()
        if not part:
            continue
        pieces = part.split(":")
        tag = pieces[0].strip().lower()
        targets = tuple(p.strip() for p in pieces[1:] if p.strip())
        condition = _KNOWN_CONDITIONS.get(tag, DependencyCondition.UNKNOWN)
        clauses.append(DependencyClause(condition, tag, targets))
    return DependencySpec(tuple(clauses))


def normalize_command(command_path: str) -> str:
    """Map an executed command line to an activity name (the file basename).

    Arguments after the first whitespace are discarded, trailing path
    separators are stripped, then the last path component is taken.
    """
    stripped = command_path.strip()
    head = stripped.split()[0] if stripped else ""
    head = head.rstrip("/")
    name = head.rsplit("/", 1)[-1]
    return name or UNKNOWN_COMMAND


def parse_snapshot(
    text: str,
    observed_at: datetime,
    errors: list[MalformedRow] | None = None,
) -> list[JobRow]:
    """Parse one snapshot into job rows, in file order.

    A header line (first token "ACCOUNT") is skipped. Data lines with fewer
    than 6 columns are reported via ``errors`` (and the module logger) and
    skipped; parsing continues.
    """
    rows: list[JobRow] = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        if tokens[0] == "ACCOUNT":
            continue
        if len(tokens) < 6:
            malformed = MalformedRow(line_number, line)
            logger.warning("skipping malformed snapshot row %d: %r", line_number, line)
            if errors is not None:
                errors.append(malformed)
            continue
        rows.append(
            JobRow(
                account=tokens[0],
                job_id=tokens[1],
                dependency_raw=tokens[2],
                command_path=" ".join(tokens[3:-2]),
                state=JobState.from_code(tokens[-2]),
                group=tokens[-1],
                observed_at=observed_at,
            )
        )
    return rows
