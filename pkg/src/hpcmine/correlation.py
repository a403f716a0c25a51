"""Case-identifier assignment for job events.

Two strategies: explicit (weakly-connected components of the declared
dependency graph; every chain of connected jobs becomes one case) and
implicit (one case per ACCOUNT-GROUP combination, for jobs whose logical
dependencies only the submitting user knows about).
"""

from __future__ import annotations

import enum
import hashlib
import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .eventlog import CaseEvent, CaseLog
from .observer import LATE_DEPENDENCY, EventKind, JobEvent
from .snapshots import DependencySpec, parse_dependency_spec

logger = logging.getLogger(__name__)

DEFAULT_GROUP = "default"


class CorrelationError(Exception):
    pass


class UnassignedJob(CorrelationError):
    def __init__(self, job_id: str) -> None:
        super().__init__(f"no case assigned for job {job_id}")
        self.job_id = job_id


class Strategy(enum.Enum):
    EXPLICIT = "explicit"
    IMPLICIT = "implicit"


@dataclass
class DependencyGraph:
    """Directed graph over job ids; edge (a, b) means b depends on a."""

    vertices: set[str] = field(default_factory=set)
    edges: set[tuple[str, str]] = field(default_factory=set)
    external: set[str] = field(default_factory=set)
    dropped_edges: list[tuple[str, str]] = field(default_factory=list)

    def add_edge(self, source: str, target: str) -> bool:
        """Add an edge unless it would close a cycle (then drop and report)."""
        if self._reaches(target, source):
            logger.warning(
                "dependency edge %s -> %s would close a cycle; dropped", source, target
            )
            self.dropped_edges.append((source, target))
            return False
        self.vertices.add(source)
        self.vertices.add(target)
        self.edges.add((source, target))
        return True

    def _reaches(self, start: str, goal: str) -> bool:
        if start == goal:
            return True
        successors: dict[str, list[str]] = {}
        for a, b in self.edges:
            successors.setdefault(a, []).append(b)
        stack = [start]
        seen = {start}
        while stack:
            node = stack.pop()
            for nxt in successors.get(node, ()):
                if nxt == goal:
                    return True
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return False


@dataclass(frozen=True)
class CaseAssignment:
    strategy: Strategy
    cases: Mapping[str, str]


def extract_first_dependencies(events: Iterable[JobEvent]) -> dict[str, DependencySpec]:
    """Recover each job's first-sight dependency view from its creation event."""
    first_deps: dict[str, DependencySpec] = {}
    for event in events:
        if event.job_id in first_deps:
            continue
        if event.kind == EventKind.CREATED and event.dependency_raw != LATE_DEPENDENCY:
            first_deps[event.job_id] = parse_dependency_spec(event.dependency_raw)
        else:
            first_deps[event.job_id] = DependencySpec.empty()
    return first_deps


def build_dependency_graph(
    events: Iterable[JobEvent], first_deps: Mapping[str, DependencySpec]
) -> DependencyGraph:
    """Build the declared-dependency DAG over the observed jobs.

    Dependency targets never observed in the window become isolated
    placeholder vertices flagged external; no edges are drawn to them.
    """
    graph = DependencyGraph()
    observed = {event.job_id for event in events}
    graph.vertices |= observed
    for job_id, spec in first_deps.items():
        if job_id not in graph.vertices:
            continue
        for target in spec.targets():
            if target in observed:
                graph.add_edge(target, job_id)
            else:
                graph.vertices.add(target)
                graph.external.add(target)
    return graph


def _component_case_id(component: Iterable[str], hash_ids: bool) -> str:
    def sort_key(job_id: str):
        try:
            return (0, -int(job_id), "")
        except ValueError:
            return (1, 0, job_id)

    ordered = sorted(component, key=sort_key)
    if hash_ids:
        digest = hashlib.sha256(",".join(ordered).encode()).hexdigest()[:16]
        return f"JID{digest}"
    return "JID" + "".join(ordered)


def assign_cases_explicit(graph: DependencyGraph, hash_ids: bool = False) -> CaseAssignment:
    """One case per weakly-connected component of the dependency graph.

    The case id concatenates the component's job ids in descending numeric
    order (a 4-job chain with ids 1-4 yields "JID4321"); non-numeric ids
    sort lexicographically after the numeric ones.
    """
    neighbors: dict[str, list[str]] = {v: [] for v in graph.vertices}
    for a, b in graph.edges:
        neighbors[a].append(b)
        neighbors[b].append(a)
    cases: dict[str, str] = {}
    seen: set[str] = set()
    used: dict[str, int] = {}
    for vertex in sorted(graph.vertices):
        if vertex in seen:
            continue
        component = []
        stack = [vertex]
        seen.add(vertex)
        while stack:
            node = stack.pop()
            component.append(node)
            for nxt in neighbors[node]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        case_id = _component_case_id(component, hash_ids)
        # Concatenated ids can collide across components ({1,4} and {41}
        # both read "JID41"); suffix repeats so distinct components never
        # share a case id.
        count = used.get(case_id, 0) + 1
        used[case_id] = count
        if count > 1:
            case_id = f"{case_id}-{count}"
        for member in component:
            cases[member] = case_id
    return CaseAssignment(Strategy.EXPLICIT, cases)


def assign_cases_implicit(events: Iterable[JobEvent]) -> CaseAssignment:
    """One case per unique ACCOUNT-GROUP combination; empty group reads "default"."""
    cases: dict[str, str] = {}
    for event in events:
        group = event.group or DEFAULT_GROUP
        cases[event.job_id] = f"{event.account}-{group}"
    return CaseAssignment(Strategy.IMPLICIT, cases)


def apply_cases(events: Iterable[JobEvent], assignment: CaseAssignment) -> CaseLog:
    """Attach case ids and produce the sorted event log."""
    case_events = []
    for event in events:
        case_id = assignment.cases.get(event.job_id)
        if case_id is None:
            raise UnassignedJob(event.job_id)
        case_events.append(
            CaseEvent(
                case_id=case_id,
                activity=event.activity,
                lifecycle=event.state,
                event_kind=event.kind,
                timestamp=event.timestamp,
                job_id=event.job_id,
                account=event.account,
                group=event.group,
                dependency_raw=event.dependency_raw,
            )
        )
    case_events.sort(key=lambda e: (e.case_id, e.timestamp, e.job_id))
    return CaseLog(case_events)
