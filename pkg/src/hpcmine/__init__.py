"""Process-mining toolkit for SLURM-style scheduler queues.

Observes a queue through periodic snapshots, extracts a job event log by
diffing, assigns case identifiers via explicit dependency chains or
account-group keys, and discovers frequency/performance-annotated
directly-follows models.
"""

from .snapshots import (
    DependencyCondition,
    DependencyClause,
    DependencySpec,
    JobRow,
    JobState,
    normalize_command,
    parse_dependency_spec,
    parse_snapshot,
)
from .observer import (
    EventKind,
    JobEvent,
    ObserverState,
    ReplayDirectorySource,
    diff_snapshot,
    finalize_vanished,
    run_observation,
)
from .correlation import (
    CaseAssignment,
    DependencyGraph,
    Strategy,
    apply_cases,
    assign_cases_explicit,
    assign_cases_implicit,
    build_dependency_graph,
)
from .eventlog import CaseEvent, CaseLog, LogStats, compute_stats, read_csv, render_stats, write_csv
from .discovery import (
    Dfg,
    DurationMode,
    ParallelRelation,
    detect_parallel,
    discover_dfg,
    export_dot,
    project_case_traces,
)
from .simulator import (
    Oracle,
    ScenarioSpec,
    SimJob,
    SubmitMode,
    load_bundled_scenario,
    load_scenario,
    simulate,
)

__version__ = "0.1.0"
