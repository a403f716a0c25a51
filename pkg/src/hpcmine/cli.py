"""Command-line front-end: observe, correlate, discover, stats, simulate.

Each subcommand covers one pipeline stage and communicates through CSV
files, so stages can be run and inspected independently; ``pipeline``
chains observe, correlate, discover, and stats over a replay directory.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import correlation, discovery, eventlog, observer, simulator

SQUEUE_CMD_ENV = "HPCPM_SQUEUE_CMD"


def _err(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def _make_source(args) -> observer.SnapshotSource:
    if args.replay is not None:
        return observer.ReplayDirectorySource(args.replay)
    command = os.environ.get(SQUEUE_CMD_ENV) or args.squeue_cmd
    return observer.CommandSource(command=command, interval=args.interval)


def cmd_observe(args) -> int:
    try:
        source = _make_source(args)
    except FileNotFoundError as exc:
        _err(str(exc))
        return 1
    with observer.CsvEventSink(args.output) as sink:
        try:
            summary = observer.run_observation(
                source, sink, synthetic_complete=not args.no_synthetic_complete
            )
        except observer.ObserverError as exc:
            _err(str(exc))
            return 1
    print(f"snapshots: {summary.snapshots}  events: {summary.events}")
    return 0


def cmd_correlate(args) -> int:
    try:
        events = observer.read_events_csv(args.events_csv)
    except (OSError, observer.SourceFailure, ValueError) as exc:
        _err(str(exc))
        return 1
    first_deps = correlation.extract_first_dependencies(events)
    if args.strategy == "explicit":
        graph = correlation.build_dependency_graph(events, first_deps)
        if not graph.edges and len(graph.vertices) > 1:
            _warn("no explicit interdependencies found: every event belongs to a different case")
        assignment = correlation.assign_cases_explicit(graph, hash_ids=args.hash_case_ids)
    else:
        assignment = correlation.assign_cases_implicit(events)
        if len(set(assignment.cases.values())) == 1 and len(assignment.cases) > 1:
            _warn("single account-group combination: every event belongs to the same case")
    try:
        log = correlation.apply_cases(events, assignment)
    except correlation.UnassignedJob as exc:
        _err(str(exc))
        return 1
    rows = eventlog.write_csv(log, args.output)
    print(f"cases: {len(set(assignment.cases.values()))}  rows: {rows}")
    return 0


def _read_case_log(path):
    try:
        return eventlog.read_csv(path)
    except (OSError, eventlog.EventLogError, ValueError) as exc:
        _err(str(exc))
        return None


def cmd_discover(args) -> int:
    log = _read_case_log(args.cases_csv)
    if log is None:
        return 1
    if args.account:
        log = eventlog.CaseLog([e for e in log.events if e.account == args.account])
    milestone = discovery.MILESTONES[args.milestone]
    traces = discovery.project_case_traces(log, milestone=milestone)
    dfg = discovery.discover_dfg(
        traces, duration_mode=discovery.DurationMode(args.edge_duration)
    )
    parallel = discovery.detect_parallel(dfg)
    dot = discovery.export_dot(dfg, parallel, min_edge_freq=args.min_edge_freq)
    if args.output:
        Path(args.output).write_text(dot)
    else:
        sys.stdout.write(dot)
    if args.stats_out:
        with open(args.stats_out, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["from", "to", "frequency", "mean_seconds", "median_seconds"])
            for (a, b), stats in sorted(dfg.edges.items()):
                if stats.frequency < args.min_edge_freq:
                    continue
                writer.writerow([a, b, stats.frequency, f"{stats.mean:.1f}", f"{stats.median:.1f}"])
    return 0


def cmd_stats(args) -> int:
    log = _read_case_log(args.cases_csv)
    if log is None:
        return 1
    first_deps = eventlog.first_dependencies_from_log(log)
    stats = eventlog.compute_stats(log, first_deps)
    print(eventlog.render_stats(stats))
    return 0


def _load_scenario(name_or_path: str, seed: int | None) -> simulator.ScenarioSpec:
    if Path(name_or_path).exists():
        spec = simulator.load_scenario(Path(name_or_path))
    else:
        spec = simulator.load_bundled_scenario(name_or_path)
    if seed is not None:
        spec = replace(spec, seed=seed)
    return spec


def cmd_simulate(args) -> int:
    try:
        spec = _load_scenario(args.scenario, args.seed)
    except simulator.ScenarioError as exc:
        _err(str(exc))
        return 1
    result = simulator.simulate(spec)
    out = Path(args.output)
    simulator.write_snapshots(result.snapshots, out / "snapshots")
    simulator.write_oracle(result.oracle, out)
    print(
        f"snapshots: {len(result.snapshots)}  oracle events: {len(result.oracle.events)}"
        f"  -> {out}"
    )
    return 0


def cmd_pipeline(args) -> int:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    observe_args = argparse.Namespace(
        replay=args.replay,
        interval=args.interval,
        squeue_cmd=observer.DEFAULT_SQUEUE_COMMAND,
        no_synthetic_complete=args.no_synthetic_complete,
        output=str(out / "events.csv"),
    )
    rc = cmd_observe(observe_args)
    if rc != 0:
        return rc
    correlate_args = argparse.Namespace(
        events_csv=str(out / "events.csv"),
        strategy=args.strategy,
        hash_case_ids=args.hash_case_ids,
        output=str(out / "cases.csv"),
    )
    rc = cmd_correlate(correlate_args)
    if rc != 0:
        return rc
    discover_args = argparse.Namespace(
        cases_csv=str(out / "cases.csv"),
        account=args.account,
        milestone=args.milestone,
        edge_duration=args.edge_duration,
        min_edge_freq=args.min_edge_freq,
        output=str(out / "dfg.dot"),
        stats_out=str(out / "edges.csv"),
    )
    rc = cmd_discover(discover_args)
    if rc != 0:
        return rc
    return cmd_stats(argparse.Namespace(cases_csv=str(out / "cases.csv")))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hpcmine",
        description="Extract and mine workflow event logs from a SLURM-style queue.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("observe", help="extract raw job events from snapshots")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--replay", metavar="DIR", help="replay a snapshot directory")
    mode.add_argument("--live", action="store_true", help="poll the scheduler command")
    p.add_argument(
        "--interval", type=float, default=observer.DEFAULT_INTERVAL_SECONDS,
        help="polling interval in seconds (live mode)",
    )
    p.add_argument(
        "--no-synthetic-complete", action="store_true",
        help="do not emit completion events for jobs that leave the queue",
    )
    p.add_argument(
        "--squeue-cmd", default=observer.DEFAULT_SQUEUE_COMMAND,
        help=f"live polling command (also via ${SQUEUE_CMD_ENV})",
    )
    p.add_argument("-o", "--output", default="events.csv", help="raw events CSV path")
    p.set_defaults(func=cmd_observe)

    p = sub.add_parser("correlate", help="assign case ids to raw events")
    p.add_argument("events_csv", help="raw events CSV from observe")
    p.add_argument("--strategy", choices=["explicit", "implicit"], default="explicit")
    p.add_argument("--hash-case-ids", action="store_true")
    p.add_argument("-o", "--output", default="cases.csv", help="case log CSV path")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("discover", help="discover an annotated directly-follows model")
    p.add_argument("cases_csv", help="case log CSV from correlate")
    p.add_argument("--milestone", choices=sorted(discovery.MILESTONES), default="running")
    p.add_argument(
        "--edge-duration", choices=[m.value for m in discovery.DurationMode],
        default=discovery.DurationMode.START_START.value,
    )
    p.add_argument("--min-edge-freq", type=int, default=1)
    p.add_argument("--account", help="restrict to one account")
    p.add_argument("-o", "--output", help="DOT output path (default: stdout)")
    p.add_argument("--stats-out", help="also write per-edge statistics CSV")
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("stats", help="print event log statistics")
    p.add_argument("cases_csv", help="case log CSV")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("simulate", help="run a synthetic scenario")
    p.add_argument("scenario", help="bundled scenario name or scenario file path")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("-o", "--output", default="sim_out", help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pipeline", help="observe + correlate + discover + stats")
    p.add_argument("--replay", metavar="DIR", required=True)
    p.add_argument("--interval", type=float, default=observer.DEFAULT_INTERVAL_SECONDS)
    p.add_argument("--no-synthetic-complete", action="store_true")
    p.add_argument("--strategy", choices=["explicit", "implicit"], default="explicit")
    p.add_argument("--hash-case-ids", action="store_true")
    p.add_argument("--milestone", choices=sorted(discovery.MILESTONES), default="running")
    p.add_argument(
        "--edge-duration", choices=[m.value for m in discovery.DurationMode],
        default=discovery.DurationMode.START_START.value,
    )
    p.add_argument("--min-edge-freq", type=int, default=1)
    p.add_argument("--account")
    p.add_argument("-o", "--output", default="pipeline_out", help="output directory")
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
