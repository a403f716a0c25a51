from datetime import datetime, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hpcmine import simulator
from hpcmine.snapshots import (
    PENDING,
    DependencyCondition,
    DependencySpec,
    JobState,
    MalformedRow,
    normalize_command,
    parse_dependency_spec,
    parse_snapshot,
)

T0 = datetime(2022, 12, 7, 11, 51, 45, tzinfo=timezone.utc)


class TestJobState:
    @pytest.mark.parametrize(
        "code,kind",
        [("PD", "pending"), ("R", "running"), ("CG", "completing"),
         ("CD", "completed"), ("S", "suspended")],
    )
    def test_named_codes_round_trip(self, code, kind):
        state = JobState.from_code(code)
        assert state.kind == kind
        assert state.code == code

    def test_unknown_code_is_other(self):
        state = JobState.from_code("F")
        assert state.is_other
        assert state.code == "F"


class TestParseSnapshot:
    def test_dependent_pending_row(self):
        rows = parse_snapshot("acc1 4 afterok:2:3 /home/u/merge.sh PD proj9", T0)
        assert len(rows) == 1
        row = rows[0]
        assert row.account == "acc1"
        assert row.job_id == "4"
        assert row.dependency_raw == "afterok:2:3"
        assert row.command_path == "/home/u/merge.sh"
        assert row.state == PENDING
        assert row.group == "proj9"
        assert row.observed_at == T0

    def test_empty_text(self):
        assert parse_snapshot("", T0) == []

    def test_header_skipped(self):
        text = "ACCOUNT JOBID DEPENDENCY COMMAND ST GROUP\na 1 (null) /x.sh R g\n"
        rows = parse_snapshot(text, T0)
        assert [r.job_id for r in rows] == ["1"]

    def test_command_with_arguments_spans_middle_columns(self):
        rows = parse_snapshot("a 1 (null) /opt/run.sh --n 5 R g", T0)
        assert rows[0].command_path == "/opt/run.sh --n 5"
        assert rows[0].state.code == "R"
        assert rows[0].group == "g"

    def test_malformed_row_reported_and_skipped(self):
        errors = []
        text = "a 1 (null) /x.sh R g\nbroken line\na 2 (null) /y.sh PD g\n"
        rows = parse_snapshot(text, T0, errors=errors)
        assert [r.job_id for r in rows] == ["1", "2"]
        assert errors == [MalformedRow(2, "broken line")]

    def test_order_preserved(self):
        text = "\n".join(f"a {i} (null) /x.sh PD g" for i in range(20))
        rows = parse_snapshot(text, T0)
        assert [r.job_id for r in rows] == [str(i) for i in range(20)]

    def test_round_trip_against_simulator_snapshot(self):
        # A wide batch scenario: every job pending in the first snapshot.
        jobs = tuple(
            simulator.SimJob(
                job_id=str(i),
                account=f"acc{i % 7}",
                group=f"g{i % 3}",
                command_path=f"/home/u/script_{i}.sh",
                duration=60,
            )
            for i in range(1, 201)
        )
        result = simulator.simulate(simulator.ScenarioSpec(jobs=jobs))
        at, text = result.snapshots[0]
        rows = parse_snapshot(text, at)
        assert len(rows) == 200
        for job, row in zip(jobs, rows):
            assert (row.account, row.job_id, row.command_path, row.group) == (
                job.account, job.job_id, job.command_path, job.group
            )
            assert row.state == PENDING


class TestParseDependencySpec:
    @pytest.mark.parametrize("raw", ["(null)", "NULL", "null", "", "  (NULL)  "])
    def test_no_dependency_values(self, raw):
        assert parse_dependency_spec(raw).is_empty

    def test_single_clause(self):
        spec = parse_dependency_spec("afterok:2:3")
        assert len(spec.clauses) == 1
        clause = spec.clauses[0]
        assert clause.condition == DependencyCondition.AFTER_OK
        assert clause.targets == ("2", "3")

    def test_multiple_clauses(self):
        spec = parse_dependency_spec("afterany:10,afterok:11:12")
        assert [c.condition for c in spec.clauses] == [
            DependencyCondition.AFTER_ANY,
            DependencyCondition.AFTER_OK,
        ]
        assert spec.targets() == ["10", "11", "12"]

    def test_question_mark_separator(self):
        spec = parse_dependency_spec("afterok:1?afterany:2")
        assert len(spec.clauses) == 2

    def test_bare_clause_is_unknown_without_targets(self):
        spec = parse_dependency_spec("singleton")
        assert spec.clauses[0].condition == DependencyCondition.UNKNOWN
        assert spec.clauses[0].tag == "singleton"
        assert spec.clauses[0].targets == ()

    def test_unknown_tag_still_extracts_targets(self):
        spec = parse_dependency_spec("aftercorr:7:8")
        assert spec.clauses[0].condition == DependencyCondition.UNKNOWN
        assert spec.clauses[0].targets == ("7", "8")

    @given(st.text(max_size=80))
    def test_total_on_arbitrary_input(self, raw):
        spec = parse_dependency_spec(raw)
        assert isinstance(spec, DependencySpec)
        assert all(t for c in spec.clauses for t in c.targets)


class TestNormalizeCommand:
    @pytest.mark.parametrize(
        "path,expected",
        [
            ("/home/u/project/jobscript_0000.sh", "jobscript_0000.sh"),
            ("merge.sh", "merge.sh"),
            ("/opt/run.sh --n 5", "run.sh"),
            ("/opt/dir/", "dir"),
            ("////", "<unknown>"),
        ],
    )
    def test_examples(self, path, expected):
        assert normalize_command(path) == expected

    @given(st.text(max_size=120))
    def test_idempotent(self, path):
        once = normalize_command(path)
        assert normalize_command(once) == once
