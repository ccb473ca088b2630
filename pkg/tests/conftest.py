from __future__ import annotations

import json
from pathlib import Path

import pytest

from vizbench.datatable import DataTable, load_csv_text
from vizbench.gateway import CompletionRequest, ReplayStore
from vizbench.harness import BenchInstance, IngestResult, ingest_benchmark
from vizbench.prompting import load_default_exemplars, build_prompt

FIXTURES = Path(__file__).parent / "fixtures"
BENCHMARK_DIR = FIXTURES / "benchmark"
GOLDENS_DIR = FIXTURES / "goldens"
LINT_SEEDS_DIR = FIXTURES / "lint_seeds"


@pytest.fixture(scope="session")
def bench() -> IngestResult:
    result = ingest_benchmark(BENCHMARK_DIR)
    assert not result.errors, [e.to_dict() for e in result.errors]
    return result


@pytest.fixture(scope="session")
def bench_by_id(bench) -> dict[str, BenchInstance]:
    return {inst.instance_id: inst for inst in bench.instances}


@pytest.fixture(scope="session")
def canned_responses() -> dict[str, str]:
    return json.loads((FIXTURES / "responses.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def expected_verdicts() -> dict[str, str]:
    return json.loads((FIXTURES / "expected_verdicts.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def exemplars():
    return load_default_exemplars()


STUDENTS_CSV = """Major,Height,Sex,GPA,Enrollment_Date
CS,170,M,3.5,2019-09-01
CS,180,F,3.8,2020-09-01
CS,175,F,3.2,2021-09-01
Math,165,F,3.9,2019-09-01
Math,172,M,3.1,2020-09-01
Physics,168,M,3.4,2019-09-01
Physics,177,F,3.6,2021-09-01
Biology,160,F,3.7,2020-09-01
"""


@pytest.fixture
def students() -> DataTable:
    return load_csv_text(STUDENTS_CSV, name="students")


@pytest.fixture(scope="session")
def published_counts() -> dict:
    return json.loads((FIXTURES / "published_counts.json").read_text(encoding="utf-8"))


def build_synthetic_accuracy_run(strata: dict[str, list[int]]):
    """One instance per chart type plus outcomes hitting given counts.

    strata maps chart type -> [attempted, correct]; incorrect outcomes are
    filed as content mismatches, which Table-style accuracy ignores.
    """
    from vizbench.harness import EvalOutcome

    instances = []
    outcomes = []
    for chart_type, (attempted, correct) in strata.items():
        iid = f"syn-{chart_type}"
        instances.append(
            BenchInstance(
                instance_id=iid,
                table=None,
                queries=[],
                truth=None,
                truth_text="",
                chart_type=chart_type,
                hardness="Easy",
            )
        )
        for qi in range(attempted):
            verdict = "Correct" if qi < correct else "ChartContentMismatch"
            outcomes.append(EvalOutcome(iid, qi, verdict))
    return instances, outcomes


def build_synthetic_error_run(correct: int, counts: dict[str, int]):
    """A single-stratum run with an exact error-verdict histogram."""
    from vizbench.harness import EvalOutcome

    instances = [
        BenchInstance(
            instance_id="syn-errors",
            table=None,
            queries=[],
            truth=None,
            truth_text="",
            chart_type="Bar",
            hardness="Easy",
        )
    ]
    outcomes = []
    qi = 0
    for _ in range(correct):
        outcomes.append(EvalOutcome("syn-errors", qi, "Correct"))
        qi += 1
    for verdict, n in counts.items():
        for _ in range(n):
            outcomes.append(EvalOutcome("syn-errors", qi, verdict))
            qi += 1
    return instances, outcomes


def prime_replay_store(
    store_dir: Path,
    instances: list[BenchInstance],
    strategy: str,
    responses: dict[str, str],
    exemplars=None,
    model_id: str = "gpt-3.5-turbo-16k",
) -> int:
    """Fill a replay store with canned responses for every runnable pair."""
    store = ReplayStore(store_dir)
    primed = 0
    for inst in instances:
        if inst.multi_table:
            continue
        for qi in range(len(inst.queries)):
            text = responses[f"{inst.instance_id}::{qi}"]
            bundle = build_prompt(strategy, inst.table, inst.queries[qi], exemplars=exemplars)
            request = CompletionRequest.build(model_id=model_id, messages=bundle.messages, temperature=0.0)
            store.store(request, text, latency_ms=0)
            primed += 1
    return primed


# ---------------------------------------------------------------------------
# acceptance summary

_ACCEPTANCE_REPORTS: list[tuple[str, str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    _ACCEPTANCE_REPORTS.append((report.nodeid, report.outcome, ""))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_REPORTS:
        return
    tw = terminalreporter
    tw.section("acceptance criteria")
    for nodeid, outcome, _ in _ACCEPTANCE_REPORTS:
        name = nodeid.split("::")[-1]
        status = "PASS" if outcome == "passed" else "FAIL"
        tw.write_line(f"[{status}] {name}")
