from __future__ import annotations

import json
from pathlib import Path

import pytest

from vizbench.chartspec import parse_spec, serialize_spec
from vizbench.datatable import load_csv_text
from vizbench.engine import evaluate, tuplesets_equal
from vizbench.linter import (
    FIXABLE_RULES,
    RULE_SEVERITY,
    UnfixableFinding,
    error_count,
    fix,
    lint,
    warning_count,
)

from conftest import LINT_SEEDS_DIR

ALL_RULES = sorted(RULE_SEVERITY)  # includes invalid-json


def seed_path(rule_id: str) -> Path:
    return LINT_SEEDS_DIR / f"{rule_id}.json"


def seed_query(rule_id: str) -> str | None:
    q = LINT_SEEDS_DIR / f"{rule_id}.query.txt"
    return q.read_text(encoding="utf-8").strip() if q.exists() else None


def lint_seed(rule_id: str):
    text = seed_path(rule_id).read_text(encoding="utf-8")
    return text, lint(text, query=seed_query(rule_id))


# ---------------------------------------------------------------------------
# detection


def test_the_seed_corpus_covers_every_rule():
    seeded = {p.stem for p in LINT_SEEDS_DIR.glob("*.json")}
    assert seeded == set(ALL_RULES)


@pytest.mark.parametrize("rule_id", ALL_RULES)
def test_each_seed_triggers_exactly_its_own_rule(rule_id):
    _, findings = lint_seed(rule_id)
    assert [f.rule_id for f in findings] == [rule_id]
    assert findings[0].severity == RULE_SEVERITY[rule_id]


def test_clean_exemplars_produce_zero_findings(exemplars):
    for ex in exemplars:
        findings = lint(ex.spec_text, query=ex.query)
        assert findings == [], (ex.chart_type, [f.to_dict() for f in findings])


def test_fixture_truths_produce_zero_findings(bench):
    for inst in bench.instances:
        text = (inst.root / "truth.vl.json").read_text(encoding="utf-8")
        findings = lint(text, table=inst.table)
        assert findings == [], (inst.instance_id, [f.to_dict() for f in findings])


def test_severity_split():
    assert RULE_SEVERITY["R1-schema-version"] == "warning"
    assert RULE_SEVERITY["R2-transform-order"] == "warning"
    assert RULE_SEVERITY["R3-missing-filter-hint"] == "warning"
    assert RULE_SEVERITY["R4-missing-groupby"] == "error"
    assert RULE_SEVERITY["R5-sort-in-transform"] == "error"
    for rule in ALL_RULES:
        if rule.startswith("E-") or rule == "invalid-json":
            assert RULE_SEVERITY[rule] == "error", rule


def test_error_and_warning_counters():
    _, r1 = lint_seed("R1-schema-version")
    assert warning_count(r1) == 1 and error_count(r1) == 0
    _, r5 = lint_seed("R5-sort-in-transform")
    assert error_count(r5) == 1 and warning_count(r5) == 0


def test_table_kind_beats_the_name_heuristic():
    # a field named like a date but holding plain integers should not trip
    # the bin confusion rule when the table is available
    doc = {
        "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
        "data": {"url": "data.csv"},
        "transform": [{"bin": True, "field": "Year_Count", "as": "B"}],
        "mark": "bar",
        "encoding": {
            "x": {"field": "B", "type": "nominal"},
            "y": {"field": "Year_Count", "type": "quantitative", "aggregate": "count"},
        },
    }
    table = load_csv_text("Year_Count,Other\n3,a\n7,b\n", name="t")
    with_table = lint(json.dumps(doc), table=table)
    assert "E-bin-timeunit-confusion" not in [f.rule_id for f in with_table]
    without_table = lint(json.dumps(doc))
    assert "E-bin-timeunit-confusion" in [f.rule_id for f in without_table]


def test_filter_hint_needs_a_query():
    text = seed_path("R3-missing-filter-hint").read_text(encoding="utf-8")
    assert lint(text) == []
    assert lint(text, query="Show all prices and ratings.") == []


# ---------------------------------------------------------------------------
# fixes


FIXABLE_SEEDS = sorted(FIXABLE_RULES)


@pytest.mark.parametrize("rule_id", FIXABLE_SEEDS)
def test_fix_clears_the_finding_and_is_idempotent(rule_id):
    text, findings = lint_seed(rule_id)
    spec = parse_spec(text).spec
    fixed, applied = fix(spec, findings)
    assert applied == [rule_id]

    # re-lint the serialized output: the rule is gone and nothing new appears
    fixed_text = serialize_spec(fixed)
    refindings = lint(fixed_text, query=seed_query(rule_id))
    assert refindings == [], [f.to_dict() for f in refindings]

    # applying fix to its own output changes nothing
    again, applied_again = fix(fixed, refindings)
    assert applied_again == []
    assert serialize_spec(again) == fixed_text


def test_unfixable_rules_are_skipped_not_guessed():
    text, findings = lint_seed("E-bin-timeunit-confusion")
    spec = parse_spec(text).spec
    fixed, applied = fix(spec, findings)
    assert applied == []
    assert serialize_spec(fixed) == serialize_spec(spec)


def test_r4_fix_infers_groupby_from_the_encoding():
    text, findings = lint_seed("R4-missing-groupby")
    spec = parse_spec(text).spec
    fixed, _ = fix(spec, findings)
    agg = fixed.transforms[0]
    assert agg.groupby == ["Director"]

    table = load_csv_text(
        "Title,Director,Gross\nA,Smith,100.5\nB,Jones,200.25\nC,Smith,150.75\n", name="movies"
    )
    ts = evaluate(fixed, table)
    assert set(map(tuple, ts.rows)) == {("Jones", 200.25), ("Smith", 251.25)}


def test_r4_fix_refuses_when_nothing_can_group():
    doc = {
        "transform": [{"aggregate": [{"op": "count", "field": "A", "as": "n"}]}],
        "mark": "bar",
        "encoding": {"y": {"field": "n", "type": "quantitative"}},
    }
    result = parse_spec(json.dumps(doc))
    findings = [f for f in lint(result.spec) if f.rule_id == "R4-missing-groupby"]
    with pytest.raises(UnfixableFinding):
        fix(result.spec, findings)


def test_r5_fix_preserves_the_tuple_content():
    text, findings = lint_seed("R5-sort-in-transform")
    spec = parse_spec(text).spec
    fixed, _ = fix(spec, findings)

    table = load_csv_text(
        "Title,Director,Gross\nA,Smith,100.5\nB,Jones,200.25\nC,Smith,150.75\nD,Lee,80.0\n",
        name="movies",
    )
    # the sort entry only orders marks; dropping it must not change the data
    reference_doc = json.loads(seed_path("R5-sort-in-transform").read_text(encoding="utf-8"))
    reference_doc["transform"] = reference_doc["transform"][:1]
    reference = parse_spec(json.dumps(reference_doc)).spec
    assert tuplesets_equal(evaluate(fixed, table), evaluate(reference, table))

    # and the ordering request survives as an encoding sort
    assert fixed.encoding["y"].sort is not None or fixed.encoding["x"].sort is not None


def test_r5_fix_refuses_without_an_encoding():
    doc = {"transform": [{"sort": [{"field": "X"}]}], "mark": "bar", "encoding": {}}
    result = parse_spec(json.dumps(doc))
    findings = [f for f in lint(result.spec) if f.rule_id == "R5-sort-in-transform"]
    assert findings
    with pytest.raises(UnfixableFinding):
        fix(result.spec, findings)


def test_weekday_fix_evaluates_like_day():
    text, findings = lint_seed("E-invalid-timeunit-param")
    spec = parse_spec(text).spec
    fixed, applied = fix(spec, findings)
    assert applied == ["E-invalid-timeunit-param"]
    assert fixed.transforms[0].unit == "day"

    table = load_csv_text(
        "Note_ID,Date_Of_Notes\n1,1577836800\n2,1577923200\n3,1577836800\n", name="notes"
    )
    ts = evaluate(fixed, table)
    assert sum(ts.column("Number of Notes")) == 3


def test_weekday_fix_covers_encoding_level_timeunits():
    doc = {
        "mark": "line",
        "encoding": {
            "x": {"field": "When", "type": "temporal", "timeUnit": "weekday"},
            "y": {"aggregate": "count", "type": "quantitative"},
        },
    }
    result = parse_spec(json.dumps(doc))
    findings = [f for f in lint(result.spec) if f.rule_id == "E-invalid-timeunit-param"]
    assert findings
    fixed, applied = fix(result.spec, findings)
    assert applied == ["E-invalid-timeunit-param"]
    assert fixed.encoding["x"].time_unit == "day"
