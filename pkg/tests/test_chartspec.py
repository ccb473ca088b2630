from __future__ import annotations

import json

import pytest

from vizbench.chartspec import (
    BenchChartType,
    MARKS,
    chart_type_of,
    extract_json_block,
    parse_spec,
    parse_spec_dict,
    serialize_spec,
    spec_to_document,
)

CASE_POINT = {
    "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
    "data": {"url": "data.csv"},
    "transform": [
        {
            "aggregate": [{"op": "count", "field": "Major", "as": "Number of Students"}],
            "groupby": ["Major"],
        }
    ],
    "mark": "point",
    "encoding": {
        "x": {"field": "Major", "type": "nominal"},
        "y": {"field": "Number of Students", "type": "quantitative"},
    },
}


def violation_codes(result):
    return [v.code for v in result.report.violations]


# ---------------------------------------------------------------------------
# parsing


def test_clean_spec_parses_without_violations():
    result = parse_spec_dict(CASE_POINT)
    assert result.report.is_ok
    assert result.report.stage == "ok"
    assert result.spec.mark == "point"
    assert set(result.spec.encoding) == {"x", "y"}
    assert result.spec.transforms[0].groupby == ["Major"]


def test_mark_may_be_an_object():
    doc = dict(CASE_POINT, mark={"type": "point", "tooltip": True})
    result = parse_spec_dict(doc)
    assert result.report.is_ok
    assert result.spec.mark == "point"


def test_average_normalizes_to_mean():
    doc = {
        "mark": "bar",
        "encoding": {
            "x": {"field": "Major", "type": "nominal"},
            "y": {"field": "GPA", "type": "quantitative", "aggregate": "average"},
        },
    }
    result = parse_spec_dict(doc)
    assert result.report.is_ok
    assert result.spec.encoding["y"].aggregate == "mean"


def test_decorative_fielddef_keys_are_accepted():
    doc = {
        "mark": "bar",
        "encoding": {
            "x": {"field": "Major", "type": "nominal", "axis": {"title": "Major"}, "scale": {}},
            "y": {"field": "Height", "type": "quantitative", "title": "Height"},
        },
    }
    result = parse_spec_dict(doc)
    assert result.report.is_ok


def test_decorative_top_level_keys_are_accepted():
    doc = dict(CASE_POINT, title="Students", width=400, height=300)
    result = parse_spec_dict(doc)
    assert result.report.is_ok


def test_unknown_mark_is_a_grammar_error():
    doc = dict(CASE_POINT, mark="boxplot")
    result = parse_spec_dict(doc)
    assert not result.report.is_ok
    assert result.report.stage == "grammar-error"
    assert "unknown-mark" in violation_codes(result)
    assert result.spec is not None  # lenient: AST still built


def test_missing_mark_and_encoding_are_reported_together():
    result = parse_spec_dict({"data": {"url": "data.csv"}})
    codes = violation_codes(result)
    assert "missing-mark" in codes
    assert "missing-encoding" in codes


def test_unsupported_channel_is_reported():
    doc = {
        "mark": "point",
        "encoding": {
            "x": {"field": "A", "type": "quantitative"},
            "size": {"field": "B", "type": "quantitative"},
        },
    }
    result = parse_spec_dict(doc)
    assert "unsupported-construct" in violation_codes(result)
    assert any(v.json_path == "/encoding/size" for v in result.report.violations)


def test_unknown_aggregate_op_is_reported():
    doc = {
        "mark": "bar",
        "encoding": {
            "x": {"field": "Major", "type": "nominal"},
            "y": {"field": "GPA", "type": "quantitative", "aggregate": "median"},
        },
    }
    assert "unknown-aggregate-op" in violation_codes(parse_spec_dict(doc))


def test_unknown_timeunit_is_reported():
    doc = {
        "mark": "line",
        "transform": [{"timeUnit": "weekday", "field": "When", "as": "Day"}],
        "encoding": {
            "x": {"field": "Day", "type": "temporal"},
            "y": {"field": "Amount", "type": "quantitative"},
        },
    }
    assert "unknown-timeunit" in violation_codes(parse_spec_dict(doc))


def test_sort_entry_in_transform_is_reported_but_kept():
    doc = {
        "mark": "bar",
        "transform": [{"sort": [{"field": "Total", "order": "descending"}]}],
        "encoding": {
            "x": {"field": "Major", "type": "nominal"},
            "y": {"field": "Total", "type": "quantitative"},
        },
    }
    result = parse_spec_dict(doc)
    assert "sort-in-transform" in violation_codes(result)
    # entry survives as an unknown transform so the linter can repair it
    from vizbench.chartspec import UnknownTransform

    assert any(isinstance(t, UnknownTransform) for t in result.spec.transforms)


def test_composite_specs_are_rejected():
    doc = {"layer": [CASE_POINT]}
    result = parse_spec_dict(doc)
    assert any("composite" in v.message for v in result.report.violations)


# ---------------------------------------------------------------------------
# json extraction


def test_plain_json_text_parses():
    result = parse_spec(json.dumps(CASE_POINT))
    assert result.report.is_ok


def test_fenced_json_with_prose_parses():
    text = "Sure, here you go:\n```json\n" + json.dumps(CASE_POINT, indent=2) + "\n```\nEnjoy!"
    result = parse_spec(text)
    assert result.report.is_ok
    assert result.spec.mark == "point"


def test_unfenced_json_with_prose_parses():
    text = "Here is the spec: " + json.dumps(CASE_POINT) + " as requested."
    assert parse_spec(text).report.is_ok


def test_braces_inside_strings_do_not_break_extraction():
    doc = dict(CASE_POINT)
    doc = json.loads(json.dumps(doc))
    doc["transform"] = [{"filter": "datum.Name == 'a{b}c'"}] + doc["transform"]
    text = "prefix " + json.dumps(doc) + " suffix"
    block, offset = extract_json_block(text)
    assert json.loads(block) == doc
    assert offset == len("prefix ")


def test_prose_without_json_is_a_json_error():
    result = parse_spec("I am unable to answer that question.")
    assert result.spec is None
    assert result.report.stage == "json-error"


def test_truncated_json_is_a_json_error():
    result = parse_spec('{"mark": "bar", "encoding": {"x": {"field": "A"')
    assert result.spec is None
    assert result.report.stage == "json-error"


def test_top_level_array_is_a_json_error():
    assert parse_spec("[1, 2, 3]").spec is None


# ---------------------------------------------------------------------------
# chart types


@pytest.mark.parametrize(
    "mark,with_color,expected",
    [
        ("bar", False, BenchChartType.BAR),
        ("bar", True, BenchChartType.STACKED_BAR),
        ("arc", False, BenchChartType.PIE),
        ("arc", True, BenchChartType.PIE),
        ("line", False, BenchChartType.LINE),
        ("line", True, BenchChartType.GROUPING_LINE),
        ("point", False, BenchChartType.SCATTER),
        ("point", True, BenchChartType.GROUPING_SCATTER),
    ],
)
def test_chart_type_mapping(mark, with_color, expected):
    encoding = {
        "x": {"field": "A", "type": "nominal"},
        "y": {"field": "B", "type": "quantitative"},
    }
    if mark == "arc":
        encoding = {"theta": {"field": "B", "type": "quantitative"}}
    if with_color:
        encoding["color"] = {"field": "C", "type": "nominal"}
    result = parse_spec_dict({"mark": mark, "encoding": encoding})
    assert result.report.is_ok
    assert chart_type_of(result.spec) == expected


def test_every_mark_has_a_chart_type():
    for mark in MARKS:
        for with_color in (False, True):
            encoding = {"x": {"field": "A", "type": "nominal"}}
            if with_color:
                encoding["color"] = {"field": "C", "type": "nominal"}
            result = parse_spec_dict({"mark": mark, "encoding": encoding})
            assert chart_type_of(result.spec) in BenchChartType.ALL


# ---------------------------------------------------------------------------
# serialization


def test_round_trip_preserves_the_ast():
    first = parse_spec_dict(CASE_POINT)
    text = serialize_spec(first.spec)
    second = parse_spec(text)
    assert second.report.is_ok
    assert second.spec == first.spec


def test_serialized_top_level_key_order_is_canonical():
    doc = spec_to_document(parse_spec_dict(CASE_POINT).spec)
    keys = list(doc)
    assert keys == ["$schema", "data", "transform", "mark", "encoding"]


def test_serialization_is_deterministic():
    spec = parse_spec_dict(CASE_POINT).spec
    assert serialize_spec(spec) == serialize_spec(spec)


def test_round_trip_covers_sort_filter_bin_and_timeunit():
    doc = {
        "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
        "data": {"url": "data.csv"},
        "transform": [
            {"filter": {"field": "Status", "equal": "Open"}},
            {"filter": "datum.Price > 100"},
            {"bin": {"maxbins": 10}, "field": "Age", "as": "Age Bin"},
            {"timeUnit": "yearmonth", "field": "When", "as": "Month"},
            {
                "aggregate": [{"op": "sum", "field": "Price", "as": "Total"}],
                "groupby": ["Age Bin", "Month"],
            },
        ],
        "mark": "bar",
        "encoding": {
            "x": {"field": "Age Bin", "type": "nominal", "sort": {"field": "Total", "order": "descending"}},
            "y": {"field": "Total", "type": "quantitative"},
        },
    }
    first = parse_spec_dict(doc)
    assert first.report.is_ok, [v.message for v in first.report.violations]
    second = parse_spec(serialize_spec(first.spec))
    assert second.report.is_ok
    assert second.spec == first.spec
