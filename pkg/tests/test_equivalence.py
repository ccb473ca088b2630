from __future__ import annotations

import io
import json

import pytest

from vizbench.chartspec import parse_spec_dict
from vizbench.datatable import Column, DataTable, load_csv_text
from vizbench.equivalence import (
    DecodeError,
    EvaluationFailed,
    MissingDataAnnotations,
    extract_values_from_svg,
    match_pixels,
    match_svg_json,
    swap_xy_spec,
)


def spec_of(doc: dict):
    result = parse_spec_dict(doc)
    assert result.report.is_ok, [v.message for v in result.report.violations]
    return result.spec


# ---------------------------------------------------------------------------
# reflexivity / symmetry / flip on the fixture benchmark


def test_every_fixture_truth_matches_itself(bench):
    for inst in bench.instances:
        verdict = match_svg_json(inst.truth, inst.truth, inst.table)
        assert verdict.overall, inst.instance_id


def test_matching_is_symmetric_for_evaluable_pairs(bench):
    # same-table instance pairs would mostly be type mismatches; symmetry is
    # about the boolean outcome being independent of argument order
    for inst in bench.instances:
        flipped = swap_xy_spec(inst.truth)
        ab = match_svg_json(flipped, inst.truth, inst.table)
        ba = match_svg_json(inst.truth, flipped, inst.table)
        assert ab.overall == ba.overall, inst.instance_id
        assert ab.content_match == ba.content_match, inst.instance_id


def test_swapping_x_and_y_still_matches(bench):
    for inst in bench.instances:
        verdict = match_svg_json(swap_xy_spec(inst.truth), inst.truth, inst.table)
        assert verdict.content_match, inst.instance_id
        assert verdict.type_match, inst.instance_id


def test_color_never_participates_in_the_swap():
    table = load_csv_text("K,V,G\na,1.5,g1\nb,2.5,g2\n", name="t")
    truth = spec_of(
        {
            "mark": "point",
            "encoding": {
                "x": {"field": "K", "type": "nominal"},
                "y": {"field": "V", "type": "quantitative"},
                "color": {"field": "G", "type": "nominal"},
            },
        }
    )
    # candidate routes the color field through x instead
    candidate = spec_of(
        {
            "mark": "point",
            "encoding": {
                "x": {"field": "G", "type": "nominal"},
                "y": {"field": "V", "type": "quantitative"},
                "color": {"field": "K", "type": "nominal"},
            },
        }
    )
    verdict = match_svg_json(candidate, truth, table)
    assert not verdict.content_match


def test_alias_names_do_not_matter():
    table = load_csv_text("K,V\na,1.5\na,2.5\nb,4.0\n", name="t")
    truth = spec_of(
        {
            "mark": "bar",
            "transform": [
                {"aggregate": [{"op": "sum", "field": "V", "as": "Total"}], "groupby": ["K"]}
            ],
            "encoding": {
                "x": {"field": "K", "type": "nominal"},
                "y": {"field": "Total", "type": "quantitative"},
            },
        }
    )
    candidate = spec_of(
        {
            "mark": "bar",
            "transform": [
                {"aggregate": [{"op": "sum", "field": "V", "as": "s"}], "groupby": ["K"]}
            ],
            "encoding": {
                "x": {"field": "K", "type": "nominal"},
                "y": {"field": "s", "type": "quantitative"},
            },
        }
    )
    assert match_svg_json(candidate, truth, table).overall


def test_extra_channel_fails_content():
    table = load_csv_text("K,V,G\na,1.5,g1\nb,2.5,g2\n", name="t")
    truth = spec_of(
        {
            "mark": "point",
            "encoding": {
                "x": {"field": "K", "type": "nominal"},
                "y": {"field": "V", "type": "quantitative"},
            },
        }
    )
    candidate = spec_of(
        {
            "mark": "point",
            "encoding": {
                "x": {"field": "K", "type": "nominal"},
                "y": {"field": "V", "type": "quantitative"},
                "color": {"field": "G", "type": "nominal"},
            },
        }
    )
    verdict = match_svg_json(candidate, truth, table)
    assert not verdict.type_match  # point+color is a different bench type
    assert not verdict.content_match


def test_truth_side_failure_is_flagged_as_truth():
    table = load_csv_text("K,V\na,1.5\n", name="t")
    broken = spec_of(
        {
            "mark": "bar",
            "encoding": {
                "x": {"field": "Ghost", "type": "nominal"},
                "y": {"field": "V", "type": "quantitative"},
            },
        }
    )
    fine = spec_of(
        {
            "mark": "bar",
            "encoding": {
                "x": {"field": "K", "type": "nominal"},
                "y": {"field": "V", "type": "quantitative"},
            },
        }
    )
    with pytest.raises(EvaluationFailed) as err:
        match_svg_json(fine, broken, table)
    assert err.value.side == "truth"
    with pytest.raises(EvaluationFailed) as err:
        match_svg_json(broken, fine, table)
    assert err.value.side == "candidate"


# ---------------------------------------------------------------------------
# tolerance monotonicity


TOL_LADDER = (1e-12, 1e-9, 1e-6, 1e-3, 1e-1)


def _perturbed_fixture(delta: float):
    rows = [("a", 10.0), ("b", 25.0), ("c", 40.0)]
    table = DataTable(
        name="t",
        columns=[Column("K", "text"), Column("V", "real"), Column("W", "real")],
        rows=[(k, v, v * (1.0 + delta)) for k, v in rows],
    )
    truth = spec_of(
        {
            "mark": "bar",
            "encoding": {
                "x": {"field": "K", "type": "nominal"},
                "y": {"field": "V", "type": "quantitative"},
            },
        }
    )
    candidate = spec_of(
        {
            "mark": "bar",
            "encoding": {
                "x": {"field": "K", "type": "nominal"},
                "y": {"field": "W", "type": "quantitative"},
            },
        }
    )
    return table, truth, candidate


def test_match_is_monotone_in_tolerance_over_100_perturbations():
    deltas = [10 ** (-12 + 11 * i / 99) for i in range(100)]
    for delta in deltas:
        table, truth, candidate = _perturbed_fixture(delta)
        outcomes = [
            match_svg_json(candidate, truth, table, rel_tol=tol, abs_tol=0.0).content_match
            for tol in TOL_LADDER
        ]
        # once the tolerance absorbs the perturbation it must stay absorbed
        assert outcomes == sorted(outcomes), (delta, outcomes)
        assert outcomes[-1], delta  # 10% tolerance swallows every delta here
        if delta > 1e-5:
            assert not outcomes[0], delta  # 1e-12 never hides a real change


def test_default_tolerance_accepts_float_noise_and_rejects_real_differences():
    table, truth, candidate = _perturbed_fixture(1e-9)
    assert match_svg_json(candidate, truth, table).content_match
    table, truth, candidate = _perturbed_fixture(1e-3)
    assert not match_svg_json(candidate, truth, table).content_match


# ---------------------------------------------------------------------------
# pixel comparison


def _png_bytes(size=(4, 4), color=(255, 0, 0, 255)) -> bytes:
    from PIL import Image

    img = Image.new("RGBA", size, color)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def test_identical_pixels_match():
    a = _png_bytes()
    b = _png_bytes()
    assert match_pixels(a, b)


def test_different_dimensions_never_match():
    assert not match_pixels(_png_bytes((4, 4)), _png_bytes((5, 4)))


def test_single_pixel_difference_fails():
    from PIL import Image

    img = Image.new("RGBA", (4, 4), (255, 0, 0, 255))
    img.putpixel((2, 2), (255, 0, 1, 255))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    assert not match_pixels(buf.getvalue(), _png_bytes())


def test_garbage_png_raises_decode_error():
    with pytest.raises(DecodeError):
        match_pixels(b"not a png", _png_bytes())


# ---------------------------------------------------------------------------
# svg datum extraction


def _svg_with_datums(datums: list[dict]) -> str:
    items = "".join(
        f'<g class="vizbench-datum" data-datum="{json.dumps(d).replace(chr(34), "&quot;")}"/>'
        for d in datums
    )
    return (
        '<svg xmlns="http://www.w3.org/2000/svg">'
        "<rect/>"
        f'<g class="vizbench-datums">{items}</g>'
        "</svg>"
    )


def test_extracts_annotated_datums():
    svg = _svg_with_datums([{"K": "a", "V": 1.5}, {"K": "b", "V": 2.5}])
    ts = extract_values_from_svg(svg)
    assert ts.fields == ["K", "V"]
    assert sorted(map(tuple, ts.rows)) == [("a", 1.5), ("b", 2.5)]


def test_ragged_datums_union_their_fields():
    svg = _svg_with_datums([{"K": "a"}, {"K": "b", "V": 2.5}])
    ts = extract_values_from_svg(svg)
    assert ts.fields == ["K", "V"]
    assert sorted(map(tuple, ts.rows)) == [("a", None), ("b", 2.5)]


def test_svg_without_annotations_raises():
    with pytest.raises(MissingDataAnnotations):
        extract_values_from_svg('<svg xmlns="http://www.w3.org/2000/svg"><rect/></svg>')


def test_malformed_datum_payload_raises():
    svg = (
        '<svg xmlns="http://www.w3.org/2000/svg">'
        '<g class="vizbench-datums"><g class="vizbench-datum" data-datum="{oops"/></g>'
        "</svg>"
    )
    with pytest.raises(DecodeError):
        extract_values_from_svg(svg)
