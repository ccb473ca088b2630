"""Chart-level equivalence: does a candidate display the same chart as truth.

Two comparison paths exist.  match_svg_json evaluates both specs against the
table and compares displayed tuples channel by channel, allowing the x and y
channels of the candidate to be swapped.  match_pixels compares rendered
rasters byte for byte.  extract_values_from_svg recovers displayed tuples
from a renderer-produced SVG carrying datum annotations.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from io import BytesIO

from .chartspec import ChartSpec, chart_type_of
from .datatable import DataTable
from .engine import TupleSet, UnresolvedField, evaluate_channels, rows_equal

# tolerance for cross-spec numeric comparison; looser than the engine's own
REL_TOL = 1e-6
ABS_TOL = 1e-9


class EvaluationFailed(RuntimeError):
    """A side's pipeline could not run; the harness maps this to a verdict."""

    def __init__(self, side: str, cause: Exception):
        self.side = side
        self.cause = cause
        super().__init__(f"{side} spec failed to evaluate: {cause}")


class DecodeError(ValueError):
    pass


class MissingDataAnnotations(ValueError):
    """The SVG carries no datum annotations; it is not from the renderer bridge."""


@dataclass(frozen=True)
class MatchVerdict:
    type_match: bool
    content_match: bool
    pixel_match: bool | None = None

    @property
    def overall(self) -> bool:
        return self.type_match and self.content_match

    def to_dict(self) -> dict:
        return {
            "type_match": self.type_match,
            "content_match": self.content_match,
            "pixel_match": self.pixel_match,
            "overall": self.overall,
        }


# ---------------------------------------------------------------------------
# svg-json comparison


def _channel_rows(columns: dict[str, list], order: list[str]) -> list[tuple]:
    length = len(next(iter(columns.values()))) if columns else 0
    return [tuple(columns[ch][i] for ch in order if ch in columns) for i in range(length)]


def _columns_match(truth: dict[str, list], cand: dict[str, list], rel_tol: float, abs_tol: float) -> bool:
    if set(truth) != set(cand):
        return False
    order = sorted(truth)
    return rows_equal(_channel_rows(truth, order), _channel_rows(cand, order), rel_tol, abs_tol)


def _swap_xy(columns: dict[str, list]) -> dict[str, list]:
    out = dict(columns)
    if "x" in columns or "y" in columns:
        out.pop("x", None)
        out.pop("y", None)
        if "x" in columns:
            out["y"] = columns["x"]
        if "y" in columns:
            out["x"] = columns["y"]
    return out


def match_svg_json(
    candidate: ChartSpec,
    truth: ChartSpec,
    table: DataTable,
    rel_tol: float = REL_TOL,
    abs_tol: float = ABS_TOL,
) -> MatchVerdict:
    """Compare two evaluable specs over one table.

    Chart type compares via the mark/color mapping, which never looks at axis
    roles.  Content compares the channel-projected tuple multisets, names
    ignored, trying the candidate both as-is and with x and y swapped.
    """
    try:
        truth_columns = evaluate_channels(truth, table)
    except (UnresolvedField, ValueError, TypeError) as exc:
        raise EvaluationFailed("truth", exc) from exc
    try:
        cand_columns = evaluate_channels(candidate, table)
    except (UnresolvedField, ValueError, TypeError) as exc:
        raise EvaluationFailed("candidate", exc) from exc

    type_match = chart_type_of(candidate) == chart_type_of(truth)
    content_match = _columns_match(truth_columns, cand_columns, rel_tol, abs_tol) or _columns_match(
        truth_columns, _swap_xy(cand_columns), rel_tol, abs_tol
    )
    return MatchVerdict(type_match=type_match, content_match=content_match)


def swap_xy_spec(spec: ChartSpec) -> ChartSpec:
    """Copy of the spec with the x and y channel bindings exchanged."""
    encoding = dict(spec.encoding)
    x = encoding.pop("x", None)
    y = encoding.pop("y", None)
    if y is not None:
        encoding["x"] = y
    if x is not None:
        encoding["y"] = x
    return ChartSpec(
        mark=spec.mark,
        encoding=encoding,
        transforms=list(spec.transforms),
        schema_url=spec.schema_url,
        data_source=spec.data_source,
    )


# ---------------------------------------------------------------------------
# pixel comparison


def match_pixels(candidate_png: bytes, truth_png: bytes) -> bool:
    """True only when dimensions agree and every pixel is identical."""
    from PIL import Image

    try:
        a = Image.open(BytesIO(candidate_png))
        a.load()
        b = Image.open(BytesIO(truth_png))
        b.load()
    except Exception as exc:
        raise DecodeError(f"undecodable PNG: {exc}") from exc
    if a.size != b.size:
        return False
    return a.convert("RGBA").tobytes() == b.convert("RGBA").tobytes()


# ---------------------------------------------------------------------------
# svg extraction

_ANNOTATION_CLASS = "vizbench-datum"
_CONTAINER_CLASS = "vizbench-datums"


def extract_values_from_svg(svg_text: str) -> TupleSet:
    """Rebuild the displayed TupleSet from a renderer-bridge SVG.

    The bridge appends one annotation element per mark item, each carrying a
    JSON datum in a data-datum attribute.  An SVG without the annotation
    container was rendered without datum embedding and cannot be compared.
    """
    try:
        root = ET.fromstring(svg_text)
    except ET.ParseError as exc:
        raise DecodeError(f"unparseable SVG: {exc}") from exc

    container = None
    for elem in root.iter():
        if _CONTAINER_CLASS in (elem.get("class") or "").split():
            container = elem
            break
    if container is None:
        raise MissingDataAnnotations("no datum annotations in SVG")

    datums: list[dict] = []
    for elem in container.iter():
        if _ANNOTATION_CLASS not in (elem.get("class") or "").split():
            continue
        payload = elem.get("data-datum")
        if payload is None:
            continue
        try:
            datum = json.loads(payload)
        except json.JSONDecodeError as exc:
            raise DecodeError(f"bad datum annotation: {exc}") from exc
        if isinstance(datum, list):
            datums.extend(d for d in datum if isinstance(d, dict))
        elif isinstance(datum, dict):
            datums.append(datum)

    fields = sorted({k for d in datums for k in d})
    rows = [tuple(d.get(f) for f in fields) for d in datums]
    return TupleSet(fields=fields, rows=rows)
