"""Vega-Lite subset model: parsing, validation, canonical serialization.

The grammar covered here is the slice of Vega-Lite that single-table
benchmark charts actually use: four marks (bar, arc, line, point), four
encoding channels (x, y, color, theta), and four transforms (filter,
aggregate, bin, timeUnit).  Anything outside that slice is reported as a
validation violation rather than silently accepted, so downstream
comparisons stay decidable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

# ---------------------------------------------------------------------------
# vocabulary

MARKS = ("bar", "arc", "line", "point")
CHANNELS = ("x", "y", "color", "theta")
TYPE_TAGS = ("nominal", "quantitative", "temporal", "ordinal")
AGGREGATE_OPS = ("count", "sum", "mean", "min", "max")
TIME_UNITS = ("year", "month", "day", "date", "hours", "yearmonth")

SCHEMA_V5 = "https://vega.github.io/schema/vega-lite/v5.json"

DEFAULT_MAXBINS = 10

# top-level keys that restructure the chart; everything else unknown at the
# top level (width, title, config, ...) is accepted and ignored
_COMPOSITE_KEYS = ("layer", "facet", "concat", "hconcat", "vconcat", "repeat", "spec")

# presentation-only FieldDef keys carried by real-world specs; they do not
# affect what data a chart displays, so they are ignored rather than flagged
_IGNORED_FIELDDEF_KEYS = frozenset(
    {"title", "scale", "axis", "legend", "format", "stack", "tooltip", "impute"}
)

_KNOWN_FIELDDEF_KEYS = frozenset({"field", "type", "aggregate", "sort", "timeUnit", "bin"})


class BenchChartType:
    """The seven benchmark chart categories."""

    BAR = "Bar"
    STACKED_BAR = "StackedBar"
    PIE = "Pie"
    LINE = "Line"
    GROUPING_LINE = "GroupingLine"
    SCATTER = "Scatter"
    GROUPING_SCATTER = "GroupingScatter"

    ALL = (BAR, STACKED_BAR, PIE, LINE, GROUPING_LINE, SCATTER, GROUPING_SCATTER)


# ---------------------------------------------------------------------------
# validity reporting


@dataclass(frozen=True)
class Violation:
    code: str
    json_path: str
    message: str

    def to_dict(self) -> dict:
        return {"code": self.code, "json_path": self.json_path, "message": self.message}


@dataclass(frozen=True)
class ValidityReport:
    """Outcome of the parse pipeline: ok, a JSON failure, or grammar violations."""

    stage: str  # "ok" | "json-error" | "grammar-error"
    message: str | None = None
    offset: int | None = None
    violations: tuple[Violation, ...] = ()

    @classmethod
    def ok(cls) -> ValidityReport:
        return cls(stage="ok")

    @classmethod
    def json_error(cls, message: str, offset: int) -> ValidityReport:
        return cls(stage="json-error", message=message, offset=offset)

    @classmethod
    def grammar_error(cls, violations: list[Violation]) -> ValidityReport:
        return cls(stage="grammar-error", violations=tuple(violations))

    @property
    def is_ok(self) -> bool:
        return self.stage == "ok"

    def to_dict(self) -> dict:
        out: dict = {"stage": self.stage}
        if self.message is not None:
            out["message"] = self.message
        if self.offset is not None:
            out["offset"] = self.offset
        if self.violations:
            out["violations"] = [v.to_dict() for v in self.violations]
        return out


# ---------------------------------------------------------------------------
# AST


@dataclass
class SortSpec:
    """Axis ordering: a bare direction, or ordering by another field."""

    direction: str = "ascending"
    by_field: str | None = None

    def to_json(self):
        if self.by_field is None:
            return self.direction
        return {"field": self.by_field, "order": self.direction}


@dataclass
class FieldDef:
    """One encoding channel binding.

    ``field`` may be None only for a bare count aggregate.  ``bin`` is either
    None, True (default bins) or an int maxbins.
    """

    field: str | None = None
    type_tag: str = "nominal"
    aggregate: str | None = None
    sort: SortSpec | None = None
    time_unit: str | None = None
    bin: bool | int | None = None

    def to_json(self) -> dict:
        out: dict = {}
        if self.aggregate is not None:
            out["aggregate"] = self.aggregate
        if self.bin is not None:
            out["bin"] = True if self.bin is True else {"maxbins": self.bin}
        if self.field is not None:
            out["field"] = self.field
        if self.sort is not None:
            out["sort"] = self.sort.to_json()
        if self.time_unit is not None:
            out["timeUnit"] = self.time_unit
        out["type"] = self.type_tag
        return out


@dataclass
class FilterTransform:
    predicate: "Predicate"

    def to_json(self) -> dict:
        return {"filter": self.predicate.to_json()}


@dataclass
class AggregateOp:
    op: str
    field: str | None
    alias: str

    def to_json(self) -> dict:
        out: dict = {"op": self.op}
        if self.field is not None:
            out["field"] = self.field
        out["as"] = self.alias
        return out


@dataclass
class AggregateTransform:
    ops: list[AggregateOp]
    groupby: list[str] = field(default_factory=list)
    groupby_given: bool = True

    def to_json(self) -> dict:
        return {
            "aggregate": [op.to_json() for op in self.ops],
            "groupby": list(self.groupby),
        }


@dataclass
class BinTransform:
    field: str
    alias: str
    maxbins: int = DEFAULT_MAXBINS

    def to_json(self) -> dict:
        bin_value: bool | dict = True if self.maxbins == DEFAULT_MAXBINS else {"maxbins": self.maxbins}
        return {"bin": bin_value, "field": self.field, "as": self.alias}


@dataclass
class TimeUnitTransform:
    unit: str
    field: str
    alias: str

    def to_json(self) -> dict:
        return {"timeUnit": self.unit, "field": self.field, "as": self.alias}


@dataclass
class UnknownTransform:
    """A transform entry outside the supported slice, kept verbatim.

    Holding the raw object keeps the AST usable by the linter's fixes even
    when validation has already failed (a sort entry, a calculate, ...).
    """

    raw: dict

    def to_json(self) -> dict:
        return dict(self.raw)


Transform = FilterTransform | AggregateTransform | BinTransform | TimeUnitTransform | UnknownTransform


@dataclass
class ChartSpec:
    mark: str
    encoding: dict[str, FieldDef]
    transforms: list[Transform] = field(default_factory=list)
    schema_url: str | None = SCHEMA_V5
    data_source: dict | None = None

    def channel(self, name: str) -> FieldDef | None:
        return self.encoding.get(name)


# ---------------------------------------------------------------------------
# predicates

_COMPARE_OPS = ("==", "!=", "<", "<=", ">", ">=")


@dataclass
class Comparison:
    op: str
    field: str
    value: object

    def to_json(self) -> dict:
        key = {"==": "equal", "<": "lt", "<=": "lte", ">": "gt", ">=": "gte"}.get(self.op)
        if key is None:  # != has no object form; fall back to an expression
            return {"not": {"field": self.field, "equal": self.value}}
        return {"field": self.field, key: self.value}


@dataclass
class Membership:
    field: str
    values: list

    def to_json(self) -> dict:
        return {"field": self.field, "oneOf": list(self.values)}


@dataclass
class And:
    items: list["Predicate"]

    def to_json(self) -> dict:
        return {"and": [p.to_json() for p in self.items]}


@dataclass
class Or:
    items: list["Predicate"]

    def to_json(self) -> dict:
        return {"or": [p.to_json() for p in self.items]}


@dataclass
class Not:
    item: "Predicate"

    def to_json(self) -> dict:
        return {"not": self.item.to_json()}


Predicate = Comparison | Membership | And | Or | Not


class PredicateParseError(ValueError):
    pass


def _parse_predicate_object(obj: dict, path: str, violations: list[Violation]) -> Predicate | None:
    if "and" in obj:
        items = [_parse_predicate_object(p, f"{path}/and/{i}", violations) for i, p in enumerate(obj["and"])]
        return And([p for p in items if p is not None])
    if "or" in obj:
        items = [_parse_predicate_object(p, f"{path}/or/{i}", violations) for i, p in enumerate(obj["or"])]
        return Or([p for p in items if p is not None])
    if "not" in obj:
        inner = _parse_predicate_object(obj["not"], f"{path}/not", violations)
        return Not(inner) if inner is not None else None
    fld = obj.get("field")
    if not isinstance(fld, str):
        violations.append(Violation("unsupported-construct", path, "filter predicate without a field"))
        return None
    if "oneOf" in obj:
        values = obj["oneOf"]
        if not isinstance(values, list):
            violations.append(Violation("unsupported-construct", f"{path}/oneOf", "oneOf must be a list"))
            return None
        return Membership(fld, values)
    if "range" in obj:
        rng = obj["range"]
        if not (isinstance(rng, list) and len(rng) == 2):
            violations.append(Violation("unsupported-construct", f"{path}/range", "range must be a two-item list"))
            return None
        return And([Comparison(">=", fld, rng[0]), Comparison("<=", fld, rng[1])])
    for key, op in (("equal", "=="), ("lt", "<"), ("lte", "<="), ("gt", ">"), ("gte", ">=")):
        if key in obj:
            return Comparison(op, fld, obj[key])
    violations.append(Violation("unsupported-construct", path, "unrecognized filter predicate shape"))
    return None


# --- expression strings ("datum.age >= 3 && datum.kind == 'dog'") ----------


class _ExprParser:
    """Recursive-descent parser for the datum expression subset."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def parse(self) -> Predicate:
        node = self._or()
        self._skip_ws()
        if self.pos != len(self.text):
            raise PredicateParseError(f"trailing input at offset {self.pos}")
        return node

    def _skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _match(self, token: str) -> bool:
        self._skip_ws()
        if self.text.startswith(token, self.pos):
            self.pos += len(token)
            return True
        return False

    def _or(self) -> Predicate:
        items = [self._and()]
        while self._match("||"):
            items.append(self._and())
        return items[0] if len(items) == 1 else Or(items)

    def _and(self) -> Predicate:
        items = [self._unary()]
        while self._match("&&"):
            items.append(self._unary())
        return items[0] if len(items) == 1 else And(items)

    def _unary(self) -> Predicate:
        self._skip_ws()
        if self._match("!("):
            node = self._or()
            if not self._match(")"):
                raise PredicateParseError("unbalanced parenthesis after !")
            return Not(node)
        if self._match("("):
            node = self._or()
            if not self._match(")"):
                raise PredicateParseError("unbalanced parenthesis")
            return node
        return self._comparison()

    def _comparison(self) -> Predicate:
        fld = self._field_ref()
        self._skip_ws()
        for op in ("==", "!=", "<=", ">=", "<", ">"):
            if self._match(op):
                # === / !== are tolerated as their two-character forms
                if op in ("==", "!=") and self._match("="):
                    pass
                value = self._literal()
                return Comparison(op, fld, value)
        raise PredicateParseError(f"expected comparison operator at offset {self.pos}")

    def _field_ref(self) -> str:
        self._skip_ws()
        if not self._match("datum."):
            if self._match("datum["):
                name = self._literal()
                if not isinstance(name, str) or not self._match("]"):
                    raise PredicateParseError("malformed datum[...] reference")
                return name
            raise PredicateParseError(f"expected datum reference at offset {self.pos}")
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isalnum() or self.text[self.pos] == "_"):
            self.pos += 1
        if self.pos == start:
            raise PredicateParseError("empty field name after datum.")
        return self.text[start : self.pos]

    def _literal(self):
        self._skip_ws()
        if self.pos >= len(self.text):
            raise PredicateParseError("expected literal, found end of input")
        ch = self.text[self.pos]
        if ch in "'\"":
            quote = ch
            self.pos += 1
            out = []
            while self.pos < len(self.text) and self.text[self.pos] != quote:
                if self.text[self.pos] == "\\" and self.pos + 1 < len(self.text):
                    self.pos += 1
                out.append(self.text[self.pos])
                self.pos += 1
            if self.pos >= len(self.text):
                raise PredicateParseError("unterminated string literal")
            self.pos += 1
            return "".join(out)
        if self._match("true"):
            return True
        if self._match("false"):
            return False
        if self._match("null"):
            return None
        start = self.pos
        if ch in "+-":
            self.pos += 1
        while self.pos < len(self.text) and (self.text[self.pos].isdigit() or self.text[self.pos] in ".eE+-"):
            self.pos += 1
        raw = self.text[start : self.pos]
        try:
            return int(raw)
        except ValueError:
            try:
                return float(raw)
            except ValueError:
                raise PredicateParseError(f"bad literal {raw!r} at offset {start}") from None


def parse_predicate(value, path: str, violations: list[Violation]) -> Predicate | None:
    """Parse a filter payload: either an expression string or a predicate object."""
    if isinstance(value, str):
        try:
            return _ExprParser(value).parse()
        except PredicateParseError as exc:
            violations.append(Violation("unsupported-construct", path, f"unparseable filter expression: {exc}"))
            return None
    if isinstance(value, dict):
        return _parse_predicate_object(value, path, violations)
    violations.append(Violation("unsupported-construct", path, "filter must be a string or object"))
    return None


# ---------------------------------------------------------------------------
# prose stripping


def extract_json_block(text: str) -> tuple[str | None, int]:
    """Locate the first balanced ``{...}`` block in possibly-chatty output.

    Returns (block, offset).  Fenced code blocks are preferred when present.
    Brace matching is string-aware so braces inside JSON strings do not count.
    """
    candidates: list[tuple[str, int]] = []
    search_from = 0
    while True:
        fence = text.find("```", search_from)
        if fence < 0:
            break
        end = text.find("```", fence + 3)
        if end < 0:
            break
        candidates.append((text[fence + 3 : end], fence + 3))
        search_from = end + 3
    candidates.append((text, 0))

    for chunk, base in candidates:
        start = chunk.find("{")
        if start < 0:
            continue
        depth = 0
        in_string = False
        escaped = False
        for i in range(start, len(chunk)):
            ch = chunk[i]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
                continue
            if ch == '"':
                in_string = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    return chunk[start : i + 1], base + start
        # unbalanced in this chunk; try the next candidate
    return None, 0


# ---------------------------------------------------------------------------
# parsing


@dataclass
class ParseResult:
    report: ValidityReport
    spec: ChartSpec | None
    raw: dict | None = None  # the parsed JSON document, key order preserved


def _parse_fielddef(obj, path: str, violations: list[Violation]) -> FieldDef | None:
    if not isinstance(obj, dict):
        violations.append(Violation("unsupported-construct", path, "channel definition must be an object"))
        return None
    for key in obj:
        if key not in _KNOWN_FIELDDEF_KEYS and key not in _IGNORED_FIELDDEF_KEYS:
            violations.append(Violation("unknown-property", f"{path}/{key}", f"unknown channel property {key!r}"))
    fd = FieldDef()
    fld = obj.get("field")
    if fld is not None and not isinstance(fld, str):
        violations.append(Violation("unsupported-construct", f"{path}/field", "field must be a string"))
        fld = None
    fd.field = fld
    type_tag = obj.get("type")
    if type_tag is not None:
        if type_tag not in TYPE_TAGS:
            violations.append(Violation("unknown-property", f"{path}/type", f"unknown type {type_tag!r}"))
        else:
            fd.type_tag = type_tag
    agg = obj.get("aggregate")
    if agg is not None:
        if agg == "average":
            agg = "mean"
        if agg not in AGGREGATE_OPS:
            violations.append(Violation("unknown-aggregate-op", f"{path}/aggregate", f"unknown aggregate op {agg!r}"))
        fd.aggregate = agg
    unit = obj.get("timeUnit")
    if unit is not None:
        if unit not in TIME_UNITS:
            violations.append(Violation("unknown-timeunit", f"{path}/timeUnit", f"unknown timeUnit {unit!r}"))
        fd.time_unit = unit
    bin_value = obj.get("bin")
    if bin_value is not None:
        if bin_value is True:
            fd.bin = True
        elif bin_value is False:
            fd.bin = None
        elif isinstance(bin_value, dict):
            maxbins = bin_value.get("maxbins", DEFAULT_MAXBINS)
            if isinstance(maxbins, int) and maxbins > 0:
                fd.bin = maxbins
            else:
                violations.append(Violation("unsupported-construct", f"{path}/bin", "maxbins must be a positive integer"))
        else:
            violations.append(Violation("unsupported-construct", f"{path}/bin", "bin must be true or an object"))
    sort = obj.get("sort")
    if sort is not None:
        fd.sort = _parse_sort(sort, f"{path}/sort", violations)
    if fd.field is None and fd.aggregate != "count":
        violations.append(Violation("unsupported-construct", path, "channel needs a field unless it is a bare count"))
    return fd


def _parse_sort(value, path: str, violations: list[Violation]) -> SortSpec | None:
    if value is None:
        return None
    if isinstance(value, str):
        if value in ("ascending", "descending"):
            return SortSpec(direction=value)
        violations.append(Violation("unsupported-construct", path, f"unsupported sort form {value!r}"))
        return None
    if isinstance(value, dict):
        fld = value.get("field")
        order = value.get("order", "ascending")
        if isinstance(fld, str) and order in ("ascending", "descending"):
            return SortSpec(direction=order, by_field=fld)
        violations.append(Violation("unsupported-construct", path, "sort object needs a field and a valid order"))
        return None
    violations.append(Violation("unsupported-construct", path, "unsupported sort value"))
    return None


def _parse_transform_entry(obj, path: str, violations: list[Violation]) -> Transform | None:
    if not isinstance(obj, dict):
        violations.append(Violation("unsupported-construct", path, "transform entry must be an object"))
        return None
    if "sort" in obj:
        violations.append(Violation("sort-in-transform", path, "sort is not a transform; order axes in the encoding"))
        return UnknownTransform(obj)
    if "filter" in obj:
        pred = parse_predicate(obj["filter"], f"{path}/filter", violations)
        if pred is None:
            return UnknownTransform(obj)
        return FilterTransform(pred)
    if "aggregate" in obj:
        entries = obj["aggregate"]
        if not isinstance(entries, list):
            violations.append(Violation("unsupported-construct", f"{path}/aggregate", "aggregate must be a list"))
            return UnknownTransform(obj)
        ops: list[AggregateOp] = []
        for i, entry in enumerate(entries):
            if not isinstance(entry, dict):
                violations.append(Violation("unsupported-construct", f"{path}/aggregate/{i}", "aggregate entry must be an object"))
                continue
            op = entry.get("op")
            if op == "average":
                op = "mean"
            if op not in AGGREGATE_OPS:
                violations.append(Violation("unknown-aggregate-op", f"{path}/aggregate/{i}/op", f"unknown aggregate op {op!r}"))
                continue
            fld = entry.get("field")
            if fld is not None and not isinstance(fld, str):
                violations.append(Violation("unsupported-construct", f"{path}/aggregate/{i}/field", "field must be a string"))
                continue
            if fld is None and op != "count":
                violations.append(Violation("unsupported-construct", f"{path}/aggregate/{i}", f"{op} needs a field"))
                continue
            alias = entry.get("as")
            if not isinstance(alias, str):
                alias = op if fld is None else f"{op}_{fld}"
            ops.append(AggregateOp(op=op, field=fld, alias=alias))
        groupby = obj.get("groupby")
        groupby_given = isinstance(groupby, list) and len(groupby) > 0
        clean_groupby: list[str] = []
        if isinstance(groupby, list):
            for i, g in enumerate(groupby):
                if isinstance(g, str):
                    clean_groupby.append(g)
                else:
                    violations.append(Violation("unsupported-construct", f"{path}/groupby/{i}", "groupby entries must be field names"))
        return AggregateTransform(ops=ops, groupby=clean_groupby, groupby_given=groupby_given)
    if "bin" in obj:
        fld = obj.get("field")
        if not isinstance(fld, str):
            violations.append(Violation("unsupported-construct", path, "bin transform needs a field"))
            return UnknownTransform(obj)
        alias = obj.get("as")
        if not isinstance(alias, str):
            alias = f"bin_{fld}"
        bin_value = obj["bin"]
        maxbins = DEFAULT_MAXBINS
        if isinstance(bin_value, dict):
            raw_maxbins = bin_value.get("maxbins", DEFAULT_MAXBINS)
            if isinstance(raw_maxbins, int) and raw_maxbins > 0:
                maxbins = raw_maxbins
            else:
                violations.append(Violation("unsupported-construct", f"{path}/bin", "maxbins must be a positive integer"))
        elif bin_value is not True:
            violations.append(Violation("unsupported-construct", f"{path}/bin", "bin must be true or an object"))
        return BinTransform(field=fld, alias=alias, maxbins=maxbins)
    if "timeUnit" in obj:
        unit = obj["timeUnit"]
        fld = obj.get("field")
        if not isinstance(fld, str):
            violations.append(Violation("unsupported-construct", path, "timeUnit transform needs a field"))
            return UnknownTransform(obj)
        alias = obj.get("as")
        if not isinstance(alias, str):
            alias = f"{unit}_{fld}"
        if unit not in TIME_UNITS:
            violations.append(Violation("unknown-timeunit", f"{path}/timeUnit", f"unknown timeUnit {unit!r}"))
        return TimeUnitTransform(unit=unit, field=fld, alias=alias)
    keys = ", ".join(sorted(obj))
    violations.append(Violation("unsupported-construct", path, f"unsupported transform ({keys})"))
    return UnknownTransform(obj)


def parse_spec(raw_text: str) -> ParseResult:
    """Parse possibly-chatty model output into a ChartSpec.

    The result carries a ValidityReport; a spec is returned whenever the JSON
    held enough structure to build an AST, even if validation failed, so that
    fixes can still operate on it.
    """
    block, offset = extract_json_block(raw_text)
    if block is None:
        return ParseResult(ValidityReport.json_error("no JSON object found", offset), None)
    try:
        doc = json.loads(block)
    except json.JSONDecodeError as exc:
        return ParseResult(ValidityReport.json_error(exc.msg, offset + exc.pos), None)
    if not isinstance(doc, dict):
        return ParseResult(ValidityReport.json_error("top-level JSON value is not an object", offset), None)
    return _build_spec(doc)


def parse_spec_dict(doc: dict) -> ParseResult:
    """Validate an already-decoded JSON document."""
    return _build_spec(doc)


def _build_spec(doc: dict) -> ParseResult:
    violations: list[Violation] = []

    for key in _COMPOSITE_KEYS:
        if key in doc:
            violations.append(Violation("unsupported-construct", f"/{key}", f"composite specs ({key}) are not supported"))

    schema_url = doc.get("$schema")
    if schema_url is not None and not isinstance(schema_url, str):
        violations.append(Violation("unsupported-construct", "/$schema", "$schema must be a string"))
        schema_url = None

    data_source = doc.get("data") if isinstance(doc.get("data"), dict) else None

    mark = doc.get("mark")
    if isinstance(mark, dict):  # {"type": "bar", ...} form
        mark = mark.get("type")
    if mark is None:
        violations.append(Violation("missing-mark", "/mark", "spec has no mark"))
        mark = ""
    elif not isinstance(mark, str):
        violations.append(Violation("unknown-mark", "/mark", "mark must be a string"))
        mark = str(mark)
    elif mark not in MARKS:
        violations.append(Violation("unknown-mark", "/mark", f"unknown mark {mark!r}"))

    transforms: list[Transform] = []
    raw_transforms = doc.get("transform")
    if raw_transforms is not None:
        if not isinstance(raw_transforms, list):
            violations.append(Violation("unsupported-construct", "/transform", "transform must be a list"))
        else:
            for i, entry in enumerate(raw_transforms):
                t = _parse_transform_entry(entry, f"/transform/{i}", violations)
                if t is not None:
                    transforms.append(t)

    encoding: dict[str, FieldDef] = {}
    raw_encoding = doc.get("encoding")
    if raw_encoding is None:
        violations.append(Violation("missing-encoding", "/encoding", "spec has no encoding"))
    elif not isinstance(raw_encoding, dict):
        violations.append(Violation("unsupported-construct", "/encoding", "encoding must be an object"))
    else:
        for channel, fd_obj in raw_encoding.items():
            if channel not in CHANNELS:
                violations.append(Violation("unsupported-construct", f"/encoding/{channel}", f"unsupported channel {channel!r}"))
                continue
            fd = _parse_fielddef(fd_obj, f"/encoding/{channel}", violations)
            if fd is not None:
                encoding[channel] = fd

    spec = ChartSpec(
        mark=mark,
        encoding=encoding,
        transforms=transforms,
        schema_url=schema_url,
        data_source=data_source,
    )
    if violations:
        return ParseResult(ValidityReport.grammar_error(violations), spec, raw=doc)
    return ParseResult(ValidityReport.ok(), spec, raw=doc)


# ---------------------------------------------------------------------------
# serialization


def _sorted_deep(value):
    if isinstance(value, dict):
        return {k: _sorted_deep(value[k]) for k in sorted(value)}
    if isinstance(value, list):
        return [_sorted_deep(v) for v in value]
    return value


def spec_to_document(spec: ChartSpec) -> dict:
    """Assemble the JSON document in canonical key order.

    Top level runs $schema, data, transform, mark, encoding; keys inside
    nested objects are alphabetical.
    """
    doc: dict = {}
    if spec.schema_url is not None:
        doc["$schema"] = spec.schema_url
    if spec.data_source is not None:
        doc["data"] = _sorted_deep(spec.data_source)
    if spec.transforms:
        doc["transform"] = [_sorted_deep(t.to_json()) for t in spec.transforms]
    doc["mark"] = spec.mark
    doc["encoding"] = {ch: _sorted_deep(spec.encoding[ch].to_json()) for ch in sorted(spec.encoding)}
    return doc


def serialize_spec(spec: ChartSpec) -> str:
    """Canonical text form; equal specs serialize to identical bytes."""
    return json.dumps(spec_to_document(spec), indent=2, ensure_ascii=False)


# ---------------------------------------------------------------------------
# chart typing


def chart_type_of(spec: ChartSpec) -> str:
    """Map (mark, color presence) onto the seven benchmark chart types.

    Axis roles never factor in, so swapping x and y leaves the type alone.
    Arc maps to Pie with or without color; a color channel splits the other
    three marks into their grouped variants.
    """
    has_color = "color" in spec.encoding
    if spec.mark == "arc":
        return BenchChartType.PIE
    if spec.mark == "bar":
        return BenchChartType.STACKED_BAR if has_color else BenchChartType.BAR
    if spec.mark == "line":
        return BenchChartType.GROUPING_LINE if has_color else BenchChartType.LINE
    if spec.mark == "point":
        return BenchChartType.GROUPING_SCATTER if has_color else BenchChartType.SCATTER
    raise ValueError(f"no chart type for mark {spec.mark!r}")
