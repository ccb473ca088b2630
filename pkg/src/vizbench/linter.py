"""Static checks for generated specs, mirroring the recurring failure modes.

Rules R1-R5 police the five prompt rules (schema version, transform order,
filter hints, aggregate groupby, sort placement).  The E-rules catch grammar
misuse: properties that do not exist, bin where timeUnit was meant, and
invalid timeUnit parameters.  R1/R2/R3 warn; everything else is an error.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .chartspec import (
    AggregateTransform,
    BinTransform,
    ChartSpec,
    FieldDef,
    ParseResult,
    SCHEMA_V5,
    SortSpec,
    TIME_UNITS,
    TimeUnitTransform,
    UnknownTransform,
    parse_spec,
)
from .datatable import DataTable

SEVERITY_ERROR = "error"
SEVERITY_WARNING = "warning"

RULE_SEVERITY = {
    "invalid-json": SEVERITY_ERROR,
    "R1-schema-version": SEVERITY_WARNING,
    "R2-transform-order": SEVERITY_WARNING,
    "R3-missing-filter-hint": SEVERITY_WARNING,
    "R4-missing-groupby": SEVERITY_ERROR,
    "R5-sort-in-transform": SEVERITY_ERROR,
    "E-nonexistent-property": SEVERITY_ERROR,
    "E-bin-timeunit-confusion": SEVERITY_ERROR,
    "E-invalid-timeunit-param": SEVERITY_ERROR,
}

# rules with a registered auto-fix
FIXABLE_RULES = frozenset(
    {"R1-schema-version", "R2-transform-order", "R4-missing-groupby", "R5-sort-in-transform", "E-invalid-timeunit-param"}
)

# query wording that usually calls for a filter transform
FILTER_HINT_PHRASES = (
    "greater than",
    "less than",
    "more than",
    "fewer than",
    "at least",
    "at most",
    "equal to",
    "equals",
    "above",
    "below",
    "only",
    "exclude",
    "excluding",
    "between",
)

# field-name fragments suggesting a temporal column when no table is at hand
TEMPORAL_NAME_HINTS = ("date", "time", "year", "month", "week", "day")


class UnfixableFinding(ValueError):
    def __init__(self, rule_id: str, reason: str):
        self.rule_id = rule_id
        self.reason = reason
        super().__init__(f"{rule_id}: {reason}")


@dataclass(frozen=True)
class LintFinding:
    rule_id: str
    severity: str
    json_path: str
    message: str
    fixable: bool

    def to_dict(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "severity": self.severity,
            "json_path": self.json_path,
            "message": self.message,
            "fixable": self.fixable,
        }


def _finding(rule_id: str, path: str, message: str) -> LintFinding:
    return LintFinding(
        rule_id=rule_id,
        severity=RULE_SEVERITY[rule_id],
        json_path=path,
        message=message,
        fixable=rule_id in FIXABLE_RULES,
    )


# ---------------------------------------------------------------------------
# checks


def _check_schema(spec: ChartSpec) -> list[LintFinding]:
    if spec.schema_url == SCHEMA_V5:
        return []
    if spec.schema_url is None:
        return [_finding("R1-schema-version", "/$schema", "missing $schema; expected the v5 schema URL")]
    return [_finding("R1-schema-version", "/$schema", f"$schema is {spec.schema_url!r}, expected the v5 schema URL")]


def _check_transform_order(raw: dict | None) -> list[LintFinding]:
    if raw is None:
        return []
    keys = list(raw.keys())
    if "transform" in keys and "encoding" in keys and keys.index("transform") > keys.index("encoding"):
        return [_finding("R2-transform-order", "/transform", "transform should come before encoding")]
    return []


def _check_filter_hint(spec: ChartSpec, query: str | None) -> list[LintFinding]:
    if not query:
        return []
    from .chartspec import FilterTransform

    if any(isinstance(t, FilterTransform) for t in spec.transforms):
        return []
    lowered = query.lower()
    hits = [p for p in FILTER_HINT_PHRASES if p in lowered]
    if hits:
        return [
            _finding(
                "R3-missing-filter-hint",
                "/transform",
                f"query says {hits[0]!r} but the spec has no filter transform",
            )
        ]
    return []


def _check_groupby(spec: ChartSpec) -> list[LintFinding]:
    out = []
    for i, t in enumerate(spec.transforms):
        if isinstance(t, AggregateTransform) and not t.groupby_given:
            out.append(_finding("R4-missing-groupby", f"/transform/{i}", "aggregate without a groupby"))
    return out


def _check_sort_in_transform(spec: ChartSpec) -> list[LintFinding]:
    out = []
    for i, t in enumerate(spec.transforms):
        if isinstance(t, UnknownTransform) and "sort" in t.raw:
            out.append(
                _finding("R5-sort-in-transform", f"/transform/{i}", "sort belongs in the encoding, not the transform")
            )
    return out


def _field_is_temporal(name: str | None, table: DataTable | None) -> bool:
    if name is None:
        return False
    if table is not None:
        kind = table.kind_of(name)
        if kind is not None:
            return kind == "datetime"
    lowered = name.lower()
    return any(hint in lowered for hint in TEMPORAL_NAME_HINTS)


def _check_bin_timeunit(spec: ChartSpec, table: DataTable | None) -> list[LintFinding]:
    out = []
    for i, t in enumerate(spec.transforms):
        if isinstance(t, BinTransform) and _field_is_temporal(t.field, table):
            out.append(
                _finding(
                    "E-bin-timeunit-confusion",
                    f"/transform/{i}",
                    f"bin on temporal-looking field {t.field!r}; use timeUnit instead",
                )
            )
    for ch, fd in spec.encoding.items():
        if fd.bin is not None and _field_is_temporal(fd.field, table):
            out.append(
                _finding(
                    "E-bin-timeunit-confusion",
                    f"/encoding/{ch}/bin",
                    f"bin on temporal-looking field {fd.field!r}; use timeUnit instead",
                )
            )
    return out


def _check_timeunit_params(spec: ChartSpec) -> list[LintFinding]:
    out = []
    for i, t in enumerate(spec.transforms):
        if isinstance(t, TimeUnitTransform) and t.unit not in TIME_UNITS:
            out.append(
                _finding(
                    "E-invalid-timeunit-param",
                    f"/transform/{i}/timeUnit",
                    f"{t.unit!r} is not a timeUnit" + (" (use 'day')" if t.unit == "weekday" else ""),
                )
            )
    for ch, fd in spec.encoding.items():
        if fd.time_unit is not None and fd.time_unit not in TIME_UNITS:
            out.append(
                _finding(
                    "E-invalid-timeunit-param",
                    f"/encoding/{ch}/timeUnit",
                    f"{fd.time_unit!r} is not a timeUnit" + (" (use 'day')" if fd.time_unit == "weekday" else ""),
                )
            )
    return out


_GRAMMAR_CODE_RULES = {
    "unknown-property": "E-nonexistent-property",
    "unknown-mark": "E-nonexistent-property",
    "unsupported-construct": "E-nonexistent-property",
    "missing-mark": "E-nonexistent-property",
    "missing-encoding": "E-nonexistent-property",
    "unknown-aggregate-op": "E-nonexistent-property",
}


def _grammar_findings(result: ParseResult) -> list[LintFinding]:
    out = []
    for v in result.report.violations:
        # sort-in-transform and bad timeUnits have dedicated rules
        if v.code in ("sort-in-transform", "unknown-timeunit"):
            continue
        rule = _GRAMMAR_CODE_RULES.get(v.code)
        if rule is not None:
            out.append(_finding(rule, v.json_path, v.message))
    return out


# ---------------------------------------------------------------------------
# entry points


def lint(
    raw_or_spec: str | ChartSpec,
    query: str | None = None,
    table: DataTable | None = None,
) -> list[LintFinding]:
    """Run every check; returns findings ordered by rule then path.

    Raw text that does not contain parseable JSON yields one invalid-json
    finding and nothing else.
    """
    raw_doc: dict | None = None
    grammar: list[LintFinding] = []
    if isinstance(raw_or_spec, str):
        result = parse_spec(raw_or_spec)
        if result.spec is None:
            return [
                LintFinding(
                    rule_id="invalid-json",
                    severity=SEVERITY_ERROR,
                    json_path="",
                    message=result.report.message or "unparseable JSON",
                    fixable=False,
                )
            ]
        spec = result.spec
        raw_doc = result.raw
        grammar = _grammar_findings(result)
    else:
        spec = raw_or_spec

    findings = (
        _check_schema(spec)
        + _check_transform_order(raw_doc)
        + _check_filter_hint(spec, query)
        + _check_groupby(spec)
        + _check_sort_in_transform(spec)
        + grammar
        + _check_bin_timeunit(spec, table)
        + _check_timeunit_params(spec)
    )
    return sorted(findings, key=lambda f: (f.rule_id, f.json_path))


def error_count(findings: list[LintFinding]) -> int:
    return sum(1 for f in findings if f.severity == SEVERITY_ERROR)


def warning_count(findings: list[LintFinding]) -> int:
    return sum(1 for f in findings if f.severity == SEVERITY_WARNING)


# ---------------------------------------------------------------------------
# fixes


def _transform_index(path: str) -> int | None:
    m = re.match(r"^/transform/(\d+)", path)
    return int(m.group(1)) if m else None


def _fix_sort_entry(spec: ChartSpec, raw: dict) -> None:
    """Move a transform-level sort into the encoding channel it orders."""
    entries = raw.get("sort")
    if isinstance(entries, dict):
        entries = [entries]
    if not isinstance(entries, list) or not entries:
        raise UnfixableFinding("R5-sort-in-transform", "sort entry carries no field")
    first = entries[0]
    if isinstance(first, str):
        first = {"field": first, "order": "ascending"}
    if not isinstance(first, dict) or not isinstance(first.get("field"), str):
        raise UnfixableFinding("R5-sort-in-transform", "sort entry carries no field")
    fld = first["field"]
    order = first.get("order", "ascending")
    if order not in ("ascending", "descending"):
        order = "ascending"
    for fd in spec.encoding.values():
        if fd.field == fld:
            fd.sort = SortSpec(direction=order)
            return
    # the sort names a field not on an axis: order the first positional
    # channel by that field instead
    for ch in ("x", "y"):
        fd = spec.encoding.get(ch)
        if fd is not None:
            fd.sort = SortSpec(direction=order, by_field=fld)
            return
    raise UnfixableFinding("R5-sort-in-transform", "no encoding channel to carry the sort")


def _infer_groupby(spec: ChartSpec, agg: AggregateTransform) -> list[str]:
    aliases = {op.alias for op in agg.ops}
    inferred: list[str] = []
    for fd in spec.encoding.values():
        if fd.field is None or fd.aggregate is not None:
            continue
        if fd.field in aliases:
            continue
        if fd.field not in inferred:
            inferred.append(fd.field)
    return inferred


def fix(spec: ChartSpec, findings: list[LintFinding]) -> tuple[ChartSpec, list[str]]:
    """Apply registered fixes; unfixable inputs raise rather than guess.

    Returns the fixed spec (a mutated deep copy) and the rule_ids applied,
    in application order.  Running fix on its own output applies nothing.
    """
    import copy

    fixed = copy.deepcopy(spec)
    applied: list[str] = []
    drop_indices: set[int] = set()

    for finding in findings:
        if finding.rule_id == "R1-schema-version":
            fixed.schema_url = SCHEMA_V5
            applied.append(finding.rule_id)
        elif finding.rule_id == "R2-transform-order":
            # serialization always emits transform before encoding; nothing
            # to change on the AST
            applied.append(finding.rule_id)
        elif finding.rule_id == "R4-missing-groupby":
            idx = _transform_index(finding.json_path)
            if idx is None or idx >= len(fixed.transforms):
                raise UnfixableFinding(finding.rule_id, f"no transform at {finding.json_path}")
            agg = fixed.transforms[idx]
            if not isinstance(agg, AggregateTransform):
                raise UnfixableFinding(finding.rule_id, f"transform at {finding.json_path} is not an aggregate")
            inferred = _infer_groupby(fixed, agg)
            if not inferred:
                raise UnfixableFinding(finding.rule_id, "no non-aggregated encoded fields to group by")
            agg.groupby = inferred
            agg.groupby_given = True
            applied.append(finding.rule_id)
        elif finding.rule_id == "R5-sort-in-transform":
            idx = _transform_index(finding.json_path)
            if idx is None or idx >= len(fixed.transforms):
                raise UnfixableFinding(finding.rule_id, f"no transform at {finding.json_path}")
            entry = fixed.transforms[idx]
            if not isinstance(entry, UnknownTransform) or "sort" not in entry.raw:
                raise UnfixableFinding(finding.rule_id, f"transform at {finding.json_path} is not a sort")
            _fix_sort_entry(fixed, entry.raw)
            drop_indices.add(idx)
            applied.append(finding.rule_id)
        elif finding.rule_id == "E-invalid-timeunit-param":
            if not _fix_timeunit(fixed, finding.json_path):
                raise UnfixableFinding(finding.rule_id, f"no mechanical replacement at {finding.json_path}")
            applied.append(finding.rule_id)
        # other rules have no registered fix and are skipped

    if drop_indices:
        fixed.transforms = [t for i, t in enumerate(fixed.transforms) if i not in drop_indices]
    return fixed, applied


def _fix_timeunit(spec: ChartSpec, path: str) -> bool:
    replacements = {"weekday": "day"}
    idx = _transform_index(path)
    if idx is not None and idx < len(spec.transforms):
        t = spec.transforms[idx]
        if isinstance(t, TimeUnitTransform) and t.unit in replacements:
            if t.alias == f"{t.unit}_{t.field}":
                t.alias = f"{replacements[t.unit]}_{t.field}"
            t.unit = replacements[t.unit]
            return True
        return False
    m = re.match(r"^/encoding/([^/]+)/timeUnit$", path)
    if m:
        fd = spec.encoding.get(m.group(1))
        if isinstance(fd, FieldDef) and fd.time_unit in replacements:
            fd.time_unit = replacements[fd.time_unit]
            return True
    return False
