"""Benchmark hygiene checks: does the ground truth deserve to be trusted.

Three probes run per instance.  audit_content recomputes an inline-data
truth from the raw table and compares; mismatches it can prove (missing
labels, decimal truncation, flat-out different answers) are definite
findings.  audit_query_text checks that queries state the chart type and
any timeUnit the truth relies on.  audit_mapping looks for type-tag misuse.
Keyword vocabularies are data, not logic, and can be overridden.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .chartspec import ChartSpec, TimeUnitTransform
from .datatable import DataTable, table_from_cells
from .engine import TupleSet, evaluate, truncate_decimals, values_equal
from .harness import BenchInstance

DEFECT_INCORRECT_QUERY = "IncorrectQuery"
DEFECT_INAPPROPRIATE_MAPPING = "InappropriateMapping"
DEFECT_INCORRECT_DATA = "IncorrectData"
DEFECT_UNSTATED_TIMEUNIT = "UnstatedTimeUnit"
DEFECT_UNSTATED_CHART_TYPE = "UnstatedChartType"

DEFECTS = (
    DEFECT_INCORRECT_QUERY,
    DEFECT_INAPPROPRIATE_MAPPING,
    DEFECT_INCORRECT_DATA,
    DEFECT_UNSTATED_TIMEUNIT,
    DEFECT_UNSTATED_CHART_TYPE,
)

CONFIDENCE_DEFINITE = "definite"
CONFIDENCE_HEURISTIC = "heuristic"

# wording that counts as stating a chart type; "proportion" deliberately
# does not, it merely suggests one
CHART_TYPE_KEYWORDS = ("bar", "pie", "line", "scatter", "stacked", "grouping")

# wording that counts as stating each timeUnit
TIME_UNIT_KEYWORDS: dict[str, tuple[str, ...]] = {
    "year": ("year", "yearly", "annual", "annually"),
    "yearmonth": ("month", "monthly", "year"),
    "month": ("month", "monthly"),
    "day": ("day", "daily", "weekday"),
    "date": ("date", "day"),
    "hours": ("hour", "hourly"),
}

# audit_mapping thresholds for the count-on-scatter-axis heuristic
SMALL_INT_LIMIT = 100
TIE_RATIO = 0.5

# numeric deviation beyond which stored truth data is flagged outright
DEVIATION_LIMIT = 1.0


@dataclass(frozen=True)
class AuditFinding:
    instance_id: str
    defect: str
    confidence: str
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "defect": self.defect,
            "confidence": self.confidence,
            "evidence": dict(self.evidence),
        }


# ---------------------------------------------------------------------------
# content recomputation


def _inline_rows(spec: ChartSpec) -> list[dict] | None:
    if spec.data_source is None:
        return None
    values = spec.data_source.get("values")
    if isinstance(values, list) and values and all(isinstance(v, dict) for v in values):
        return values
    return None


def inline_table(spec: ChartSpec, name: str = "inline") -> DataTable | None:
    """Materialize a spec's inline data values as a DataTable."""
    rows = _inline_rows(spec)
    if rows is None:
        return None
    fields = []
    for row in rows:
        for key in row:
            if key not in fields:
                fields.append(key)
    cells = [[_cell_text(row.get(f)) for f in fields] for row in rows]
    return table_from_cells(name, fields, cells)


def _cell_text(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _spec_without_inline(spec: ChartSpec) -> ChartSpec:
    return ChartSpec(
        mark=spec.mark,
        encoding=spec.encoding,
        transforms=spec.transforms,
        schema_url=spec.schema_url,
        data_source={"url": "data.csv"},
    )


def _split_tuple(fields: list[str], row: tuple) -> tuple[tuple, tuple]:
    """Partition one tuple into (label part, numeric part), field order kept."""
    labels = []
    numbers = []
    for name, value in zip(fields, row):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            numbers.append(value)
        else:
            labels.append(value)
    return tuple(labels), tuple(numbers)


def _keyed(ts: TupleSet) -> dict[tuple, list[tuple]]:
    out: dict[tuple, list[tuple]] = {}
    for row in ts.rows:
        labels, numbers = _split_tuple(ts.fields, row)
        out.setdefault(labels, []).append(numbers)
    return out


def _numbers_match(stored: dict[tuple, list[tuple]], recomputed: dict[tuple, list[tuple]], tol: float = 1e-6) -> bool:
    for key, stored_rows in stored.items():
        other = recomputed.get(key, [])
        if len(other) != len(stored_rows):
            return False
        used = [False] * len(other)
        for srow in stored_rows:
            hit = False
            for i, orow in enumerate(other):
                if used[i] or len(srow) != len(orow):
                    continue
                if all(values_equal(a, b, rel_tol=tol) for a, b in zip(srow, orow)):
                    used[i] = True
                    hit = True
                    break
            if not hit:
                return False
    return True


def _max_deviation(stored: dict[tuple, list[tuple]], recomputed: dict[tuple, list[tuple]]) -> float:
    worst = 0.0
    for key, stored_rows in stored.items():
        other = recomputed.get(key)
        if not other or len(other) != len(stored_rows):
            continue
        for srow, orow in zip(sorted(stored_rows), sorted(other)):
            for a, b in zip(srow, orow):
                worst = max(worst, abs(float(a) - float(b)))
    return worst


def audit_content(instance: BenchInstance) -> list[AuditFinding]:
    """Recompute an inline-data truth from the raw table and diff the two.

    Instances whose truth reads data by URL have no stored copy to check.
    """
    spec = instance.truth
    stored_table = inline_table(spec)
    if stored_table is None:
        return []

    try:
        stored = evaluate(spec, stored_table)
        recomputed = evaluate(_spec_without_inline(spec), instance.table)
    except Exception as exc:
        return [
            AuditFinding(
                instance.instance_id,
                DEFECT_INCORRECT_DATA,
                CONFIDENCE_HEURISTIC,
                evidence={"reason": f"truth not evaluable: {exc}"},
            )
        ]

    stored_keyed = _keyed(stored)
    recomputed_keyed = _keyed(recomputed)

    if stored_keyed.keys() == recomputed_keyed.keys():
        if _numbers_match(stored_keyed, recomputed_keyed):
            return []
        # same labels, different numbers: decide between truncation artifact,
        # bounded deviation, and a wholesale different answer
        numeric_fields = [
            f for f in _measure_fields(spec) if instance.table.kind_of(f) == "real"
        ]
        for fld in numeric_fields:
            try:
                truncated = evaluate(_spec_without_inline(spec), truncate_decimals(instance.table, fld))
            except Exception:
                continue
            if _numbers_match(stored_keyed, _keyed(truncated)):
                return [
                    AuditFinding(
                        instance.instance_id,
                        DEFECT_INCORRECT_DATA,
                        CONFIDENCE_DEFINITE,
                        evidence={"kind": "decimal-truncation", "field": fld},
                    )
                ]
        deviation = _max_deviation(stored_keyed, recomputed_keyed)
        mismatched = _mismatch_count(stored_keyed, recomputed_keyed)
        if mismatched == len(stored_keyed) and len(stored_keyed) > 1:
            return [
                AuditFinding(
                    instance.instance_id,
                    DEFECT_INCORRECT_QUERY,
                    CONFIDENCE_DEFINITE,
                    evidence={
                        "kind": "entirely-different-answer",
                        "stored": _evidence_rows(stored),
                        "recomputed": _evidence_rows(recomputed),
                    },
                )
            ]
        if deviation > DEVIATION_LIMIT:
            return [
                AuditFinding(
                    instance.instance_id,
                    DEFECT_INCORRECT_DATA,
                    CONFIDENCE_DEFINITE,
                    evidence={"kind": "numeric-deviation", "max_abs_deviation": deviation},
                )
            ]
        return []

    missing = sorted(set(recomputed_keyed) - set(stored_keyed))
    extra = sorted(set(stored_keyed) - set(recomputed_keyed))
    if missing and not extra:
        return [
            AuditFinding(
                instance.instance_id,
                DEFECT_INCORRECT_DATA,
                CONFIDENCE_DEFINITE,
                evidence={"kind": "missing-labels", "missing": [list(m) for m in missing]},
            )
        ]
    return [
        AuditFinding(
            instance.instance_id,
            DEFECT_INCORRECT_QUERY,
            CONFIDENCE_DEFINITE,
            evidence={
                "kind": "label-sets-differ",
                "missing": [list(m) for m in missing],
                "extra": [list(e) for e in extra],
            },
        )
    ]


def _mismatch_count(stored: dict[tuple, list[tuple]], recomputed: dict[tuple, list[tuple]]) -> int:
    count = 0
    for key, stored_rows in stored.items():
        if not _numbers_match({key: stored_rows}, {key: recomputed.get(key, [])}):
            count += 1
    return count


def _evidence_rows(ts: TupleSet) -> list[list]:
    return [[_jsonable(v) for v in row] for row in ts.rows[:20]]


def _jsonable(v):
    from datetime import datetime

    return v.isoformat() if isinstance(v, datetime) else v


def _measure_fields(spec: ChartSpec) -> list[str]:
    out = []
    from .chartspec import AggregateTransform

    for t in spec.transforms:
        if isinstance(t, AggregateTransform):
            for op in t.ops:
                if op.field is not None and op.field not in out:
                    out.append(op.field)
    for fd in spec.encoding.values():
        if fd.aggregate is not None and fd.field is not None and fd.field not in out:
            out.append(fd.field)
        elif fd.field is not None and fd.type_tag == "quantitative" and fd.field not in out:
            out.append(fd.field)
    return out


# ---------------------------------------------------------------------------
# query text


def _mentions(query: str, keywords: tuple[str, ...]) -> bool:
    lowered = query.lower()
    return any(re.search(rf"\b{re.escape(k)}", lowered) for k in keywords)


def _truth_time_units(spec: ChartSpec) -> list[str]:
    units = [t.unit for t in spec.transforms if isinstance(t, TimeUnitTransform)]
    units += [fd.time_unit for fd in spec.encoding.values() if fd.time_unit is not None]
    return units


def audit_query_text(
    instance: BenchInstance,
    chart_keywords: tuple[str, ...] = CHART_TYPE_KEYWORDS,
    unit_keywords: dict[str, tuple[str, ...]] | None = None,
) -> list[AuditFinding]:
    """Flag truths whose queries never state what the truth assumes."""
    findings = []
    if not any(_mentions(q, chart_keywords) for q in instance.queries):
        findings.append(
            AuditFinding(
                instance.instance_id,
                DEFECT_UNSTATED_CHART_TYPE,
                CONFIDENCE_HEURISTIC,
                evidence={"chart_type": instance.chart_type, "queries": list(instance.queries)},
            )
        )
    vocab = unit_keywords or TIME_UNIT_KEYWORDS
    for unit in _truth_time_units(instance.truth):
        words = vocab.get(unit, (unit,))
        if not any(_mentions(q, words) for q in instance.queries):
            findings.append(
                AuditFinding(
                    instance.instance_id,
                    DEFECT_UNSTATED_TIMEUNIT,
                    CONFIDENCE_HEURISTIC,
                    evidence={"time_unit": unit, "queries": list(instance.queries)},
                )
            )
    return findings


# ---------------------------------------------------------------------------
# mapping


def audit_mapping(
    instance: BenchInstance,
    small_int_limit: int = SMALL_INT_LIMIT,
    tie_ratio: float = TIE_RATIO,
) -> list[AuditFinding]:
    """Type-tag misuse in the truth encoding, judged against column kinds."""
    findings = []
    table = instance.table
    for ch, fd in instance.truth.encoding.items():
        if fd.field is None or fd.aggregate is not None:
            continue
        kind = table.kind_of(fd.field)
        if kind is None:
            continue
        if kind == "datetime" and fd.type_tag == "nominal":
            findings.append(
                AuditFinding(
                    instance.instance_id,
                    DEFECT_INAPPROPRIATE_MAPPING,
                    CONFIDENCE_HEURISTIC,
                    evidence={"channel": ch, "field": fd.field, "kind": kind, "type_tag": fd.type_tag},
                )
            )
        elif (
            instance.truth.mark == "point"
            and ch in ("x", "y")
            and fd.type_tag == "quantitative"
            and kind == "integer"
        ):
            values = [v for v in table.column_values(fd.field) if isinstance(v, int)]
            if values and max(abs(v) for v in values) <= small_int_limit:
                distinct = len(set(values))
                if distinct <= max(1, int(len(values) * tie_ratio)):
                    findings.append(
                        AuditFinding(
                            instance.instance_id,
                            DEFECT_INAPPROPRIATE_MAPPING,
                            CONFIDENCE_HEURISTIC,
                            evidence={
                                "channel": ch,
                                "field": fd.field,
                                "reason": "count-like integers on a scatter axis",
                                "distinct": distinct,
                                "rows": len(values),
                            },
                        )
                    )
    return findings


# ---------------------------------------------------------------------------
# entry point


def audit_instance(instance: BenchInstance) -> list[AuditFinding]:
    return audit_content(instance) + audit_query_text(instance) + audit_mapping(instance)


def audit_benchmark(instances: list[BenchInstance]) -> list[AuditFinding]:
    findings: list[AuditFinding] = []
    for inst in instances:
        findings.extend(audit_instance(inst))
    return findings


def quarantine_list(findings: list[AuditFinding]) -> dict:
    """Exclusion document the harness accepts via its --exclude option."""
    excluded = sorted({f.instance_id for f in findings})
    return {"excluded_instances": excluded}
