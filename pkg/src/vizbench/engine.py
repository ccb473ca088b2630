"""Transform pipeline evaluation: what tuples does a chart actually display.

evaluate() runs a spec's transforms against a DataTable and projects onto the
encoded channels, producing a TupleSet, the multiset of displayed tuples.
evaluate_sql_reference() answers the same question for a flat query plan with
deliberately naive nested loops; it shares none of the pipeline machinery and
serves as the oracle the pipeline is tested against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta

from .chartspec import (
    And,
    AggregateTransform,
    BinTransform,
    ChartSpec,
    Comparison,
    FieldDef,
    FilterTransform,
    Membership,
    Not,
    Or,
    Predicate,
    TimeUnitTransform,
    UnknownTransform,
)
from .datatable import DataTable, Value

# numeric equality used while comparing tuples the engine itself produced
ENGINE_REL_TOL = 1e-9

_DAY_ANCHOR = {  # Monday..Sunday onto the first full week of 1970
    0: datetime(1970, 1, 5),
    1: datetime(1970, 1, 6),
    2: datetime(1970, 1, 7),
    3: datetime(1970, 1, 8),
    4: datetime(1970, 1, 9),
    5: datetime(1970, 1, 10),
    6: datetime(1970, 1, 4),
}


class UnresolvedField(KeyError):
    """A spec referenced a field that neither the table nor any transform provides."""

    def __init__(self, field_name: str, where: str = ""):
        self.field_name = field_name
        self.where = where
        super().__init__(f"unresolved field {field_name!r}" + (f" in {where}" if where else ""))


class FieldNotReal(TypeError):
    pass


# ---------------------------------------------------------------------------
# tuple sets


@dataclass
class TupleSet:
    """Multiset of displayed tuples with a canonical (name-sorted) field order."""

    fields: list[str]
    rows: list[tuple]

    @classmethod
    def from_columns(cls, columns: dict[str, list]) -> TupleSet:
        names = sorted(columns)
        length = len(next(iter(columns.values()))) if columns else 0
        rows = [tuple(columns[n][i] for n in names) for i in range(length)]
        return cls(fields=names, rows=rows)

    def column(self, name: str) -> list:
        idx = self.fields.index(name)
        return [r[idx] for r in self.rows]

    def __len__(self) -> int:
        return len(self.rows)


def _sort_key(value):
    # total order over the mixed value domain so multisets can be compared
    if value is None:
        return (0, "")
    if isinstance(value, bool):
        return (1, str(value))
    if isinstance(value, (int, float)):
        return (2, float(value))
    if isinstance(value, datetime):
        return (3, value.isoformat())
    return (4, str(value))


def _row_key(row: tuple):
    return tuple(_sort_key(v) for v in row)


def values_equal(a, b, rel_tol: float = ENGINE_REL_TOL, abs_tol: float = 0.0) -> bool:
    """Tolerant scalar equality across the value kinds the engine produces."""
    if a is None or b is None:
        return a is None and b is None
    a_num = isinstance(a, (int, float)) and not isinstance(a, bool)
    b_num = isinstance(b, (int, float)) and not isinstance(b, bool)
    if a_num and b_num:
        return math.isclose(a, b, rel_tol=rel_tol, abs_tol=abs_tol)
    if isinstance(a, datetime) and isinstance(b, datetime):
        return a == b
    if isinstance(a, str) and isinstance(b, str):
        return a.strip() == b.strip()
    return a == b


def rows_equal(a: list[tuple], b: list[tuple], rel_tol: float = ENGINE_REL_TOL, abs_tol: float = 0.0) -> bool:
    """Multiset equality over rows: sort both sides canonically, compare pairwise."""
    if len(a) != len(b):
        return False
    sa = sorted(a, key=_row_key)
    sb = sorted(b, key=_row_key)
    for ra, rb in zip(sa, sb):
        if len(ra) != len(rb):
            return False
        if not all(values_equal(x, y, rel_tol, abs_tol) for x, y in zip(ra, rb)):
            return False
    return True


def tuplesets_equal(a: TupleSet, b: TupleSet, rel_tol: float = ENGINE_REL_TOL, abs_tol: float = 0.0) -> bool:
    if a.fields != b.fields:
        return False
    return rows_equal(a.rows, b.rows, rel_tol, abs_tol)


# ---------------------------------------------------------------------------
# predicate evaluation


def _coerce_pair(left, right):
    """Align a datum value and a literal for comparison.

    Text that parses as a number is compared numerically against numeric
    literals.  Returns None when the pair is not comparable, which makes the
    enclosing comparison false.
    """
    if left is None or right is None:
        return None
    left_num = isinstance(left, (int, float)) and not isinstance(left, bool)
    right_num = isinstance(right, (int, float)) and not isinstance(right, bool)
    if left_num and right_num:
        return left, right
    if isinstance(left, str) and right_num:
        try:
            return float(left), right
        except ValueError:
            return None
    if left_num and isinstance(right, str):
        try:
            return left, float(right)
        except ValueError:
            return None
    if isinstance(left, datetime) and isinstance(right, str):
        from .datatable import parse_datetime

        parsed = parse_datetime(right)
        return (left, parsed) if parsed is not None else None
    if type(left) is type(right) or (isinstance(left, str) and isinstance(right, str)):
        return left, right
    return None


def eval_predicate(pred: Predicate, datum: dict) -> bool:
    if isinstance(pred, And):
        return all(eval_predicate(p, datum) for p in pred.items)
    if isinstance(pred, Or):
        return any(eval_predicate(p, datum) for p in pred.items)
    if isinstance(pred, Not):
        return not eval_predicate(pred.item, datum)
    if isinstance(pred, Membership):
        if pred.field not in datum:
            raise UnresolvedField(pred.field, "filter")
        value = datum[pred.field]
        return any(values_equal(value, v) or _pair_equal_coerced(value, v) for v in pred.values)
    if isinstance(pred, Comparison):
        if pred.field not in datum:
            raise UnresolvedField(pred.field, "filter")
        pair = _coerce_pair(datum[pred.field], pred.value)
        if pair is None:
            # != over incomparable values stays false: null never matches
            return False
        left, right = pair
        if pred.op == "==":
            return left == right
        if pred.op == "!=":
            return left != right
        if pred.op == "<":
            return left < right
        if pred.op == "<=":
            return left <= right
        if pred.op == ">":
            return left > right
        if pred.op == ">=":
            return left >= right
        raise ValueError(f"unknown comparison op {pred.op!r}")
    raise TypeError(f"not a predicate: {pred!r}")


def _pair_equal_coerced(a, b) -> bool:
    pair = _coerce_pair(a, b)
    return pair is not None and pair[0] == pair[1]


# ---------------------------------------------------------------------------
# scalar derivations


def coerce_temporal(value) -> datetime | None:
    """Interpret a value as a point in time; integers are epoch seconds."""
    if value is None:
        return None
    if isinstance(value, datetime):
        return value
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return datetime(1970, 1, 1) + timedelta(seconds=float(value))
    if isinstance(value, str):
        from .datatable import parse_datetime

        return parse_datetime(value)
    return None


def apply_time_unit(unit: str, value) -> datetime | None:
    """Truncate a timestamp to the given unit.

    Calendar units truncate in place; periodic units (month, day, date,
    hours) land on the 1970 reference timeline, which keeps repeated
    application a no-op.
    """
    ts = coerce_temporal(value)
    if ts is None:
        return None
    if unit == "year":
        return datetime(ts.year, 1, 1)
    if unit == "yearmonth":
        return datetime(ts.year, ts.month, 1)
    if unit == "month":
        return datetime(1970, ts.month, 1)
    if unit == "date":
        return datetime(1970, 1, ts.day)
    if unit == "hours":
        return datetime(1970, 1, 1, ts.hour)
    if unit == "day":
        return _DAY_ANCHOR[ts.weekday()]
    raise ValueError(f"unknown timeUnit {unit!r}")


def nice_bin_step(span: float, maxbins: int) -> float:
    """Smallest step from the {1, 2, 5} x 10^k ladder giving at most maxbins bins."""
    if span <= 0:
        return 1.0
    raw = span / maxbins
    power = math.floor(math.log10(raw))
    for scale in (10.0**power, 10.0 ** (power + 1), 10.0 ** (power + 2)):
        for mult in (1.0, 2.0, 5.0):
            step = mult * scale
            if math.ceil(span / step) <= maxbins:
                return step
    return 10.0 ** (power + 2)


def bin_edges(values: list[float], maxbins: int) -> tuple[float, float]:
    """Return (start, step) aligning bins on step multiples below the minimum."""
    lo = min(values)
    hi = max(values)
    step = nice_bin_step(hi - lo, maxbins)
    start = math.floor(lo / step) * step
    return start, step


def bin_label(value: float, start: float, step: float) -> str:
    idx = math.floor((value - start) / step)
    lo = start + idx * step
    # the division can land on the wrong side of an edge; nudge back in
    while lo > value:
        idx -= 1
        lo = start + idx * step
    while value >= lo + step:
        idx += 1
        lo = start + idx * step
    hi = lo + step

    def fmt(x: float) -> str:
        return str(int(x)) if float(x).is_integer() else str(x)

    return f"[{fmt(lo)}, {fmt(hi)})"


def compute_bins(values: list, maxbins: int) -> dict:
    """Map each numeric value in the column to its half-open interval label."""
    numeric = [v for v in values if isinstance(v, (int, float)) and not isinstance(v, bool)]
    if not numeric:
        return {}
    start, step = bin_edges([float(v) for v in numeric], maxbins)
    return {v: bin_label(float(v), start, step) for v in set(numeric)}


def _aggregate_values(op: str, values: list) -> Value:
    """Reduce a group; count counts rows, everything else drops nulls first."""
    if op == "count":
        return len(values)
    usable = [v for v in values if isinstance(v, (int, float)) and not isinstance(v, bool)]
    if not usable:
        return None
    if op == "sum":
        return sum(usable)
    if op == "mean":
        return sum(usable) / len(usable)
    if op == "min":
        return min(usable)
    if op == "max":
        return max(usable)
    raise ValueError(f"unknown aggregate op {op!r}")


# ---------------------------------------------------------------------------
# pipeline


def _group_rows(rows: list[dict], keys: list[str]) -> list[tuple[tuple, list[dict]]]:
    """Group rows by key fields, first-appearance order preserved."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        key = tuple(_hashable(row.get(k)) for k in keys)
        groups.setdefault(key, []).append(row)
    out = []
    for key, members in groups.items():
        out.append((tuple(members[0].get(k) for k in keys), members))
    return out


def _hashable(value):
    return value if not isinstance(value, float) or not math.isnan(value) else "__nan__"


def _require_field(rows: list[dict], name: str, where: str) -> None:
    if rows and name not in rows[0]:
        raise UnresolvedField(name, where)


def apply_transforms(spec: ChartSpec, table: DataTable) -> list[dict]:
    """Run the transform list against the table, yielding datum dicts."""
    rows = table.as_dicts()
    known = set(table.column_names())
    for i, t in enumerate(spec.transforms):
        where = f"transform {i}"
        if isinstance(t, FilterTransform):
            kept = []
            for row in rows:
                if eval_predicate(t.predicate, row):
                    kept.append(row)
            if not rows:
                _check_predicate_fields(t.predicate, known, where)
            rows = kept
        elif isinstance(t, AggregateTransform):
            for g in t.groupby:
                if g not in known:
                    raise UnresolvedField(g, where)
            for op in t.ops:
                if op.field is not None and op.field not in known:
                    raise UnresolvedField(op.field, where)
            grouped = _group_rows(rows, t.groupby) if t.groupby else ([((), rows)] if rows else [((), [])])
            out = []
            for key_values, members in grouped:
                datum = dict(zip(t.groupby, key_values))
                for op in t.ops:
                    values = members if op.field is None else [m.get(op.field) for m in members]
                    if op.field is None:
                        datum[op.alias] = len(members)
                    else:
                        datum[op.alias] = _aggregate_values(op.op, values)
                out.append(datum)
            rows = out
            known = set(t.groupby) | {op.alias for op in t.ops}
        elif isinstance(t, BinTransform):
            if t.field not in known:
                raise UnresolvedField(t.field, where)
            labels = compute_bins([r.get(t.field) for r in rows], t.maxbins)
            for row in rows:
                v = row.get(t.field)
                row[t.alias] = labels.get(v) if isinstance(v, (int, float)) and not isinstance(v, bool) else None
            known.add(t.alias)
        elif isinstance(t, TimeUnitTransform):
            if t.field not in known:
                raise UnresolvedField(t.field, where)
            for row in rows:
                row[t.alias] = apply_time_unit(t.unit, row.get(t.field))
            known.add(t.alias)
        elif isinstance(t, UnknownTransform):
            raise ValueError(f"cannot evaluate unsupported transform at {where}")
        else:
            raise TypeError(f"not a transform: {t!r}")
    return rows


def _check_predicate_fields(pred: Predicate, known: set[str], where: str) -> None:
    if isinstance(pred, (And, Or)):
        for p in pred.items:
            _check_predicate_fields(p, known, where)
    elif isinstance(pred, Not):
        _check_predicate_fields(pred.item, known, where)
    elif isinstance(pred, (Comparison, Membership)):
        if pred.field not in known:
            raise UnresolvedField(pred.field, where)


def derived_field_name(fd: FieldDef) -> str:
    """Output column name for a channel, mirroring how aliases are formed."""
    name = fd.field
    if fd.time_unit is not None and name is not None:
        name = f"{fd.time_unit}_{name}"
    if fd.bin is not None and name is not None:
        name = f"bin_{name}"
    if fd.aggregate is not None:
        if fd.field is None:
            name = "count"
        elif fd.aggregate == "count":
            name = f"count_{fd.field}"
        else:
            name = f"{fd.aggregate}_{fd.field}"
    if name is None:
        raise UnresolvedField("<missing>", "encoding")
    return name


def evaluate_channels(spec: ChartSpec, table: DataTable) -> dict[str, list]:
    """Evaluate the full pipeline and project per channel.

    Returns row-aligned value lists keyed by channel name.  Encoding-level
    timeUnit and bin derive new values; any encoding-level aggregate groups
    by every non-aggregated channel.
    """
    rows = apply_transforms(spec, table)
    channels = spec.encoding
    if not channels:
        return {}

    plain: list[str] = []  # channels carrying dimension values
    aggregated: list[str] = []
    for ch, fd in channels.items():
        if fd.aggregate is not None:
            aggregated.append(ch)
        else:
            plain.append(ch)

    def derive(fd: FieldDef, row: dict):
        if fd.field is None:
            return None
        if fd.field not in row:
            raise UnresolvedField(fd.field, "encoding")
        v = row[fd.field]
        if fd.time_unit is not None:
            v = apply_time_unit(fd.time_unit, v)
        return v

    # bin labels need the whole column before per-row lookup
    bin_labels: dict[str, dict] = {}
    for ch in plain:
        fd = channels[ch]
        if fd.bin is not None and fd.field is not None:
            _require_field(rows, fd.field, "encoding")
            maxbins = fd.bin if isinstance(fd.bin, int) and fd.bin is not True else 10
            bin_labels[ch] = compute_bins([r.get(fd.field) for r in rows], maxbins)

    def channel_value(ch: str, row: dict):
        fd = channels[ch]
        v = derive(fd, row)
        if ch in bin_labels:
            v = bin_labels[ch].get(v) if isinstance(v, (int, float)) and not isinstance(v, bool) else None
        return v

    if not aggregated:
        if rows:
            for ch in plain:
                fd = channels[ch]
                if fd.field is not None and fd.field not in rows[0]:
                    raise UnresolvedField(fd.field, "encoding")
        return {ch: [channel_value(ch, r) for r in rows] for ch in plain}

    for ch in aggregated:
        fd = channels[ch]
        if fd.field is not None and rows and fd.field not in rows[0]:
            raise UnresolvedField(fd.field, "encoding")

    keyed: dict[tuple, dict] = {}
    order: list[tuple] = []
    for row in rows:
        key = tuple(_hashable(channel_value(ch, row)) for ch in plain)
        if key not in keyed:
            keyed[key] = {"dims": {ch: channel_value(ch, row) for ch in plain}, "rows": []}
            order.append(key)
        keyed[key]["rows"].append(row)

    out: dict[str, list] = {ch: [] for ch in channels}
    for key in order:
        bucket = keyed[key]
        for ch in plain:
            out[ch].append(bucket["dims"][ch])
        for ch in aggregated:
            fd = channels[ch]
            members = bucket["rows"]
            if fd.field is None:
                out[ch].append(len(members))
            else:
                values = [m.get(fd.field) for m in members]
                out[ch].append(
                    len(members) if fd.aggregate == "count" else _aggregate_values(fd.aggregate, values)
                )
    return out


def evaluate(spec: ChartSpec, table: DataTable) -> TupleSet:
    """The multiset of tuples the chart displays, canonically field-ordered."""
    channel_values = evaluate_channels(spec, table)
    columns: dict[str, list] = {}
    for ch, values in channel_values.items():
        name = derived_field_name(spec.encoding[ch])
        if name in columns:
            name = f"{name}__{ch}"
        columns[name] = values
    return TupleSet.from_columns(columns)


# ---------------------------------------------------------------------------
# reference engine


@dataclass
class QueryPlan:
    """Flat relational intent: optional filters, optional group-and-aggregate."""

    filters: list[tuple[str, str, object]] = field(default_factory=list)
    groupby: list[str] = field(default_factory=list)
    aggregates: list[tuple[str, str | None, str]] = field(default_factory=list)  # (op, field, alias)
    projection: list[str] = field(default_factory=list)


def _reference_compare(value, op: str, literal) -> bool:
    # intentionally self-contained: the oracle must not share the pipeline's
    # coercion code
    if value is None or literal is None:
        return False
    both_numeric = isinstance(value, (int, float)) and isinstance(literal, (int, float))
    if not both_numeric:
        if isinstance(value, str) and isinstance(literal, (int, float)):
            try:
                value = float(value)
            except ValueError:
                return False
        elif isinstance(value, (int, float)) and isinstance(literal, str):
            try:
                literal = float(literal)
            except ValueError:
                return False
        elif type(value) is not type(literal):
            return False
    if op == "==":
        return value == literal
    if op == "!=":
        return value != literal
    if op == "<":
        return value < literal
    if op == "<=":
        return value <= literal
    if op == ">":
        return value > literal
    if op == ">=":
        return value >= literal
    raise ValueError(f"unknown op {op!r}")


def evaluate_sql_reference(plan: QueryPlan, table: DataTable) -> TupleSet:
    """Answer a QueryPlan with naive nested loops; the trusted slow path."""
    names = table.column_names()
    rows = [dict(zip(names, row)) for row in table.rows]

    kept = []
    for row in rows:
        ok = True
        for fld, op, literal in plan.filters:
            if not _reference_compare(row[fld], op, literal):
                ok = False
                break
        if ok:
            kept.append(row)

    if not plan.groupby and not plan.aggregates:
        columns = {name: [r[name] for r in kept] for name in plan.projection}
        return TupleSet.from_columns(columns)

    # collect distinct group keys by scanning, then rescan per key
    seen_keys: list[tuple] = []
    for row in kept:
        key = tuple(row[g] for g in plan.groupby)
        already = False
        for s in seen_keys:
            if s == key:
                already = True
                break
        if not already:
            seen_keys.append(key)

    out_columns: dict[str, list] = {name: [] for name in plan.projection}
    for key in seen_keys:
        members = []
        for row in kept:
            if tuple(row[g] for g in plan.groupby) == key:
                members.append(row)
        datum = dict(zip(plan.groupby, key))
        for op, fld, alias in plan.aggregates:
            if op == "count":
                datum[alias] = len(members)
                continue
            total = 0.0
            count = 0
            best = None
            for m in members:
                v = m.get(fld)
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    continue
                count += 1
                total += v
                if best is None:
                    best = (v, v)
                else:
                    best = (min(best[0], v), max(best[1], v))
            if count == 0:
                datum[alias] = None
            elif op == "sum":
                datum[alias] = total
            elif op == "mean":
                datum[alias] = total / count
            elif op == "min":
                datum[alias] = best[0]
            elif op == "max":
                datum[alias] = best[1]
            else:
                raise ValueError(f"unknown aggregate op {op!r}")
        for name in plan.projection:
            out_columns[name].append(datum[name])
    return TupleSet.from_columns(out_columns)


def translate_plan(plan: QueryPlan, mark: str = "point") -> ChartSpec:
    """Express a QueryPlan as a chart so the pipeline can answer it."""
    transforms: list = []
    if plan.filters:
        preds: list[Predicate] = [Comparison(op, fld, literal) for fld, op, literal in plan.filters]
        transforms.append(FilterTransform(preds[0] if len(preds) == 1 else And(preds)))
    if plan.aggregates or plan.groupby:
        from .chartspec import AggregateOp

        ops = [AggregateOp(op=op, field=fld, alias=alias) for op, fld, alias in plan.aggregates]
        transforms.append(AggregateTransform(ops=ops, groupby=list(plan.groupby)))
    channels = ("x", "y", "color")
    if len(plan.projection) > len(channels):
        raise ValueError("plans project onto at most three fields")
    encoding = {
        channels[i]: FieldDef(field=name, type_tag="nominal")
        for i, name in enumerate(plan.projection)
    }
    return ChartSpec(mark=mark, encoding=encoding, transforms=transforms)


# ---------------------------------------------------------------------------
# decimal truncation


def truncate_decimals(table: DataTable, field_name: str) -> DataTable:
    """Copy the table with one real column's values truncated toward zero."""
    kind = table.kind_of(field_name)
    if kind is None:
        raise UnresolvedField(field_name, "truncate_decimals")
    if kind != "real":
        raise FieldNotReal(f"{field_name!r} has kind {kind}, expected real")
    idx = table.column_names().index(field_name)
    rows = []
    for row in table.rows:
        value = row[idx]
        if isinstance(value, float):
            value = float(math.trunc(value))
        rows.append(row[:idx] + (value,) + row[idx + 1 :])
    return DataTable(name=table.name, columns=list(table.columns), rows=rows)
