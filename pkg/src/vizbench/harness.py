"""Benchmark orchestration: ingest instances, run a strategy, roll up rates.

A benchmark directory holds one subdirectory per instance with meta.json,
truth.vl.json, and the data CSV.  Each (instance, query) pair is one
attempt; its verdict comes from the first failing stage in the fixed order
JSON, grammar and evaluability, chart type, then content.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .chartspec import ChartSpec, chart_type_of, parse_spec
from .datatable import DataTable, load_csv
from .equivalence import EvaluationFailed, match_svg_json
from .gateway import Gateway
from .prompting import (
    DEFAULT_SAMPLE_ROWS,
    FewShotExemplar,
    STRATEGY_FEW_SHOT,
    build_prompt,
    load_default_exemplars,
)

VERDICT_CORRECT = "Correct"
VERDICT_INVALID_JSON = "InvalidJSON"
VERDICT_INVALID_VEGALITE = "InvalidVegaLite"
VERDICT_TYPE_MISMATCH = "ChartTypeMismatch"
VERDICT_CONTENT_MISMATCH = "ChartContentMismatch"

VERDICTS = (
    VERDICT_CORRECT,
    VERDICT_INVALID_JSON,
    VERDICT_INVALID_VEGALITE,
    VERDICT_TYPE_MISMATCH,
    VERDICT_CONTENT_MISMATCH,
)
ERROR_VERDICTS = VERDICTS[1:]

HARDNESS_LEVELS = ("Easy", "Medium", "Hard", "ExtraHard")

_HARDNESS_ALIASES = {
    "easy": "Easy",
    "medium": "Medium",
    "hard": "Hard",
    "extrahard": "ExtraHard",
    "extra hard": "ExtraHard",
    "extra_hard": "ExtraHard",
    "extra-hard": "ExtraHard",
}


class UnknownInstance(KeyError):
    pass


@dataclass
class MalformedInstance:
    instance_id: str
    reason: str

    def to_dict(self) -> dict:
        return {"instance_id": self.instance_id, "reason": self.reason}


@dataclass
class BenchInstance:
    instance_id: str
    table: DataTable
    queries: list[str]
    truth: ChartSpec
    truth_text: str
    chart_type: str
    hardness: str
    multi_table: bool = False
    root: Path | None = None


@dataclass
class IngestResult:
    instances: list[BenchInstance]
    errors: list[MalformedInstance] = field(default_factory=list)


@dataclass
class EvalOutcome:
    instance_id: str
    query_index: int
    verdict: str
    detail: dict = field(default_factory=dict)
    response_text: str = ""

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "query_index": self.query_index,
            "verdict": self.verdict,
            "detail": self.detail,
            "response_text": self.response_text,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> EvalOutcome:
        return cls(
            instance_id=doc["instance_id"],
            query_index=int(doc["query_index"]),
            verdict=doc["verdict"],
            detail=doc.get("detail", {}),
            response_text=doc.get("response_text", ""),
        )


# ---------------------------------------------------------------------------
# ingestion


def parse_hardness(raw: str) -> str | None:
    return _HARDNESS_ALIASES.get(str(raw).strip().lower())


def _ingest_one(inst_dir: Path) -> BenchInstance:
    meta_path = inst_dir / "meta.json"
    if not meta_path.is_file():
        raise ValueError("no meta.json")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    instance_id = str(meta.get("id") or inst_dir.name)

    queries = meta.get("queries")
    if not isinstance(queries, list) or not queries or not all(isinstance(q, str) for q in queries):
        raise ValueError("meta.json needs a non-empty queries list")

    hardness = parse_hardness(meta.get("hardness", ""))
    if hardness is None:
        raise ValueError(f"unknown hardness {meta.get('hardness')!r}")

    table_file = meta.get("table_file", "data.csv")
    table_path = inst_dir / table_file
    if not table_path.is_file():
        raise ValueError(f"missing table file {table_file}")
    table = load_csv(table_path, name=table_path.stem)

    truth_path = inst_dir / "truth.vl.json"
    if not truth_path.is_file():
        raise ValueError("missing truth.vl.json")
    truth_text = truth_path.read_text(encoding="utf-8")
    result = parse_spec(truth_text)
    if result.spec is None or not result.report.is_ok:
        raise ValueError(f"truth spec does not parse clean: {result.report.stage}")

    derived_type = chart_type_of(result.spec)
    declared = meta.get("chart_type")
    if declared is not None and str(declared) != derived_type:
        raise ValueError(f"meta declares chart_type {declared!r} but the truth spec is {derived_type}")

    return BenchInstance(
        instance_id=instance_id,
        table=table,
        queries=list(queries),
        truth=result.spec,
        truth_text=truth_text,
        chart_type=derived_type,
        hardness=hardness,
        multi_table=bool(meta.get("multi_table", False)),
        root=inst_dir,
    )


def ingest_benchmark(root: str | Path) -> IngestResult:
    """Walk a benchmark directory; malformed instances are reported, not fatal."""
    root = Path(root)
    instances: list[BenchInstance] = []
    errors: list[MalformedInstance] = []
    for inst_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        try:
            instances.append(_ingest_one(inst_dir))
        except (ValueError, OSError, json.JSONDecodeError) as exc:
            errors.append(MalformedInstance(instance_id=inst_dir.name, reason=str(exc)))
    return IngestResult(instances=instances, errors=errors)


# ---------------------------------------------------------------------------
# classification


def classify_response(response_text: str, truth: ChartSpec, table: DataTable) -> EvalOutcome:
    """Verdict for one model response; stages check in fixed order.

    Raises EvaluationFailed("truth") when the ground truth itself cannot be
    evaluated; that is a benchmark defect, not a model error.
    """
    result = parse_spec(response_text)
    if result.spec is None:
        return EvalOutcome("", -1, VERDICT_INVALID_JSON, detail=result.report.to_dict(), response_text=response_text)
    if not result.report.is_ok:
        return EvalOutcome("", -1, VERDICT_INVALID_VEGALITE, detail=result.report.to_dict(), response_text=response_text)
    try:
        verdict = match_svg_json(result.spec, truth, table)
    except EvaluationFailed as exc:
        if exc.side == "truth":
            raise
        return EvalOutcome(
            "",
            -1,
            VERDICT_INVALID_VEGALITE,
            detail={"stage": "evaluation", "message": str(exc.cause)},
            response_text=response_text,
        )
    if not verdict.type_match:
        return EvalOutcome("", -1, VERDICT_TYPE_MISMATCH, detail=verdict.to_dict(), response_text=response_text)
    if not verdict.content_match:
        return EvalOutcome("", -1, VERDICT_CONTENT_MISMATCH, detail=verdict.to_dict(), response_text=response_text)
    return EvalOutcome("", -1, VERDICT_CORRECT, detail=verdict.to_dict(), response_text=response_text)


# ---------------------------------------------------------------------------
# running


@dataclass
class BenchmarkDefect:
    instance_id: str
    query_index: int
    reason: str

    def to_dict(self) -> dict:
        return {"instance_id": self.instance_id, "query_index": self.query_index, "reason": self.reason}


def _load_existing_outcomes(path: Path) -> dict[tuple[str, int], EvalOutcome]:
    done: dict[tuple[str, int], EvalOutcome] = {}
    if path.is_file():
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            outcome = EvalOutcome.from_dict(json.loads(line))
            done[(outcome.instance_id, outcome.query_index)] = outcome
    return done


def run_experiment(
    instances: list[BenchInstance],
    strategy: str,
    gateway: Gateway,
    out_dir: str | Path | None = None,
    exemplars: list[FewShotExemplar] | None = None,
    max_rows: int = DEFAULT_SAMPLE_ROWS,
) -> list[EvalOutcome]:
    """Run every (instance, query) pair under one strategy.

    Multi-table instances are excluded.  Outcomes append to
    out_dir/outcomes.jsonl as they are decided, in deterministic pair order;
    an interrupted run resumes past pairs already on disk.  Ground-truth
    evaluation failures are routed to out_dir/defects.jsonl instead of being
    charged to the model.
    """
    if strategy == STRATEGY_FEW_SHOT and exemplars is None:
        exemplars = load_default_exemplars()

    runnable = [inst for inst in instances if not inst.multi_table]
    pairs = [(inst, qi) for inst in runnable for qi in range(len(inst.queries))]

    outcomes_path = defects_path = None
    done: dict[tuple[str, int], EvalOutcome] = {}
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        outcomes_path = out_dir / "outcomes.jsonl"
        defects_path = out_dir / "defects.jsonl"
        done = _load_existing_outcomes(outcomes_path)

    def attempt(inst: BenchInstance, qi: int) -> EvalOutcome | BenchmarkDefect:
        bundle = build_prompt(strategy, inst.table, inst.queries[qi], exemplars=exemplars, max_rows=max_rows)
        record = gateway.complete_messages(bundle.messages)
        try:
            outcome = classify_response(record.response_text, inst.truth, inst.table)
        except EvaluationFailed as exc:
            return BenchmarkDefect(inst.instance_id, qi, f"truth not evaluable: {exc.cause}")
        outcome.instance_id = inst.instance_id
        outcome.query_index = qi
        return outcome

    pending = [(inst, qi) for inst, qi in pairs if (inst.instance_id, qi) not in done]
    results: dict[tuple[str, int], EvalOutcome | BenchmarkDefect] = {}
    if pending:
        with ThreadPoolExecutor(max_workers=gateway.concurrency) as pool:
            futures = {(inst.instance_id, qi): pool.submit(attempt, inst, qi) for inst, qi in pending}
            # collect in submission order so streamed output is deterministic
            for inst, qi in pending:
                results[(inst.instance_id, qi)] = futures[(inst.instance_id, qi)].result()

    outcomes: list[EvalOutcome] = []
    for inst, qi in pairs:
        key = (inst.instance_id, qi)
        if key in done:
            outcomes.append(done[key])
            continue
        result = results[key]
        if isinstance(result, BenchmarkDefect):
            if defects_path is not None:
                with defects_path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(result.to_dict(), ensure_ascii=False) + "\n")
            continue
        outcomes.append(result)
        if outcomes_path is not None:
            with outcomes_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(result.to_dict(), ensure_ascii=False) + "\n")
    return outcomes


# ---------------------------------------------------------------------------
# aggregation


@dataclass
class StratumStats:
    correct: int = 0
    attempted: int = 0

    @property
    def rate(self) -> float:
        return self.correct / self.attempted if self.attempted else 0.0

    def to_dict(self) -> dict:
        return {"correct": self.correct, "attempted": self.attempted, "rate": self.rate}


@dataclass
class AccuracyReport:
    name: str
    overall: StratumStats
    by_chart_type: dict[str, StratumStats]
    by_hardness: dict[str, StratumStats]
    error_distribution: dict[str, float]
    error_counts: dict[str, int]
    pixel_accuracy: float | None = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "overall": self.overall.to_dict(),
            "by_chart_type": {k: v.to_dict() for k, v in self.by_chart_type.items()},
            "by_hardness": {k: v.to_dict() for k, v in self.by_hardness.items()},
            "error_distribution": dict(self.error_distribution),
            "error_counts": dict(self.error_counts),
            "pixel_accuracy": self.pixel_accuracy,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> AccuracyReport:
        def stats(d: dict) -> StratumStats:
            return StratumStats(correct=int(d["correct"]), attempted=int(d["attempted"]))

        return cls(
            name=doc.get("name", "run"),
            overall=stats(doc["overall"]),
            by_chart_type={k: stats(v) for k, v in doc.get("by_chart_type", {}).items()},
            by_hardness={k: stats(v) for k, v in doc.get("by_hardness", {}).items()},
            error_distribution={k: float(v) for k, v in doc.get("error_distribution", {}).items()},
            error_counts={k: int(v) for k, v in doc.get("error_counts", {}).items()},
            pixel_accuracy=doc.get("pixel_accuracy"),
        )


def aggregate(
    outcomes: list[EvalOutcome],
    instances: list[BenchInstance],
    name: str = "run",
) -> AccuracyReport:
    """Fold outcomes into per-stratum accuracy; single-threaded on purpose.

    Every rate shares one denominator: all attempted queries.  Strata are
    whatever chart types and hardness levels actually appear.
    """
    by_id = {inst.instance_id: inst for inst in instances}
    overall = StratumStats()
    by_type: dict[str, StratumStats] = {}
    by_hardness: dict[str, StratumStats] = {}
    error_counts: dict[str, int] = {v: 0 for v in ERROR_VERDICTS}

    for outcome in outcomes:
        inst = by_id.get(outcome.instance_id)
        if inst is None:
            raise UnknownInstance(outcome.instance_id)
        correct = outcome.verdict == VERDICT_CORRECT
        overall.attempted += 1
        overall.correct += int(correct)
        t = by_type.setdefault(inst.chart_type, StratumStats())
        t.attempted += 1
        t.correct += int(correct)
        h = by_hardness.setdefault(inst.hardness, StratumStats())
        h.attempted += 1
        h.correct += int(correct)
        if not correct:
            if outcome.verdict not in error_counts:
                raise ValueError(f"unknown verdict {outcome.verdict!r}")
            error_counts[outcome.verdict] += 1

    n = overall.attempted
    error_distribution = {v: (error_counts[v] / n if n else 0.0) for v in ERROR_VERDICTS}
    return AccuracyReport(
        name=name,
        overall=overall,
        by_chart_type=by_type,
        by_hardness=by_hardness,
        error_distribution=error_distribution,
        error_counts=error_counts,
    )


# ---------------------------------------------------------------------------
# comparison tables

# published single-round accuracies used as fixed reference rows
BASELINE_ACCURACIES = (
    ("Seq2Vis", 0.02),
    ("Transformer", 0.03),
    ("ncNet", 0.26),
    ("Chat2VIS", 0.43),
    ("RGVisNet", 0.45),
)


def format_rate(rate: float) -> str:
    return f"{rate * 100:.2f}%"


def render_comparison_table(
    entries: list[tuple[str, float]],
    include_baselines: bool = True,
    fmt: str = "md",
) -> str:
    """Markdown or CSV table of named accuracies next to the baseline rows."""
    rows: list[tuple[str, float]] = []
    if include_baselines:
        rows.extend(BASELINE_ACCURACIES)
    rows.extend(entries)
    if fmt == "csv":
        lines = ["approach,accuracy"]
        lines += [f"{name},{format_rate(rate)}" for name, rate in rows]
        return "\n".join(lines) + "\n"
    if fmt != "md":
        raise ValueError(f"unknown comparison format {fmt!r}")
    width = max(len(name) for name, _ in rows + [("Approach", 0.0)])
    lines = [f"| {'Approach'.ljust(width)} | Accuracy |", f"| {'-' * width} | -------- |"]
    for name, rate in rows:
        lines.append(f"| {name.ljust(width)} | {format_rate(rate).rjust(8)} |")
    return "\n".join(lines) + "\n"
