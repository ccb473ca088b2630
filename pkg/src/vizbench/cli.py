"""Command-line front end.

Subcommands:
  eval run      run a strategy over a benchmark directory
  eval report   aggregate an output directory into report files and figures
  eval compare  tabulate several report.json files against the baselines
  lint          check spec files; --fix rewrites what it can
  audit         probe a benchmark for ground-truth defects
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import auditor, harness, linter, reporting
from .chartspec import parse_spec, serialize_spec
from .gateway import Gateway, GatewayConfig, MODES
from .prompting import STRATEGIES, load_default_exemplars, load_exemplars


def _eval_run(args: argparse.Namespace) -> int:
    result = harness.ingest_benchmark(args.benchmark)
    for err in result.errors:
        print(f"malformed instance {err.instance_id}: {err.reason}", file=sys.stderr)
    instances = result.instances

    if args.exclude:
        doc = json.loads(Path(args.exclude).read_text(encoding="utf-8"))
        excluded = set(doc.get("excluded_instances", []))
        instances = [i for i in instances if i.instance_id not in excluded]

    config = GatewayConfig.from_env(mode=args.backend, store_dir=args.replay_store)
    if args.model:
        config.model_id = args.model
    if args.workers:
        config.concurrency = args.workers
    gateway = Gateway(config)

    exemplars = None
    if args.strategy == "few-shot":
        exemplars = load_exemplars(args.exemplars) if args.exemplars else load_default_exemplars()

    out_dir = Path(args.out)
    outcomes = harness.run_experiment(instances, args.strategy, gateway, out_dir=out_dir, exemplars=exemplars)

    instances_doc = [
        {
            "instance_id": i.instance_id,
            "chart_type": i.chart_type,
            "hardness": i.hardness,
            "queries": len(i.queries),
            "multi_table": i.multi_table,
        }
        for i in instances
    ]
    (out_dir / "instances.json").write_text(
        json.dumps({"strategy": args.strategy, "instances": instances_doc}, indent=2) + "\n",
        encoding="utf-8",
    )
    print(f"{len(outcomes)} outcomes -> {out_dir / 'outcomes.jsonl'}")
    return 0


def _eval_report(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    outcomes_path = out_dir / "outcomes.jsonl"
    instances_path = out_dir / "instances.json"
    if not outcomes_path.is_file() or not instances_path.is_file():
        print(f"{out_dir} has no run output", file=sys.stderr)
        return 2
    outcomes = [
        harness.EvalOutcome.from_dict(json.loads(line))
        for line in outcomes_path.read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    meta = json.loads(instances_path.read_text(encoding="utf-8"))
    instances = [
        harness.BenchInstance(
            instance_id=doc["instance_id"],
            table=None,  # aggregation only needs strata
            queries=[""] * int(doc.get("queries", 1)),
            truth=None,
            truth_text="",
            chart_type=doc["chart_type"],
            hardness=doc["hardness"],
            multi_table=bool(doc.get("multi_table", False)),
        )
        for doc in meta["instances"]
    ]
    report = harness.aggregate(outcomes, instances, name=meta.get("strategy", "run"))
    paths = reporting.write_report(report, out_dir, figures=not args.no_figures)
    selected = {"md": reporting.render_markdown, "csv": reporting.render_csv, "json": reporting.render_json}
    print(selected[args.format](report))
    print(f"written: {', '.join(str(p) for p in paths.values())}", file=sys.stderr)
    return 0


def _eval_compare(args: argparse.Namespace) -> int:
    entries = []
    for path in args.reports:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        report = harness.AccuracyReport.from_dict(doc)
        entries.append((report.name, report.overall.rate))
    print(harness.render_comparison_table(entries, include_baselines=not args.no_baselines, fmt=args.format), end="")
    return 0


def _lint_paths(target: Path) -> list[Path]:
    if target.is_dir():
        return sorted(p for p in target.rglob("*.json") if p.is_file())
    return [target]


def _lint(args: argparse.Namespace) -> int:
    target = Path(args.path)
    if not target.exists():
        print(f"no such path: {target}", file=sys.stderr)
        return 2
    worst = 0
    for path in _lint_paths(target):
        text = path.read_text(encoding="utf-8")
        findings = linter.lint(text)
        if args.fix and findings:
            result = parse_spec(text)
            if result.spec is not None:
                fixed, applied = linter.fix(result.spec, findings)
                if applied:
                    path.write_text(serialize_spec(fixed) + "\n", encoding="utf-8")
                    findings = linter.lint(path.read_text(encoding="utf-8"))
        for f in findings:
            print(json.dumps({"file": str(path), **f.to_dict()}, ensure_ascii=False))
        if linter.error_count(findings):
            worst = max(worst, 2)
        elif findings:
            worst = max(worst, 1)
    return worst


def _audit(args: argparse.Namespace) -> int:
    result = harness.ingest_benchmark(args.benchmark)
    for err in result.errors:
        print(f"malformed instance {err.instance_id}: {err.reason}", file=sys.stderr)
    findings = auditor.audit_benchmark(result.instances)
    if args.format == "md":
        print("| instance | defect | confidence |")
        print("| --- | --- | --- |")
        for f in findings:
            print(f"| {f.instance_id} | {f.defect} | {f.confidence} |")
    else:
        for f in findings:
            print(json.dumps(f.to_dict(), ensure_ascii=False))
    if args.quarantine:
        doc = auditor.quarantine_list(findings)
        Path(args.quarantine).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        print(f"quarantine list -> {args.quarantine}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vizbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    eval_cmd = sub.add_parser("eval", help="run and summarize experiments")
    eval_sub = eval_cmd.add_subparsers(dest="eval_command", required=True)

    run_cmd = eval_sub.add_parser("run", help="run a strategy over a benchmark")
    run_cmd.add_argument("--benchmark", required=True, help="benchmark directory")
    run_cmd.add_argument("--strategy", required=True, choices=STRATEGIES)
    run_cmd.add_argument("--backend", required=True, choices=MODES)
    run_cmd.add_argument("--out", required=True, help="output directory")
    run_cmd.add_argument("--replay-store", default=None, help="replay store directory")
    run_cmd.add_argument("--exclude", default=None, help="quarantine JSON with excluded_instances")
    run_cmd.add_argument("--exemplars", default=None, help="exemplar directory for few-shot")
    run_cmd.add_argument("--model", default=None, help="model id override")
    run_cmd.add_argument("--workers", type=int, default=None, help="request concurrency")
    run_cmd.set_defaults(func=_eval_run)

    report_cmd = eval_sub.add_parser("report", help="aggregate run output")
    report_cmd.add_argument("--out", required=True, help="run output directory")
    report_cmd.add_argument("--format", default="md", choices=("md", "csv", "json"))
    report_cmd.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    report_cmd.set_defaults(func=_eval_report)

    compare_cmd = eval_sub.add_parser("compare", help="tabulate report.json files")
    compare_cmd.add_argument("reports", nargs="+", help="report.json paths")
    compare_cmd.add_argument("--format", default="md", choices=("md", "csv"))
    compare_cmd.add_argument("--no-baselines", action="store_true")
    compare_cmd.set_defaults(func=_eval_compare)

    lint_cmd = sub.add_parser("lint", help="lint spec files")
    lint_cmd.add_argument("path", help="spec file or directory")
    lint_cmd.add_argument("--fix", action="store_true", help="rewrite files with applied fixes")
    lint_cmd.set_defaults(func=_lint)

    audit_cmd = sub.add_parser("audit", help="audit benchmark ground truths")
    audit_cmd.add_argument("benchmark", help="benchmark directory")
    audit_cmd.add_argument("--quarantine", default=None, help="write exclusion list here")
    audit_cmd.add_argument("--format", default="jsonl", choices=("jsonl", "md"))
    audit_cmd.set_defaults(func=_audit)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
