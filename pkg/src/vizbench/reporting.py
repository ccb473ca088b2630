"""Report rendering: delimited text plus headless figure files.

The report path writes markdown, CSV, and JSON forms of an AccuracyReport
and renders summary figures (accuracy by chart type, accuracy by hardness,
verdict distribution) as PNGs alongside them.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .chartspec import BenchChartType
from .harness import (
    AccuracyReport,
    ERROR_VERDICTS,
    HARDNESS_LEVELS,
    format_rate,
)

CHART_TYPE_LABELS = {
    BenchChartType.BAR: "Bar",
    BenchChartType.PIE: "Pie",
    BenchChartType.LINE: "Line",
    BenchChartType.SCATTER: "Scatter",
    BenchChartType.STACKED_BAR: "Stacked bar",
    BenchChartType.GROUPING_LINE: "Grouping line",
    BenchChartType.GROUPING_SCATTER: "Grouping scatter",
}

VERDICT_LABELS = {
    "InvalidJSON": "Invalid JSON",
    "InvalidVegaLite": "Invalid Vega-Lite",
    "ChartTypeMismatch": "Chart Type Mismatch",
    "ChartContentMismatch": "Chart Content Mismatch",
}

# presentation order mirrors the published tables
CHART_TYPE_ORDER = (
    BenchChartType.BAR,
    BenchChartType.PIE,
    BenchChartType.SCATTER,
    BenchChartType.STACKED_BAR,
    BenchChartType.GROUPING_SCATTER,
    BenchChartType.LINE,
    BenchChartType.GROUPING_LINE,
)


def _present_types(report: AccuracyReport) -> list[str]:
    return [t for t in CHART_TYPE_ORDER if t in report.by_chart_type]


def _present_hardness(report: AccuracyReport) -> list[str]:
    return [h for h in HARDNESS_LEVELS if h in report.by_hardness]


def render_markdown(report: AccuracyReport) -> str:
    lines = [f"# Accuracy report: {report.name}", ""]
    lines.append(f"Attempted queries: {report.overall.attempted}")
    lines.append("")
    header = ["Overall"] + [CHART_TYPE_LABELS.get(t, t) for t in _present_types(report)]
    header += [{"ExtraHard": "Extra hard"}.get(h, h) for h in _present_hardness(report)]
    values = [format_rate(report.overall.rate)]
    values += [format_rate(report.by_chart_type[t].rate) for t in _present_types(report)]
    values += [format_rate(report.by_hardness[h].rate) for h in _present_hardness(report)]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "|".join([" --- "] * len(header)) + "|")
    lines.append("| " + " | ".join(values) + " |")
    lines.append("")
    lines.append("## Error distribution")
    lines.append("")
    lines.append("| " + " | ".join(VERDICT_LABELS[v] for v in ERROR_VERDICTS) + " |")
    lines.append("|" + "|".join([" --- "] * len(ERROR_VERDICTS)) + "|")
    lines.append("| " + " | ".join(format_rate(report.error_distribution[v]) for v in ERROR_VERDICTS) + " |")
    lines.append("")
    if report.pixel_accuracy is not None:
        lines.append(f"Pixel-level accuracy: {format_rate(report.pixel_accuracy)}")
        lines.append("")
    return "\n".join(lines)


def render_csv(report: AccuracyReport) -> str:
    lines = ["stratum,label,correct,attempted,rate"]
    lines.append(f"overall,overall,{report.overall.correct},{report.overall.attempted},{format_rate(report.overall.rate)}")
    for t in _present_types(report):
        s = report.by_chart_type[t]
        lines.append(f"chart_type,{CHART_TYPE_LABELS.get(t, t)},{s.correct},{s.attempted},{format_rate(s.rate)}")
    for h in _present_hardness(report):
        s = report.by_hardness[h]
        lines.append(f"hardness,{h},{s.correct},{s.attempted},{format_rate(s.rate)}")
    for v in ERROR_VERDICTS:
        lines.append(
            f"error,{VERDICT_LABELS[v]},{report.error_counts[v]},{report.overall.attempted},"
            f"{format_rate(report.error_distribution[v])}"
        )
    return "\n".join(lines) + "\n"


def render_json(report: AccuracyReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# figures


def _bar_figure(path: Path, labels: list[str], rates: list[float], title: str) -> None:
    fig, ax = plt.subplots(figsize=(max(4.0, 1.1 * len(labels)), 3.2))
    ax.bar(range(len(labels)), [r * 100 for r in rates], color="#4C72B0")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel("accuracy (%)")
    ax.set_ylim(0, 100)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_figures(report: AccuracyReport, out_dir: str | Path) -> list[Path]:
    """Write the summary PNGs; returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    types = _present_types(report)
    if types:
        path = out_dir / "accuracy_by_chart_type.png"
        _bar_figure(
            path,
            [CHART_TYPE_LABELS.get(t, t) for t in types],
            [report.by_chart_type[t].rate for t in types],
            "Accuracy by chart type",
        )
        written.append(path)

    hardness = _present_hardness(report)
    if hardness:
        path = out_dir / "accuracy_by_hardness.png"
        _bar_figure(path, hardness, [report.by_hardness[h].rate for h in hardness], "Accuracy by hardness")
        written.append(path)

    path = out_dir / "verdict_distribution.png"
    labels = ["Correct"] + [VERDICT_LABELS[v] for v in ERROR_VERDICTS]
    rates = [report.overall.rate] + [report.error_distribution[v] for v in ERROR_VERDICTS]
    _bar_figure(path, labels, rates, "Verdict distribution")
    written.append(path)
    return written


def write_report(
    report: AccuracyReport,
    out_dir: str | Path,
    figures: bool = True,
) -> dict[str, Path]:
    """Write report.md, report.csv, report.json and, by default, the figures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "md": out_dir / "report.md",
        "csv": out_dir / "report.csv",
        "json": out_dir / "report.json",
    }
    paths["md"].write_text(render_markdown(report), encoding="utf-8")
    paths["csv"].write_text(render_csv(report), encoding="utf-8")
    paths["json"].write_text(render_json(report), encoding="utf-8")
    if figures:
        for p in render_figures(report, out_dir / "figures"):
            paths[p.stem] = p
    return paths
