"""Prompt construction for the three generation strategies.

All three strategies share one user-message skeleton: task sentence, the
query fenced in backticks, a sampled slice of the table as CSV, then the two
output-format directives.  zero-shot appends the five generation rules;
few-shot prepends one worked example per chart type.  Everything here is
pure string assembly, so identical inputs give identical bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .datatable import DataTable, render_csv
from . import linter

STRATEGY_BASE = "base"
STRATEGY_ZERO_SHOT = "zero-shot"
STRATEGY_FEW_SHOT = "few-shot"
STRATEGIES = (STRATEGY_BASE, STRATEGY_ZERO_SHOT, STRATEGY_FEW_SHOT)

DEFAULT_SAMPLE_ROWS = 30

SYSTEM_MESSAGE = (
    "You are a data analysis assistant that uses Vega-Lite to create data "
    "visualizations, and you should only output the json format specification "
    "of Vega-Lite."
)

DATA_URL_DIRECTIVE = 'The "data" attribute of the Vega-Lite output must be: {"url": "data.csv"}'
OUTPUT_FORMAT_DIRECTIVE = "Just output the json format, with no more other words."

RULES = (
    'Rule 1: The "$schema" property should be: "https://vega.github.io/schema/vega-lite/v5.json".',
    'Rule 2: The "transform" property should be put ahead of the "encoding" property.',
    'Rule 3: Pay attention to the query description to determine whether you should use "filter" transformation in the "transform" property.',
    'Rule 4: If you use "aggregate" operation in the "transform" property, the "groupby" property of "aggregate" should be correctly specified.',
    'Rule 5: Make sure no "sort" operations exist in the "transform" property, you should define the order of axes only in the "encoding" property.',
)

EXEMPLAR_HEADER = "Here are some examples that show the high-quality Vega-Lite specifications for different queries."

# prompt order of the worked examples; scatter leads as Case 1
EXEMPLAR_ORDER = ("scatter", "bar", "pie", "line", "stacked_bar", "grouping_line", "grouping_scatter")

CHART_TYPE_LABEL = {
    "scatter": "a scatter plot",
    "bar": "a bar chart",
    "pie": "a pie chart",
    "line": "a line chart",
    "stacked_bar": "a stacked bar chart",
    "grouping_line": "a grouping line chart",
    "grouping_scatter": "a grouping scatter chart",
}


class ExemplarSetIncomplete(ValueError):
    def __init__(self, missing: list[str], reason: str = "missing exemplars"):
        self.missing = missing
        super().__init__(f"{reason}: {', '.join(missing)}" if missing else reason)


class TokenBudgetExceeded(ValueError):
    def __init__(self, estimate: int, limit: int):
        self.estimate = estimate
        self.limit = limit
        super().__init__(f"prompt estimates {estimate} tokens, over the {limit} limit")


@dataclass(frozen=True)
class FewShotExemplar:
    chart_type: str
    query: str
    spec_text: str


@dataclass
class PromptBundle:
    strategy: str
    messages: list[dict[str, str]] = field(default_factory=list)
    token_estimate: int = 0

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "messages": list(self.messages),
            "token_estimate": self.token_estimate,
        }


# ---------------------------------------------------------------------------
# sizing


def token_estimate(text: str) -> int:
    """Budgeting heuristic: four characters per token, rounded up."""
    return math.ceil(len(text) / 4)


def sample_table(table: DataTable, max_rows: int = DEFAULT_SAMPLE_ROWS, token_budget: int | None = None) -> str:
    """CSV text of the header and first rows, trimmed to fit a token budget.

    Sampling is a deterministic head take; the same table always yields the
    same bytes.  With a budget, rows are dropped from the tail until the
    estimate fits (the header always stays).
    """
    k = min(max_rows, len(table.rows))
    text = render_csv(table, max_rows=k)
    if token_budget is None:
        return text
    while k > 0 and token_estimate(text) > token_budget:
        k -= 1
        text = render_csv(table, max_rows=k)
    return text


# ---------------------------------------------------------------------------
# exemplars


def load_exemplars(directory: str | Path) -> list[FewShotExemplar]:
    """Read the exemplar directory and vet it.

    Every chart type must have a ``<type>.query.txt`` / ``<type>.spec.json``
    pair, every spec must lint clean of errors, and the set as a whole must
    demonstrate sorting, filtering, and aggregation somewhere.
    """
    directory = Path(directory)
    exemplars: list[FewShotExemplar] = []
    missing: list[str] = []
    for chart_type in EXEMPLAR_ORDER:
        query_path = directory / f"{chart_type}.query.txt"
        spec_path = directory / f"{chart_type}.spec.json"
        if not query_path.is_file() or not spec_path.is_file():
            missing.append(chart_type)
            continue
        query = query_path.read_text(encoding="utf-8").strip()
        spec_text = spec_path.read_text(encoding="utf-8").rstrip("\n")
        exemplars.append(FewShotExemplar(chart_type=chart_type, query=query, spec_text=spec_text))
    if missing:
        raise ExemplarSetIncomplete(missing)

    for ex in exemplars:
        findings = linter.lint(ex.spec_text)
        errors = [f for f in findings if f.severity == linter.SEVERITY_ERROR]
        if errors:
            raise ExemplarSetIncomplete(
                [ex.chart_type], reason=f"exemplar fails lint ({errors[0].rule_id})"
            )

    combined = " ".join(ex.spec_text for ex in exemplars)
    for feature, needle in (("sorting", '"sort"'), ("filtering", '"filter"'), ("aggregation", '"aggregate"')):
        if needle not in combined:
            raise ExemplarSetIncomplete([], reason=f"exemplar set demonstrates no {feature}")
    return exemplars


def default_exemplar_dir() -> Path:
    return Path(__file__).parent / "exemplars"


def load_default_exemplars() -> list[FewShotExemplar]:
    return load_exemplars(default_exemplar_dir())


def render_exemplar_block(exemplars: list[FewShotExemplar]) -> str:
    by_type = {ex.chart_type: ex for ex in exemplars}
    missing = [t for t in EXEMPLAR_ORDER if t not in by_type]
    if missing:
        raise ExemplarSetIncomplete(missing)
    parts = [EXEMPLAR_HEADER]
    for i, chart_type in enumerate(EXEMPLAR_ORDER, start=1):
        ex = by_type[chart_type]
        parts.append(f"Case {i} is {CHART_TYPE_LABEL[chart_type]}:")
        parts.append("The query is:")
        parts.append(f"```{ex.query}```")
        parts.append("The Vega-Lite specification is:")
        parts.append(ex.spec_text)
    return "\n".join(parts)


# ---------------------------------------------------------------------------
# assembly


def _base_user_message(table: DataTable, nl_query: str, sampled: str) -> str:
    lines = [
        f"Create the optimal visualization for the {table.name} data table using Vega-Lite to complete this task:",
        f"```{nl_query}```",
        f"The {table.name} data table is as follows:",
        f"```{sampled}```",
        DATA_URL_DIRECTIVE,
        OUTPUT_FORMAT_DIRECTIVE,
    ]
    return "\n".join(lines)


def build_prompt(
    strategy: str,
    table: DataTable,
    nl_query: str,
    exemplars: list[FewShotExemplar] | None = None,
    max_rows: int = DEFAULT_SAMPLE_ROWS,
    token_limit: int | None = None,
) -> PromptBundle:
    """Assemble the chat messages for one query under one strategy."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    sampled = sample_table(table, max_rows=max_rows)
    user = _base_user_message(table, nl_query, sampled)
    if strategy == STRATEGY_ZERO_SHOT:
        user = user + "\n" + "\n".join(RULES)
    elif strategy == STRATEGY_FEW_SHOT:
        if exemplars is None:
            raise ExemplarSetIncomplete(list(EXEMPLAR_ORDER), reason="few-shot needs exemplars")
        user = render_exemplar_block(exemplars) + "\n" + user
    messages = [
        {"role": "system", "content": SYSTEM_MESSAGE},
        {"role": "user", "content": user},
    ]
    estimate = sum(token_estimate(m["content"]) for m in messages)
    if token_limit is not None and estimate > token_limit:
        raise TokenBudgetExceeded(estimate, token_limit)
    return PromptBundle(strategy=strategy, messages=messages, token_estimate=estimate)
