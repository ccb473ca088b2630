"""Batch evaluation harness for natural-language-to-Vega-Lite generation."""

from .chartspec import BenchChartType, ChartSpec, chart_type_of, parse_spec, serialize_spec
from .datatable import DataTable, load_csv
from .engine import TupleSet, evaluate
from .equivalence import MatchVerdict, match_pixels, match_svg_json

__version__ = "0.1.0"

__all__ = [
    "BenchChartType",
    "ChartSpec",
    "DataTable",
    "MatchVerdict",
    "TupleSet",
    "chart_type_of",
    "evaluate",
    "load_csv",
    "match_pixels",
    "match_svg_json",
    "parse_spec",
    "serialize_spec",
    "__version__",
]
