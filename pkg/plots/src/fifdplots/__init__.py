"""Figure rendering for sliding-window regression experiment outputs."""

from .data import (
    GridCell,
    SchemaError,
    SummaryCurve,
    TraceSeries,
    assign_colors,
    read_summary,
    read_trace,
    series_label,
)
from .figures import RENDERERS, render
from .spec import KINDS, FigureSpec, SpecError, load_spec

__version__ = "0.1.0"

__all__ = [
    "FigureSpec",
    "GridCell",
    "KINDS",
    "RENDERERS",
    "SchemaError",
    "SpecError",
    "SummaryCurve",
    "TraceSeries",
    "assign_colors",
    "load_spec",
    "read_summary",
    "read_trace",
    "render",
    "series_label",
]
