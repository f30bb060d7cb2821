"""Readers for the experiment runner's CSV outputs.

Grid coordinates ride on the file names (s{S}-sig{G}[-df{D}][-k{K}]-...),
so figures can facet without any side channel beyond the CSV contract.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SUMMARY_COLUMNS = ("t", "mean", "stderr", "runs")

_TAG_RE = re.compile(
    r"^s(?P<s>\d+)-sig(?P<sigma>[0-9p.eE+-]+?)"
    r"(?:-df(?P<df>\d+))?(?:-k(?P<k>\d+))?-(?P<rest>.+)$"
)


class SchemaError(ValueError):
    """An input file does not match the expected CSV contract."""


@dataclass
class GridCell:
    s: int
    sigma: float
    df: int | None = None
    k: int | None = None


@dataclass
class SummaryCurve:
    path: Path
    cell: GridCell
    slug: str
    metric: str
    t: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    runs: int


@dataclass
class TraceSeries:
    path: Path
    cell: GridCell
    slug: str
    run: str
    t: np.ndarray
    values: dict[str, np.ndarray]


def _num(text: str) -> float:
    return float(text.replace("p", "."))


def parse_name(path: Path) -> tuple[GridCell, str]:
    """Split a runner file name into its grid cell and trailing part."""
    m = _TAG_RE.match(path.stem)
    if m is None:
        raise SchemaError(f"{path.name}: file name carries no grid tag")
    cell = GridCell(
        s=int(m.group("s")),
        sigma=_num(m.group("sigma")),
        df=int(m.group("df")) if m.group("df") else None,
        k=int(m.group("k")) if m.group("k") else None,
    )
    return cell, m.group("rest")


def _read_table(path: Path, required: tuple[str, ...]) -> dict[str, list[str]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path.name}: empty file") from None
        for col in required:
            if col not in header:
                raise SchemaError(f"{path.name}: missing column '{col}'")
        idx = {col: header.index(col) for col in required}
        table: dict[str, list[str]] = {col: [] for col in required}
        for row in reader:
            for col in required:
                table[col].append(row[idx[col]])
    return table


def read_summary(path: Path) -> SummaryCurve:
    cell, rest = parse_name(path)
    slug, _, metric = rest.rpartition("-")
    if not slug:
        raise SchemaError(f"{path.name}: expected <algorithm>-<metric>.csv")
    table = _read_table(path, SUMMARY_COLUMNS)
    runs = int(table["runs"][0]) if table["runs"] else 0
    return SummaryCurve(
        path=path,
        cell=cell,
        slug=slug,
        metric=metric,
        t=np.array(table["t"], dtype=float),
        mean=np.array(table["mean"], dtype=float),
        stderr=np.array(table["stderr"], dtype=float),
        runs=runs,
    )


def read_trace(path: Path, columns: tuple[str, ...]) -> TraceSeries:
    cell, rest = parse_name(path)
    slug, _, run = rest.rpartition("-")
    if not slug or not run.startswith("r"):
        raise SchemaError(f"{path.name}: expected <algorithm>-r<i>.csv")
    table = _read_table(path, ("t",) + columns)
    return TraceSeries(
        path=path,
        cell=cell,
        slug=slug,
        run=run,
        t=np.array(table["t"], dtype=float),
        values={c: np.array(table[c], dtype=float) for c in columns},
    )


# ---------------------------------------------------------------------------
# series naming and colors

_FIXED_SLUG_RE = re.compile(r"^fixed_ridge_(?P<val>[0-9p.eE+-]+?)(?P<scaled>xsigma)?$")

_FIXED_TIER_COLORS = ("tab:green", "gold", "tab:red", "darkred", "maroon")


def series_label(slug: str) -> str:
    if slug == "fifd_adaptive_ridge":
        return "adaptive ridge"
    if slug == "fifd_ols":
        return "sliding least squares"
    if slug == "switching":
        return "switching"
    m = _FIXED_SLUG_RE.match(slug)
    if m:
        suffix = "σ" if m.group("scaled") else ""
        return f"fixed ridge λ={_num(m.group('val')):g}{suffix}"
    return slug.replace("_", " ")


def _fixed_value(slug: str) -> float | None:
    m = _FIXED_SLUG_RE.match(slug)
    return _num(m.group("val")) if m else None


def assign_colors(slugs: list[str], overrides: dict[str, str]) -> dict[str, str]:
    """Fixed-penalty tiers go green/yellow/red in ascending penalty order."""
    colors: dict[str, str] = {}
    fixed = sorted(
        {s for s in slugs if _fixed_value(s) is not None}, key=_fixed_value
    )
    for rank, slug in enumerate(fixed):
        colors[slug] = _FIXED_TIER_COLORS[rank % len(_FIXED_TIER_COLORS)]
    for slug in slugs:
        if slug in colors:
            continue
        if slug == "fifd_adaptive_ridge":
            colors[slug] = "tab:blue"
        elif slug == "switching":
            colors[slug] = "tab:cyan"
        elif slug == "fifd_ols":
            colors[slug] = "dimgray"
        else:
            colors[slug] = "black"
    colors.update({k: v for k, v in overrides.items() if k in slugs})
    return colors
