"""Figure descriptions parsed from flat key-value spec files."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

KINDS = ("regret_grid", "rank_panels", "lambda_trace", "l2_grid")

_KNOWN_KEYS = {"kind", "inputs", "out", "title", "colors"}


class SpecError(ValueError):
    """Raised when a figure spec file cannot be used."""


@dataclass
class FigureSpec:
    kind: str
    inputs: list[Path]
    out_name: str
    title: str = ""
    color_overrides: dict[str, str] = field(default_factory=dict)


def parse_keyvalues(text: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SpecError(f"line {lineno}: expected key = value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key in entries:
            raise SpecError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = value.strip()
    return entries


def load_spec(path: str | Path) -> FigureSpec:
    """Read a spec file; input globs resolve relative to the file."""
    path = Path(path)
    entries = parse_keyvalues(path.read_text())
    unknown = sorted(set(entries) - _KNOWN_KEYS)
    if unknown:
        raise SpecError(f"unknown spec keys: {', '.join(unknown)}")
    kind = entries.get("kind", "")
    if kind not in KINDS:
        raise SpecError(f"kind must be one of {', '.join(KINDS)}, got {kind!r}")
    patterns = [tok.strip() for tok in entries.get("inputs", "").split(",") if tok.strip()]
    if not patterns:
        raise SpecError("inputs is required (comma-separated paths or globs)")
    base = path.parent
    inputs: list[Path] = []
    for pattern in patterns:
        p = Path(pattern)
        if p.is_absolute():
            matches = sorted(p.parent.glob(p.name)) if any(c in p.name for c in "*?[") else [p]
        else:
            matches = sorted(base.glob(pattern))
            if not matches and not any(c in pattern for c in "*?["):
                matches = [base / pattern]
        inputs.extend(matches)
    if not inputs:
        raise SpecError(f"inputs matched no files under {base}")
    missing = [str(p) for p in inputs if not p.is_file()]
    if missing:
        raise SpecError(f"missing input files: {', '.join(missing)}")

    colors: dict[str, str] = {}
    for tok in entries.get("colors", "").split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "=" not in tok:
            raise SpecError(f"colors entries look like series=color, got {tok!r}")
        series, _, color = tok.partition("=")
        colors[series.strip()] = color.strip()

    out_name = entries.get("out", "") or f"{kind}.png"
    return FigureSpec(kind, inputs, out_name, entries.get("title", ""), colors)
