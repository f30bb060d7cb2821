"""The four figure styles, each a function from spec inputs to a Figure."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .data import (
    SchemaError,
    SummaryCurve,
    assign_colors,
    read_summary,
    read_trace,
    series_label,
)
from .spec import FigureSpec, SpecError


def _facet_grid(curves: list[SummaryCurve]):
    sigmas = sorted({c.cell.sigma for c in curves})
    sizes = sorted({c.cell.s for c in curves})
    return sigmas, sizes


def _draw_panel(ax, panel_curves: list[SummaryCurve], colors: dict[str, str]):
    for curve in sorted(panel_curves, key=lambda c: c.slug):
        color = colors[curve.slug]
        ax.plot(curve.t, curve.mean, color=color, lw=1.2,
                label=series_label(curve.slug))
        if curve.runs >= 2:
            ax.fill_between(curve.t, curve.mean - curve.stderr,
                            curve.mean + curve.stderr,
                            color=color, alpha=0.25, linewidth=0)


def _summary_grid(spec: FigureSpec, metric_name: str, y_label: str,
                  unit_cap: bool = False):
    curves = [read_summary(p) for p in spec.inputs]
    wrong = [c for c in curves if c.metric != metric_name]
    if wrong:
        names = ", ".join(c.path.name for c in wrong[:3])
        raise SpecError(
            f"expected {metric_name} summaries, got {names}"
        )
    sigmas, sizes = _facet_grid(curves)
    slugs = sorted({c.slug for c in curves})
    colors = assign_colors(slugs, spec.color_overrides)
    fig, axes = plt.subplots(
        len(sigmas), len(sizes),
        figsize=(3.2 * len(sizes), 2.6 * len(sigmas)),
        sharex=True, squeeze=False,
    )
    for i, sigma in enumerate(sigmas):
        for j, s in enumerate(sizes):
            ax = axes[i][j]
            panel = [c for c in curves
                     if c.cell.sigma == sigma and c.cell.s == s]
            _draw_panel(ax, panel, colors)
            if unit_cap:
                ax.axhline(1.0, color="gray", ls="--", lw=0.8)
            ax.set_title(f"s={s}, σ={sigma:g}", fontsize=9)
            if i == len(sigmas) - 1:
                ax.set_xlabel("t")
            if j == 0:
                ax.set_ylabel(y_label)
    handles, labels = axes[0][0].get_legend_handles_labels()
    if handles:
        fig.legend(handles, labels, loc="lower center",
                   ncol=min(len(labels), 5), fontsize=8)
    fig.suptitle(spec.title or y_label)
    fig.tight_layout(rect=(0, 0.06, 1, 0.97))
    return fig


def regret_grid(spec: FigureSpec):
    return _summary_grid(spec, "cum_regret", "cumulative regret")


def l2_grid(spec: FigureSpec):
    return _summary_grid(spec, "l2_error", "coefficient error", unit_cap=True)


def rank_panels(spec: FigureSpec):
    """One panel per retention size, rank trajectory against time.

    Accepts either rank summaries or raw trace files; traces win when both
    appear for the same cell.
    """
    panels: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for path in spec.inputs:
        try:
            curve = read_summary(path)
            if curve.metric != "rank":
                raise SchemaError(f"{path.name}: not a rank summary")
            panels.setdefault(curve.cell.s, (curve.t, curve.mean))
        except SchemaError:
            series = read_trace(path, ("rank",))
            panels[series.cell.s] = (series.t, series.values["rank"])
    if not panels:
        raise SpecError("no usable rank inputs")
    sizes = sorted(panels)
    fig, axes = plt.subplots(
        1, len(sizes), figsize=(2.8 * len(sizes), 2.8),
        sharey=True, squeeze=False,
    )
    for ax, s in zip(axes[0], sizes):
        t, rank = panels[s]
        ax.step(t, rank, where="post", color="tab:blue", lw=1.0)
        ax.set_title(f"s={s}", fontsize=9)
        ax.set_xlabel("t")
    axes[0][0].set_ylabel("design rank")
    fig.suptitle(spec.title or "rank trajectory by retention size")
    fig.tight_layout(rect=(0, 0, 1, 0.94))
    return fig


def lambda_trace(spec: FigureSpec):
    """Penalty trajectories; accepts traces or lambda summaries."""
    fig, ax = plt.subplots(figsize=(6.0, 3.2))
    drew = False
    for path in spec.inputs:
        try:
            curve = read_summary(path)
            if curve.metric != "lambda":
                raise SchemaError(f"{path.name}: not a lambda summary")
            label = f"s={curve.cell.s}, σ={curve.cell.sigma:g}"
            ax.plot(curve.t, curve.mean, lw=1.2, label=label)
            if curve.runs >= 2:
                ax.fill_between(curve.t, curve.mean - curve.stderr,
                                curve.mean + curve.stderr, alpha=0.25,
                                linewidth=0)
        except SchemaError:
            series = read_trace(path, ("lambda",))
            label = f"s={series.cell.s}, σ={series.cell.sigma:g} {series.run}"
            ax.plot(series.t, series.values["lambda"], lw=1.0, label=label)
        drew = True
    if not drew:
        raise SpecError("no usable penalty inputs")
    ax.set_xlabel("t")
    ax.set_ylabel("ridge penalty")
    ax.legend(fontsize=8)
    fig.suptitle(spec.title or "adaptive penalty trace")
    fig.tight_layout()
    return fig


RENDERERS = {
    "regret_grid": regret_grid,
    "rank_panels": rank_panels,
    "lambda_trace": lambda_trace,
    "l2_grid": l2_grid,
}


def render(spec: FigureSpec, out_dir: str | Path) -> Path:
    """Build the figure for a spec and write it under out_dir."""
    fig = RENDERERS[spec.kind](spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    target = out / spec.out_name
    fig.savefig(target, dpi=130)
    plt.close(fig)
    return target
