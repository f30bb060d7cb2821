"""Spec parsing, CSV schema enforcement, and the two headline figures."""

import subprocess
import sys
from pathlib import Path

import pytest

from fifdplots.cli import main
from fifdplots.data import (
    SchemaError,
    assign_colors,
    parse_name,
    read_summary,
    read_trace,
    series_label,
)
from fifdplots.figures import l2_grid, rank_panels, regret_grid
from fifdplots.spec import SpecError, load_spec

SUMMARY_TEXT = "t,mean,stderr,runs\n21,1.0,0.0,1\n22,1.0,0.0,1\n23,1.0,0.0,1\n"


def put(tmp_path: Path, name: str, text: str) -> Path:
    p = tmp_path / name
    p.write_text(text)
    return p


def spec_file(tmp_path: Path, body: str) -> Path:
    return put(tmp_path, "fig.spec", body)


def test_spec_parsing(tmp_path):
    put(tmp_path, "s20-sig1-fifd_ols-cum_regret.csv", SUMMARY_TEXT)
    spec = load_spec(spec_file(tmp_path, (
        "kind = regret_grid\n"
        "inputs = *.csv\n"
        "title = demo\n"
        "colors = fifd_ols=purple\n"
    )))
    assert spec.kind == "regret_grid"
    assert len(spec.inputs) == 1
    assert spec.out_name == "regret_grid.png"
    assert spec.color_overrides == {"fifd_ols": "purple"}


@pytest.mark.parametrize("body,fragment", [
    ("kind = pie\ninputs = *.csv\n", "kind"),
    ("kind = regret_grid\n", "inputs"),
    ("kind = regret_grid\ninputs = nothing*.csv\n", "matched no files"),
    ("kind = regret_grid\ninputs = *.csv\nshape = round\n", "unknown"),
    ("kind = regret_grid\nkind = rank_panels\ninputs = *.csv\n", "duplicate"),
])
def test_spec_rejections(tmp_path, body, fragment):
    put(tmp_path, "s20-sig1-fifd_ols-cum_regret.csv", SUMMARY_TEXT)
    with pytest.raises(SpecError, match=fragment):
        load_spec(spec_file(tmp_path, body))


def test_grid_tag_parsing(tmp_path):
    cell, rest = parse_name(Path("s40-sig2.5-fifd_ols-cum_regret.csv"))
    assert (cell.s, cell.sigma, cell.df, cell.k) == (40, 2.5, None, None)
    assert rest == "fifd_ols-cum_regret"
    cell, rest = parse_name(Path("s20-sig1-df5-k3-switching-r0.csv"))
    assert (cell.s, cell.sigma, cell.df, cell.k) == (20, 1.0, 5, 3)
    assert rest == "switching-r0"
    with pytest.raises(SchemaError):
        parse_name(Path("notag.csv"))


def test_schema_mismatch_names_missing_column(tmp_path):
    path = put(tmp_path, "s20-sig1-fifd_ols-cum_regret.csv",
               "t,mean,runs\n21,1.0,1\n")
    with pytest.raises(SchemaError, match="missing column 'stderr'"):
        read_summary(path)
    bad_trace = put(tmp_path, "s20-sig1-fifd_ols-r0.csv",
                    "run_id,t,y_hat\na,21,0.0\n")
    with pytest.raises(SchemaError, match="missing column 'rank'"):
        read_trace(bad_trace, ("rank",))


def test_cli_schema_mismatch_exits_2(tmp_path, capsys):
    put(tmp_path, "s20-sig1-fifd_ols-cum_regret.csv", "t,mean,runs\n21,1.0,1\n")
    spec = spec_file(tmp_path, "kind = regret_grid\ninputs = *.csv\n")
    code = main(["--spec", str(spec), "--out", str(tmp_path / "figs")])
    assert code == 2
    assert "missing column 'stderr'" in capsys.readouterr().err


def test_series_labels():
    assert series_label("fifd_adaptive_ridge") == "adaptive ridge"
    assert series_label("switching") == "switching"
    assert series_label("fixed_ridge_30") == "fixed ridge λ=30"
    assert series_label("fixed_ridge_25xsigma") == "fixed ridge λ=25σ"
    assert series_label("fixed_ridge_2p5") == "fixed ridge λ=2.5"


def test_color_tiers_ascend_green_yellow_red():
    slugs = ["fixed_ridge_300", "fifd_adaptive_ridge", "fixed_ridge_3",
             "switching", "fixed_ridge_30"]
    colors = assign_colors(slugs, {})
    assert colors["fifd_adaptive_ridge"] == "tab:blue"
    assert colors["switching"] == "tab:cyan"
    assert colors["fixed_ridge_3"] == "tab:green"
    assert colors["fixed_ridge_30"] == "gold"
    assert colors["fixed_ridge_300"] == "tab:red"
    assert assign_colors(slugs, {"switching": "black"})["switching"] == "black"


def test_single_constant_series_renders_flat(tmp_path):
    put(tmp_path, "s20-sig1-fifd_ols-cum_regret.csv", SUMMARY_TEXT)
    spec = load_spec(spec_file(tmp_path, "kind = regret_grid\ninputs = *.csv\n"))
    fig = regret_grid(spec)
    ax = fig.axes[0]
    line = ax.lines[0]
    ys = line.get_ydata()
    assert all(y == ys[0] for y in ys)
    # single run: no error band
    assert len(ax.collections) == 0


def test_render_cli_writes_image(tmp_path):
    put(tmp_path, "s20-sig1-fifd_ols-cum_regret.csv", SUMMARY_TEXT)
    spec = spec_file(tmp_path, "kind = regret_grid\ninputs = *.csv\nout = demo.png\n")
    assert main(["--spec", str(spec), "--out", str(tmp_path / "figs")]) == 0
    target = tmp_path / "figs" / "demo.png"
    assert target.is_file() and target.stat().st_size > 0


def run_engine(config_text: str, tmp_path: Path, out_name: str) -> Path:
    cfg = tmp_path / f"{out_name}.cfg"
    cfg.write_text(config_text)
    out = tmp_path / out_name
    proc = subprocess.run(
        [sys.executable, "-m", "fifd.cli",
         "--config", str(cfg), "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return out


@pytest.mark.acceptance
def test_criterion_14_headline_figures(tmp_path):
    rank_out = run_engine(
        "d = 10\nt_horizon = 600\ns = 20,60,100,150,500\n"
        "design = basis_uniform\nruns = 1\nbase_seed = 7\n"
        "algorithms = fifd_ols\nsummary_metrics = rank\n",
        tmp_path, "rank",
    )
    grid_out = run_engine(
        "d = 5\nt_horizon = 100\ns = 20,40,60,80\nsigma = 1,2,3\n"
        "runs = 2\nbase_seed = 3\n"
        "algorithms = fifd_adaptive_ridge,fixed_ridge(1*sigma),"
        "fixed_ridge(10*sigma),fixed_ridge(100*sigma),switching\n"
        "summary_metrics = cum_regret\n",
        tmp_path, "grid",
    )

    rank_spec = load_spec(spec_file(tmp_path, (
        f"kind = rank_panels\ninputs = {rank_out}/traces/*.csv\n"
    )))
    rank_fig = rank_panels(rank_spec)
    panels = rank_fig.axes
    grid_spec_path = tmp_path / "grid.spec"
    grid_spec_path.write_text(
        f"kind = regret_grid\ninputs = {grid_out}/summaries/*.csv\n"
    )
    grid_spec = load_spec(grid_spec_path)
    grid_fig = regret_grid(grid_spec)
    data_axes = [ax for ax in grid_fig.axes if ax.lines]
    series_counts = {len(ax.lines) for ax in data_axes}
    band_counts = {len(ax.collections) for ax in data_axes}

    out_rank = main(["--spec", str(tmp_path / "fig.spec"),
                     "--out", str(tmp_path / "figs")])
    out_grid = main(["--spec", str(grid_spec_path),
                     "--out", str(tmp_path / "figs")])
    rank_png = tmp_path / "figs" / "rank_panels.png"
    grid_png = tmp_path / "figs" / "regret_grid.png"

    ok = (
        len(panels) == 5
        and len(data_axes) == 12
        and series_counts == {5}
        and band_counts == {5}
        and out_rank == 0 and out_grid == 0
        and rank_png.stat().st_size > 0 and grid_png.stat().st_size > 0
    )
    print(f"[criterion 14] {'PASS' if ok else 'FAIL'} rank panels {len(panels)}/5, "
          f"grid panels {len(data_axes)}/12, series per panel {sorted(series_counts)}, "
          f"error bands per panel {sorted(band_counts)}, images written "
          f"{rank_png.exists() and grid_png.exists()}")
    assert len(panels) == 5
    assert len(data_axes) == 12
    assert series_counts == {5}
    assert band_counts == {5}
    assert out_rank == 0 and out_grid == 0
    assert rank_png.stat().st_size > 0
    assert grid_png.stat().st_size > 0
