"""Command-line front end: experiment grids, CSV output, verification suites.

Config files are flat key-value text. The keys s, sigma, noise_df, and
schedule_k accept comma-separated lists and span a cross-product grid; every
other key is a scalar. The manifest written next to the outputs is itself a
valid config that reproduces every file byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from itertools import product
from pathlib import Path

import numpy as np

from .diagnostics import det_update_identity, ols_bound, ridge_bound
from .ols import OlsState, ols_prediction_record
from .records import TRACE_FIELDS
from .simharness import (
    NumericalAbort,
    RunTrace,
    SimConfig,
    aggregate,
    gen_context,
    gen_truth,
    parse_algorithm,
    run_schedule,
)
from .window import (
    GramState,
    Observation,
    WindowBuffer,
    inverse_add_update,
    inverse_delete_update,
    push,
)

_INT_KEYS = {"d", "s", "t_horizon", "noise_df", "schedule_k", "runs", "base_seed"}
_FLOAT_KEYS = {"delta", "sigma", "L"}
_BOOL_KEYS = {"noise_scale_by_sigma", "theta_redraw"}
_STR_KEYS = {"noise", "design", "schedule", "theta_inf_mode"}
_LIST_KEYS = {"algorithms", "summary_metrics"}
_GRID_KEYS = ("s", "sigma", "noise_df", "schedule_k")

TRACE_HEADER = ("run_id", "algorithm") + TRACE_FIELDS
BOUNDS_HEADER = (
    "run_id", "algorithm", "bound_value", "regret_actual",
    "holds", "conditions_met", "zeta", "eta",
)
SUMMARY_HEADER = ("t", "mean", "stderr", "runs")

VERIFY_SUITES = ("oracle", "identities", "bounds", "coverage")


def _fmt(value) -> str:
    """Serialize one CSV cell; floats carry 17 significant digits."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def parse_config_text(text: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    for ln, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {ln}: expected key = value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ValueError(f"config line {ln}: empty key or value")
        if key in entries:
            raise ValueError(f"config line {ln}: duplicate key {key!r}")
        entries[key] = value
    return entries


def _cast(key: str, text: str):
    try:
        if key in _INT_KEYS:
            return int(text)
        if key in _FLOAT_KEYS:
            return float(text)
        if key in _BOOL_KEYS:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        return text
    except ValueError:
        raise ValueError(f"bad value for config key {key!r}: {text!r}") from None


def _cfg_str(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _grid_tag(cfg: SimConfig) -> str:
    parts = [f"s{cfg.s}", f"sig{cfg.sigma:g}"]
    if cfg.noise == "student_t":
        parts.append(f"df{cfg.noise_df}")
    if cfg.schedule == "add_k_delete_1":
        parts.append(f"k{cfg.schedule_k}")
    return "-".join(parts)


def _slug(name: str) -> str:
    return (
        name.replace("*", "x").replace("(", "_").replace(")", "")
        .replace(".", "p").replace(" ", "")
    )


@dataclasses.dataclass
class ExperimentPlan:
    cells: list[tuple[str, SimConfig]]
    summary_metrics: tuple[str, ...]
    resolved: dict[str, str]


def build_plan(entries: dict[str, str]) -> ExperimentPlan:
    known = _INT_KEYS | _FLOAT_KEYS | _BOOL_KEYS | _STR_KEYS | _LIST_KEYS
    unknown = sorted(set(entries) - known)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    metrics = tuple(
        tok.strip()
        for tok in entries.get("summary_metrics", "cum_regret,l2_error").split(",")
        if tok.strip()
    )
    algorithms = tuple(
        tok.strip()
        for tok in entries.get("algorithms", "fifd_ols").split(",")
        if tok.strip()
    )
    if not algorithms:
        raise ValueError("algorithms list is empty")
    axes: dict[str, tuple | None] = {k: None for k in _GRID_KEYS}
    scalars: dict[str, object] = {}
    for key, value in entries.items():
        if key in _LIST_KEYS:
            continue
        if key in _GRID_KEYS:
            axes[key] = tuple(_cast(key, tok.strip()) for tok in value.split(","))
        else:
            scalars[key] = _cast(key, value)

    cells: list[tuple[str, SimConfig]] = []
    combos = product(*(axes[k] if axes[k] is not None else (None,) for k in _GRID_KEYS))
    for combo in combos:
        kwargs = dict(scalars)
        for key, val in zip(_GRID_KEYS, combo):
            if val is not None:
                kwargs[key] = val
        cfg = SimConfig(algorithms=algorithms, **kwargs)
        cells.append((_grid_tag(cfg), cfg))
    if len({tag for tag, _ in cells}) != len(cells):
        raise ValueError("grid axes produce colliding cell tags")

    defaults = SimConfig()
    resolved: dict[str, str] = {}
    for f in dataclasses.fields(SimConfig):
        if f.name == "algorithms":
            resolved[f.name] = ", ".join(algorithms)
        elif f.name in _GRID_KEYS and axes[f.name] is not None:
            resolved[f.name] = ",".join(_cfg_str(v) for v in axes[f.name])
        elif f.name in scalars:
            resolved[f.name] = _cfg_str(scalars[f.name])
        else:
            resolved[f.name] = _cfg_str(getattr(defaults, f.name))
    resolved["summary_metrics"] = ",".join(metrics)
    return ExperimentPlan(cells, metrics, resolved)


@dataclasses.dataclass
class OutputBundle:
    out_dir: Path
    trace_files: list[Path]
    summary_files: list[Path]
    bounds_file: Path
    manifest_file: Path


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_trace_csv(path: Path, trace: RunTrace, run_id: str) -> None:
    rows = (
        [run_id, trace.algorithm] + [_fmt(v) for v in rec.csv_values()]
        for rec in trace.records
    )
    _write_csv(path, TRACE_HEADER, rows)


def run_experiment(
    config_path: str,
    out_dir: str,
    overrides: dict[str, str] | None = None,
    runs: int | None = None,
    seed: int | None = None,
    threads: int = 1,
) -> OutputBundle:
    entries = parse_config_text(Path(config_path).read_text())
    entries.update(overrides or {})
    if runs is not None:
        entries["runs"] = str(runs)
    if seed is not None:
        entries["base_seed"] = str(seed)
    plan = build_plan(entries)

    out = Path(out_dir)
    traces_dir = out / "traces"
    summaries_dir = out / "summaries"
    traces_dir.mkdir(parents=True, exist_ok=True)
    summaries_dir.mkdir(parents=True, exist_ok=True)

    jobs = [
        (tag, cfg, alg, i)
        for tag, cfg in plan.cells
        for alg in cfg.algorithms
        for i in range(cfg.runs)
    ]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            traces = list(pool.map(lambda j: run_schedule(j[1], j[2], j[3]), jobs))
    else:
        traces = [run_schedule(cfg, alg, i) for _, cfg, alg, i in jobs]

    trace_files: list[Path] = []
    bound_rows: list[list[str]] = []
    grouped: dict[tuple[str, str], list[RunTrace]] = {}
    for (tag, cfg, alg, i), trace in zip(jobs, traces):
        run_id = f"{tag}-{trace.run_id}"
        path = traces_dir / f"{tag}-{_slug(alg)}-r{i}.csv"
        write_trace_csv(path, trace, run_id)
        trace_files.append(path)
        grouped.setdefault((tag, alg), []).append(trace)
        kind = parse_algorithm(alg).kind
        if kind == "ols":
            report = ols_bound(trace, cfg)
            eta = report.eta_ols
        elif kind in ("adaptive", "fixed"):
            report = ridge_bound(trace, cfg, trace.truth)
            eta = report.eta_ridge
        else:
            continue  # no dedicated cap evaluator for the switching rule
        bound_rows.append([
            run_id, alg, _fmt(report.bound_value), _fmt(report.regret_actual),
            _fmt(report.holds), _fmt(report.conditions_met),
            _fmt(report.zeta), _fmt(eta),
        ])

    summary_files: list[Path] = []
    for (tag, alg), group in grouped.items():
        for metric in plan.summary_metrics:
            curve = aggregate(group, metric)
            rows = (
                [str(int(t)), _fmt(float(m)), _fmt(float(se)), str(curve.n_runs)]
                for t, m, se in zip(curve.t, curve.mean, curve.stderr)
            )
            path = summaries_dir / f"{tag}-{_slug(alg)}-{metric}.csv"
            _write_csv(path, SUMMARY_HEADER, rows)
            summary_files.append(path)

    bounds_file = out / "bounds.csv"
    _write_csv(bounds_file, BOUNDS_HEADER, bound_rows)

    manifest_file = out / "manifest.txt"
    lines = [
        "# experiment manifest; pass back via --config to reproduce outputs",
        f"# numpy {np.__version__}",
    ]
    lines += [f"{k} = {v}" for k, v in sorted(plan.resolved.items())]
    manifest_file.write_text("\n".join(lines) + "\n")

    return OutputBundle(out, trace_files, summary_files, bounds_file, manifest_file)


# ---------------------------------------------------------------------------
# verification suites


def _verify_oracle() -> list[tuple[str, bool, str]]:
    """Incremental estimate vs a fresh batch solve at every step."""
    rng = np.random.default_rng(12345)
    d, s, t_horizon = 8, 25, 400
    theta = rng.standard_normal(d)
    theta /= np.linalg.norm(theta)
    buf = WindowBuffer(s)
    gram = GramState.from_observations(d, [])
    for _ in range(s):
        x = rng.standard_normal(d)
        push(buf, gram, Observation(x=x, y=float(theta @ x + rng.normal())))
    worst = 0.0
    for _ in range(t_horizon - s):
        x = rng.standard_normal(d)
        push(buf, gram, Observation(x=x, y=float(theta @ x + rng.normal())))
        batch = GramState.from_observations(d, list(buf))
        drift = np.max(np.abs(gram.inv @ gram.xy_sum - batch.inv @ batch.xy_sum))
        worst = max(worst, float(drift))
    return [("oracle_theta_drift", worst <= 1e-8, f"max_abs={worst:.3e}")]


def _verify_identities() -> list[tuple[str, bool, str]]:
    rng = np.random.default_rng(777)
    worst_det = 0.0
    for _ in range(10_000):
        d = int(rng.integers(2, 9))
        a = rng.standard_normal(d) * 0.6
        b = rng.standard_normal(d) * 0.6
        lhs, rhs = det_update_identity(a, b)
        worst_det = max(worst_det, abs(lhs - rhs))
    worst_rt = 0.0
    for _ in range(10_000):
        d = int(rng.integers(2, 9))
        design = rng.standard_normal((d + 3, d))
        m = design.T @ design + 0.1 * np.eye(d)
        inv = np.linalg.inv(m)
        x = rng.standard_normal(d)
        back = inverse_delete_update(inverse_add_update(inv, x), x)
        if isinstance(back, np.ndarray):
            worst_rt = max(worst_rt, float(np.max(np.abs(back - inv))))
        else:
            worst_rt = float("inf")
    return [
        ("identity_det_rank_two", worst_det <= 1e-10, f"max_abs={worst_det:.3e}"),
        ("identity_round_trip", worst_rt <= 1e-9, f"max_abs={worst_rt:.3e}"),
    ]


def _verify_bounds() -> list[tuple[str, bool, str]]:
    results = []
    ols_cfg = SimConfig(
        d=8, s=30, t_horizon=300, algorithms=("fifd_ols",), runs=5, base_seed=11
    )
    ridge_cfg = SimConfig(
        d=20, s=30, t_horizon=300, algorithms=("fifd_adaptive_ridge",),
        runs=5, base_seed=11,
    )
    for cfg, alg, evaluator in (
        (ols_cfg, "fifd_ols", lambda tr: ols_bound(tr, ols_cfg)),
        (ridge_cfg, "fifd_adaptive_ridge", lambda tr: ridge_bound(tr, ridge_cfg, tr.truth)),
    ):
        ok = checked = 0
        for i in range(cfg.runs):
            report = evaluator(run_schedule(cfg, alg, i))
            if report.conditions_met:
                checked += 1
                ok += int(report.holds)
        results.append((
            f"bound_{alg}", checked > 0 and ok == checked,
            f"holds={ok}/{checked} (of {cfg.runs} runs)",
        ))
    return results


def _verify_coverage() -> list[tuple[str, bool, str]]:
    d, s, t_horizon, sigma, delta = 8, 30, 600, 1.0, 0.05
    children = np.random.SeedSequence(2024).spawn(3)
    design_rng = np.random.default_rng(children[0])
    noise_rng = np.random.default_rng(children[2])
    truth = gen_truth(np.random.default_rng(children[1]), d)
    buf = WindowBuffer(s)
    gram = GramState.from_observations(d, [])
    for _ in range(s):
        x = gen_context(design_rng, d, "gaussian_normalized", 1.0)
        y = float(truth.theta_star @ x + noise_rng.normal(0.0, sigma))
        push(buf, gram, Observation(x=x, y=y))
    state = OlsState.initial(d)
    hits = valid = 0
    for t in range(s + 1, t_horizon + 1):
        x = gen_context(design_rng, d, "gaussian_normalized", 1.0)
        y = float(truth.theta_star @ x + noise_rng.normal(0.0, sigma))
        obs = Observation(x=x, y=y)
        rec = ols_prediction_record(
            buf, gram, state, obs, truth.theta_star, sigma, delta, t,
            x_outgoing=buf.oldest.x,
        )
        if rec.ellipsoid_valid:
            diff = state.theta_hat - truth.theta_star
            dist = math.sqrt(float(diff @ gram.phi @ diff))
            valid += 1
            hits += int(dist <= rec.beta)
        push(buf, gram, obs)
    frac = hits / valid if valid else 0.0
    return [(
        "coverage_ols_ellipsoid", valid > 0 and frac >= 0.95,
        f"covered={hits}/{valid} ({frac:.4f})",
    )]


def verify(suite: str) -> int:
    runners = {
        "oracle": _verify_oracle,
        "identities": _verify_identities,
        "bounds": _verify_bounds,
        "coverage": _verify_coverage,
    }
    if suite not in runners:
        print(f"unknown verify suite {suite!r}; choose from {VERIFY_SUITES}",
              file=sys.stderr)
        return 2
    checks = runners[suite]()
    failed = 0
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name} {detail}")
        failed += int(not ok)
    print(f"suite {suite}: {len(checks) - failed}/{len(checks)} passed")
    return 1 if failed else 0


def _parse_overrides(pairs: list[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip() or not value.strip():
            raise ValueError(f"bad --set override {pair!r}; expected key=value")
        out[key.strip()] = value.strip()
    return out


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fifd",
        description="Sliding-window regression experiment runner",
    )
    parser.add_argument("--config", help="experiment config file")
    parser.add_argument("--out", default="fifd_out", help="output directory")
    parser.add_argument("--runs", type=int, help="override replication count")
    parser.add_argument("--seed", type=int, help="override base seed")
    parser.add_argument("--set", action="append", default=[], metavar="K=V",
                        help="override a config key (repeatable)")
    parser.add_argument("--verify", choices=VERIFY_SUITES,
                        help="run a verification suite instead of experiments")
    parser.add_argument("--threads", type=int, default=1,
                        help="parallel replication workers")
    args = parser.parse_args(argv)

    if args.verify:
        return verify(args.verify)
    if not args.config:
        parser.error("--config is required unless --verify is given")
    try:
        overrides = _parse_overrides(args.set)
        bundle = run_experiment(
            args.config, args.out, overrides,
            runs=args.runs, seed=args.seed, threads=max(args.threads, 1),
        )
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {len(bundle.trace_files)} traces, "
          f"{len(bundle.summary_files)} summaries to {bundle.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
