"""Simulation harness: synthetic streams, schedules, and run aggregation.

A run draws a ground truth, warm-starts the window with the first s
observations, then walks the remaining horizon predicting each incoming
context before ingesting it. Streams are split per run into design, truth,
and noise substreams so any single run can be reproduced bit for bit from
the base seed and its index.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .ols import OlsState, ols_prediction_record
from .records import StepRecord
from .ridge import (
    RidgeState,
    TruthProfile,
    fixed_ridge_prediction_record,
    ridge_prediction_record,
    switching_step,
)
from .window import (
    GramState,
    Observation,
    WindowBuffer,
    evict_oldest,
    push,
    recompute_pseudo_inverse,
)

_FIXED_RE = re.compile(r"^fixed_ridge\(([^)]+)\)$")

DESIGNS = ("gaussian_normalized", "basis_uniform")
NOISES = ("gaussian", "student_t")
SCHEDULES = ("fifd", "add_k_delete_1")


class NumericalAbort(RuntimeError):
    """A run produced a non-finite prediction or estimate."""


@dataclass
class SimConfig:
    d: int = 100
    s: int = 40
    t_horizon: int = 3000
    delta: float = 0.05
    sigma: float = 1.0
    L: float = 1.0
    noise: str = "gaussian"
    noise_df: int = 5
    noise_scale_by_sigma: bool = False
    design: str = "gaussian_normalized"
    schedule: str = "fifd"
    schedule_k: int = 2
    algorithms: tuple[str, ...] = ("fifd_ols",)
    runs: int = 1
    base_seed: int = 0
    theta_inf_mode: str = "true"
    theta_redraw: bool = True

    def __post_init__(self) -> None:
        if self.d < 1 or self.s < 2:
            raise ValueError("need d >= 1 and s >= 2")
        if self.t_horizon <= self.s:
            raise ValueError("horizon must exceed the warm-start size")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.sigma < 0.0 or self.L <= 0.0:
            raise ValueError("sigma must be >= 0 and L > 0")
        if self.noise not in NOISES:
            raise ValueError(f"unknown noise model {self.noise!r}")
        if self.noise == "student_t" and self.noise_df <= 2:
            raise ValueError("student_t noise needs df > 2 for finite variance")
        if self.design not in DESIGNS:
            raise ValueError(f"unknown design {self.design!r}")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.schedule == "add_k_delete_1" and self.schedule_k < 2:
            raise ValueError("add_k_delete_1 needs k >= 2")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.theta_inf_mode not in ("one", "true"):
            raise ValueError("theta_inf_mode must be 'one' or 'true'")
        for spec in self.algorithms:
            parse_algorithm(spec)


@dataclass
class AlgorithmSpec:
    name: str
    kind: str          # ols | adaptive | fixed | switching
    lam: float = 0.0
    lam_sigma_scaled: bool = False

    def resolve_lambda(self, sigma: float) -> float:
        return self.lam * sigma if self.lam_sigma_scaled else self.lam


def parse_algorithm(spec: str) -> AlgorithmSpec:
    """Parse an algorithm token such as fifd_ols or fixed_ridge(25*sigma)."""
    spec = spec.strip()
    if spec == "fifd_ols":
        return AlgorithmSpec(spec, "ols")
    if spec == "fifd_adaptive_ridge":
        return AlgorithmSpec(spec, "adaptive")
    if spec == "switching":
        return AlgorithmSpec(spec, "switching")
    m = _FIXED_RE.match(spec)
    if m:
        arg = m.group(1).strip()
        scaled = arg.endswith("*sigma")
        if scaled:
            arg = arg[: -len("*sigma")].strip()
        try:
            lam = float(arg)
        except ValueError:
            raise ValueError(f"bad fixed penalty in algorithm token {spec!r}")
        if lam < 0.0:
            raise ValueError("fixed penalty must be non-negative")
        return AlgorithmSpec(spec, "fixed", lam, scaled)
    raise ValueError(f"unknown algorithm token {spec!r}")


@dataclass
class RunTrace:
    run_id: str
    algorithm: str
    records: list[StepRecord]
    theta_star: np.ndarray
    truth: TruthProfile
    seed: int


def gen_context(rng: np.random.Generator, dim: int, design: str, L: float) -> np.ndarray:
    if design == "gaussian_normalized":
        v = rng.standard_normal(dim)
        n = np.linalg.norm(v)
        while n == 0.0:
            v = rng.standard_normal(dim)
            n = np.linalg.norm(v)
        return (L / n) * v
    if design == "basis_uniform":
        x = np.zeros(dim)
        x[int(rng.integers(dim))] = L
        return x
    raise ValueError(f"unknown design {design!r}")


def gen_truth(rng: np.random.Generator, dim: int) -> TruthProfile:
    v = rng.standard_normal(dim)
    n = np.linalg.norm(v)
    while n == 0.0:
        v = rng.standard_normal(dim)
        n = np.linalg.norm(v)
    return TruthProfile.from_theta(v / n)


def gen_noise(
    rng: np.random.Generator,
    n: int,
    noise: str,
    sigma: float,
    df: int = 5,
    scale_by_sigma: bool = False,
) -> np.ndarray:
    if noise == "gaussian":
        return rng.normal(0.0, sigma, size=n)
    if noise == "student_t":
        if df <= 2:
            raise ValueError("student_t noise needs df > 2 for finite variance")
        draws = rng.standard_t(df, size=n)
        return draws * sigma if scale_by_sigma else draws
    raise ValueError(f"unknown noise model {noise!r}")


def _run_streams(config: SimConfig, run_index: int):
    seed = config.base_seed + run_index
    children = np.random.SeedSequence(seed).spawn(3)
    design_rng = np.random.default_rng(children[0])
    noise_rng = np.random.default_rng(children[2])
    if config.theta_redraw:
        truth_rng = np.random.default_rng(children[1])
    else:
        truth_rng = np.random.default_rng(
            np.random.SeedSequence(config.base_seed).spawn(3)[1]
        )
    return seed, design_rng, truth_rng, noise_rng


def _draw(config: SimConfig, design_rng, noise_rng, truth: TruthProfile) -> Observation:
    x = gen_context(design_rng, config.d, config.design, config.L)
    eps = gen_noise(
        noise_rng, 1, config.noise, config.sigma,
        config.noise_df, config.noise_scale_by_sigma,
    )[0]
    return Observation(x=x, y=float(truth.theta_star @ x + eps))


def _check_finite(record: StepRecord, run_id: str) -> None:
    if not (math.isfinite(record.y_hat) and math.isfinite(record.l2_error)):
        raise NumericalAbort(f"non-finite estimate in run {run_id} at t={record.t}")


def run_schedule(config: SimConfig, algorithm: str, run_index: int) -> RunTrace:
    """Execute one full run of one algorithm under the configured schedule."""
    spec = parse_algorithm(algorithm)
    seed, design_rng, truth_rng, noise_rng = _run_streams(config, run_index)
    truth = gen_truth(truth_rng, config.d)
    run_id = f"{algorithm}-r{run_index}"
    theta_inf = truth.inf_norm if config.theta_inf_mode == "true" else 1.0
    lam_fixed = spec.resolve_lambda(config.sigma)

    warm = [
        _draw(config, design_rng, noise_rng, truth) for _ in range(config.s)
    ]
    if config.schedule == "fifd":
        capacity = config.s
        rounds = config.t_horizon - config.s
    else:
        rounds = config.t_horizon - config.s
        capacity = config.s + config.schedule_k * rounds + 1
    buf = WindowBuffer(capacity)
    for obs in warm:
        buf.append(obs)
    lam0 = lam_fixed if spec.kind == "fixed" else 0.0
    gram = GramState.from_observations(config.d, list(buf), ridge_lambda=lam0)

    ols_state = OlsState.initial(config.d)
    ridge_state = RidgeState.initial(config.d)
    mode = "ols" if spec.kind == "ols" else "ridge"
    records: list[StepRecord] = []
    cum = 0.0

    for j in range(1, rounds + 1):
        t = config.s + j
        incoming = _draw(config, design_rng, noise_rng, truth)
        extra = (
            [_draw(config, design_rng, noise_rng, truth)
             for _ in range(config.schedule_k - 1)]
            if config.schedule == "add_k_delete_1" else []
        )
        if spec.kind == "switching":
            new_mode = switching_step(mode, len(buf), config.d)
            if new_mode == "ols" and mode == "ridge":
                # drop the penalty permanently and rebuild as plain least squares
                if gram.ridge_lambda != 0.0:
                    gram.phi.flat[:: config.d + 1] -= gram.ridge_lambda
                    gram.ridge_lambda = 0.0
                recompute_pseudo_inverse(gram)
            mode = new_mode

        evicting = len(buf) >= buf.capacity or config.schedule == "add_k_delete_1"
        outgoing = buf.oldest.x if evicting else None
        if spec.kind == "ols" or (spec.kind == "switching" and mode == "ols"):
            record = ols_prediction_record(
                buf, gram, ols_state, incoming, truth.theta_star,
                config.sigma, config.delta, t, x_outgoing=outgoing,
            )
            refresh = True
        elif spec.kind == "fixed":
            record = fixed_ridge_prediction_record(
                buf, gram, ridge_state, incoming, truth,
                config.sigma, config.delta, lam_fixed, t, x_outgoing=outgoing,
            )
            refresh = True
        else:
            record = ridge_prediction_record(
                buf, gram, ridge_state, incoming, truth,
                config.sigma, config.delta, t,
                theta_inf_norm=theta_inf, x_outgoing=outgoing,
            )
            refresh = False
        _check_finite(record, run_id)
        cum += record.pseudo_regret
        record.cum_regret = cum
        records.append(record)

        push(buf, gram, incoming, refresh_stats=refresh)
        for obs in extra:
            push(buf, gram, obs, refresh_stats=refresh)
        if config.schedule == "add_k_delete_1":
            evict_oldest(buf, gram, refresh_stats=refresh)

    return RunTrace(run_id, algorithm, records, truth.theta_star, truth, seed)


def run_batch(config: SimConfig, algorithm: str) -> list[RunTrace]:
    return [run_schedule(config, algorithm, i) for i in range(config.runs)]


_FIELD_ALIASES = {"lambda": "lam"}


def trace_metric(trace: RunTrace, metric: str) -> np.ndarray:
    """Extract one recorded column from a run as a float array."""
    attr = _FIELD_ALIASES.get(metric, metric)
    if not trace.records or not hasattr(trace.records[0], attr):
        raise ValueError(f"unknown metric {metric!r}")
    return np.array(
        [float(getattr(rec, attr)) for rec in trace.records], dtype=float
    )


@dataclass
class AggregateCurve:
    metric: str
    t: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n_runs: int

    @property
    def single_run(self) -> bool:
        return self.n_runs == 1


def aggregate(traces: list[RunTrace], metric: str) -> AggregateCurve:
    """Mean curve with standard errors across runs of equal length."""
    if not traces:
        raise ValueError("no traces to aggregate")
    lengths = {len(tr.records) for tr in traces}
    if len(lengths) != 1:
        raise ValueError(f"traces have mismatched lengths {sorted(lengths)}")
    mat = np.stack([trace_metric(tr, metric) for tr in traces])
    t = np.array([rec.t for rec in traces[0].records], dtype=int)
    mean = mat.mean(axis=0)
    if len(traces) >= 2:
        stderr = mat.std(axis=0, ddof=1) / math.sqrt(len(traces))
    else:
        stderr = np.zeros_like(mean)
    return AggregateCurve(metric, t, mean, stderr, len(traces))


def slope_diagnostics(curve: AggregateCurve, burn_in: int = 0) -> dict[str, float]:
    """Shape summaries of a cumulative curve.

    linear_r2 fits a straight line to the second half of the curve and
    reports its R^2 (a constant segment counts as a perfect fit).
    late_early_ratio compares mean per-step increments in the last decile
    against the first decile after the burn-in.
    """
    y = np.asarray(curve.mean, dtype=float)
    if y.size < 4:
        raise ValueError("curve too short for shape diagnostics")
    half = y[y.size // 2:]
    xs = np.arange(half.size, dtype=float)
    coef = np.polyfit(xs, half, 1)
    resid = half - np.polyval(coef, xs)
    ss_tot = float(np.sum((half - half.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot

    inc = np.diff(y)
    if burn_in >= inc.size:
        raise ValueError("burn-in leaves no increments")
    inc = inc[burn_in:]
    dec = max(inc.size // 10, 1)
    early = float(np.mean(inc[:dec]))
    late = float(np.mean(inc[-dec:]))
    if late == 0.0:
        ratio = 0.0
    elif early == 0.0:
        ratio = float("inf")
    else:
        ratio = late / early
    return {"linear_r2": r2, "late_early_ratio": ratio}
