"""Per-step record emitted by every estimator step and consumed downstream."""

from __future__ import annotations

from dataclasses import dataclass

# Column order of the per-run trace CSV; run_id and algorithm prefix these.
TRACE_FIELDS = (
    "t",
    "y_hat",
    "pseudo_regret",
    "abs_loss",
    "cum_regret",
    "l2_error",
    "lambda",
    "lambda_delta",
    "rank",
    "min_eig",
    "frt",
    "beta",
    "ellipsoid_valid",
    "window_size",
)


@dataclass
class StepRecord:
    """Everything observable about one prediction step.

    pseudo_regret is the squared gap between the noiseless response and the
    prediction; abs_loss is the absolute gap. cum_regret is the running sum
    of pseudo_regret, filled in by the harness. The fields after window_size
    do not appear in the trace CSV; they carry the weighted norms and
    log-determinant bookkeeping that the bound evaluators need.
    """

    t: int
    y_hat: float
    pseudo_regret: float
    abs_loss: float
    cum_regret: float
    l2_error: float
    lam: float
    lambda_delta: float
    rank: int
    min_eig: float
    frt: float
    beta: float
    ellipsoid_valid: bool
    window_size: int
    # diagnostics not serialized to the trace CSV
    x_norm_inv_sq: float = 0.0
    deleted_norm_sq: float = 0.0
    q_value: float = 0.0
    logdet_window: float = 0.0
    c2_log_step: float = 0.0

    def csv_values(self) -> tuple:
        return (
            self.t,
            self.y_hat,
            self.pseudo_regret,
            self.abs_loss,
            self.cum_regret,
            self.l2_error,
            self.lam,
            self.lambda_delta,
            self.rank,
            self.min_eig,
            self.frt,
            self.beta,
            int(self.ellipsoid_valid),
            self.window_size,
        )
