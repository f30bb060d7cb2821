"""Sliding-window online linear regression with a fixed retention limit.

The window keeps the newest s observations; every prediction step scores the
incoming context, ingests it, and deletes the oldest point. Estimators:
plain least squares, ridge with a data-driven penalty, and a rule that
switches between them. Diagnostics cover forgetting cost, rank transitions,
confidence radii, and regret caps; the harness replays the reference
experiment grids at desk scale.
"""

from .diagnostics import (
    BoundReport,
    FrtRecord,
    decomposition_slack,
    det_update_identity,
    frt,
    ols_bound,
    rank_transition,
    ridge_bound,
)
from .ols import (
    OlsState,
    fifd_ols_step,
    ols_ellipsoid_radius,
    ols_estimate,
    ols_predict,
    ols_prediction_record,
)
from .records import TRACE_FIELDS, StepRecord
from .ridge import (
    RidgeState,
    TruthProfile,
    WpssrResult,
    adaptive_lambda,
    estimate_sigma,
    fifd_ridge_step,
    fixed_ridge_step,
    ridge_ellipsoid_radius,
    ridge_estimate,
    switching_step,
    wpssr_check,
)
from .simharness import (
    AggregateCurve,
    NumericalAbort,
    RunTrace,
    SimConfig,
    aggregate,
    gen_context,
    gen_noise,
    gen_truth,
    parse_algorithm,
    run_batch,
    run_schedule,
    slope_diagnostics,
    trace_metric,
)
from .window import (
    SIGNAL_FALLBACK,
    GramState,
    Observation,
    SignalFallback,
    WindowBuffer,
    evict_oldest,
    inverse_add_update,
    inverse_delete_update,
    push,
    recompute_pseudo_inverse,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateCurve",
    "BoundReport",
    "FrtRecord",
    "GramState",
    "NumericalAbort",
    "Observation",
    "OlsState",
    "RidgeState",
    "RunTrace",
    "SIGNAL_FALLBACK",
    "SignalFallback",
    "SimConfig",
    "StepRecord",
    "TRACE_FIELDS",
    "TruthProfile",
    "WindowBuffer",
    "WpssrResult",
    "adaptive_lambda",
    "aggregate",
    "decomposition_slack",
    "det_update_identity",
    "estimate_sigma",
    "evict_oldest",
    "fifd_ols_step",
    "fifd_ridge_step",
    "fixed_ridge_step",
    "frt",
    "gen_context",
    "gen_noise",
    "gen_truth",
    "inverse_add_update",
    "inverse_delete_update",
    "ols_bound",
    "ols_ellipsoid_radius",
    "ols_estimate",
    "ols_predict",
    "ols_prediction_record",
    "parse_algorithm",
    "push",
    "rank_transition",
    "recompute_pseudo_inverse",
    "ridge_bound",
    "ridge_ellipsoid_radius",
    "ridge_estimate",
    "run_batch",
    "run_schedule",
    "slope_diagnostics",
    "switching_step",
    "trace_metric",
    "wpssr_check",
]
