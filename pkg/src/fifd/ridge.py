"""Ridge regression on the sliding window with a data-driven penalty.

The penalty is refreshed every step from the window itself: the sample
standard deviation of the retained responses, the design's entrywise sup
norm, and the retention size set lambda; the gram matrix then gets the
penalty change added to its diagonal and the inverse is rebuilt. A fixed
penalty variant skips the refresh, and a switching rule drops to plain
least squares once enough samples are retained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .diagnostics import frt
from .records import StepRecord
from .window import (
    GramState,
    Observation,
    WindowBuffer,
    _assign_spectral_stats,
    push,
    recompute_pseudo_inverse,
)


@dataclass
class TruthProfile:
    """Sign profile of the ground-truth coefficients.

    p_min is the smallest strictly positive coordinate, n_max the largest
    magnitude among strictly negative ones; counts cover both sign sets.
    """

    theta_star: np.ndarray
    p_min: float
    n_max: float
    inf_norm: float
    p_count: int
    n_count: int

    @classmethod
    def from_theta(cls, theta: np.ndarray) -> "TruthProfile":
        theta = np.asarray(theta, dtype=float)
        if theta.ndim != 1:
            raise ValueError("coefficient vector must be 1-d")
        pos = theta[theta > 0.0]
        neg = theta[theta < 0.0]
        return cls(
            theta_star=theta,
            p_min=float(pos.min()) if pos.size else float("nan"),
            n_max=float(np.abs(neg).max()) if neg.size else 0.0,
            inf_norm=float(np.abs(theta).max()) if theta.size else 0.0,
            p_count=int(pos.size),
            n_count=int(neg.size),
        )


@dataclass
class RidgeState:
    """Estimator state refreshed once per prediction step."""

    theta_hat: np.ndarray
    lambda_t: float = 0.0
    sigma_hat: float = 0.0
    kappa: float = float("nan")
    nu: float = float("nan")
    q_lambda: float = float("nan")
    beta_radius: float = float("nan")
    lambda_delta: float = 0.0

    @classmethod
    def initial(cls, dim: int) -> "RidgeState":
        return cls(theta_hat=np.zeros(dim))


class WpssrResult(NamedTuple):
    """Weak positive-signal ratio check: ratio vs. admissible bound."""

    ratio: float
    bound: float
    holds: bool
    applicable: bool


def estimate_sigma(responses: np.ndarray) -> float:
    """Sample standard deviation (ddof=1) of the retained responses."""
    responses = np.asarray(responses, dtype=float)
    if responses.size < 2:
        raise ValueError("need at least two responses to estimate noise scale")
    return float(np.std(responses, ddof=1))


def adaptive_lambda(
    sigma_hat: float,
    x_inf_norm: float,
    window_size: int,
    dim: int,
    delta: float,
    theta_inf_norm: float = 1.0,
) -> float:
    """Data-driven ridge penalty for the current window.

    lambda = sigma_hat * |X|_inf * sqrt(2 s log(2 d / delta)) divided by the
    sup norm of the true coefficients. That divisor is unknowable in
    deployment; it defaults to 1 and is exposed for harnesses that want to
    pass an oracle value.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if theta_inf_norm <= 0.0:
        raise ValueError("coefficient sup-norm divisor must be positive")
    if window_size < 1:
        raise ValueError("window must be non-empty")
    return (
        sigma_hat
        * x_inf_norm
        * math.sqrt(2.0 * window_size * math.log(2.0 * dim / delta))
        / theta_inf_norm
    )


def wpssr_check(
    truth: TruthProfile, window_size: int, dim: int, delta: float
) -> WpssrResult:
    """Check the weak positive-signal ratio condition for this truth.

    ratio = p_min / |theta|_inf must stay below an admissible bound that
    grows with the retention size. Inapplicable (flagged, not an error)
    when the truth has no strictly positive coordinate.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if truth.p_count == 0:
        return WpssrResult(float("nan"), float("nan"), False, False)
    log_d = math.log(2.0 * dim / delta)
    c3 = math.log(6.0 * dim / delta) * log_d
    s = float(window_size)
    disc = c3 + s * s * log_d * math.log(12.0 * truth.p_count / delta)
    bound = (-math.sqrt(c3) + math.sqrt(disc)) / (s * log_d)
    ratio = truth.p_min / truth.inf_norm
    return WpssrResult(ratio, bound, bool(ratio <= bound), True)


def ridge_estimate(gram: GramState) -> np.ndarray:
    """Penalized coefficients; gram.phi already carries the penalty."""
    return gram.inv @ gram.xy_sum


def _kappa(p_count: int, delta: float, dim: int) -> float:
    return abs(math.log(6.0 * p_count / delta)) / math.sqrt(
        math.log(2.0 * dim / delta)
    )


def ridge_ellipsoid_radius(
    gram: GramState,
    sigma: float,
    truth: TruthProfile,
    delta: float,
    window_size: int,
    dim: int,
) -> tuple[float, bool]:
    """Radius of the penalized-gram confidence ball around theta_hat.

    radius = sigma * kappa * nu * q_lambda * sqrt(d / (2 s)). Valid only
    when the positive-signal ratio condition holds and the penalized gram
    is positive definite. Without positive truth coordinates kappa and nu
    fall back to 1 and the radius is flagged invalid.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if sigma < 0.0:
        raise ValueError("noise scale must be non-negative")
    if window_size < 1:
        return float("nan"), False
    phi_sq = gram.min_eig / window_size
    if phi_sq <= 0.0:
        return float("nan"), False
    q_lambda = gram.x_inf_norm / phi_sq
    if truth.p_count == 0:
        kappa, nu, valid = 1.0, 1.0, False
    else:
        kappa = _kappa(truth.p_count, delta, dim)
        nu = truth.inf_norm / truth.p_min
        valid = wpssr_check(truth, window_size, dim, delta).holds
    radius = sigma * kappa * nu * q_lambda * math.sqrt(dim / (2.0 * window_size))
    return radius, bool(valid)


def _refresh_lambda(
    buf: WindowBuffer,
    gram: GramState,
    delta: float,
    theta_inf_norm: float,
) -> tuple[float, float, float, float]:
    """Set this step's penalty and rebuild the inverse on its diagonal.

    Returns (sigma_hat, lambda, lambda_delta, c2_log). The eigendecomposition
    at the old penalty is reused for the new inverse, since adding a scalar
    to the diagonal shifts eigenvalues without moving eigenvectors. The
    first refresh (old penalty zero, warm-start gram) counts as
    initialization: no window-to-window transition is recorded.
    """
    sigma_hat = estimate_sigma(buf.responses())
    lam = adaptive_lambda(
        sigma_hat, buf.x_inf_norm(), len(buf), gram.dim, delta, theta_inf_norm
    )
    lam_old = gram.ridge_lambda
    lam_delta = lam - lam_old
    initializing = lam_old == 0.0
    if lam_delta != 0.0:
        gram.phi.flat[:: gram.dim + 1] += lam_delta
        gram.ridge_lambda = lam
    if lam <= 0.0:
        # degenerate window (constant responses); keep a pseudo-inverse
        recompute_pseudo_inverse(gram)
        return sigma_hat, lam, 0.0 if initializing else lam_delta, 0.0
    # one decomposition serves both penalties: a scalar diagonal shift moves
    # eigenvalues without moving eigenvectors
    w_new, v = np.linalg.eigh(gram.phi)
    inv = (v / w_new) @ v.T
    gram.inv = (inv + inv.T) / 2.0
    _assign_spectral_stats(gram, w_new)
    gram.updates_since_refresh = 0
    if initializing or lam_delta == 0.0:
        c2_log = 0.0
        lam_delta_out = 0.0 if initializing else lam_delta
    else:
        w_prev = w_new - lam_delta
        c2_log = float(np.sum(np.log(w_new) - np.log(np.maximum(w_prev, 1e-300))))
        lam_delta_out = lam_delta
    return sigma_hat, lam, lam_delta_out, c2_log


def ridge_prediction_record(
    buf: WindowBuffer,
    gram: GramState,
    state: RidgeState,
    obs: Observation,
    truth: TruthProfile,
    sigma: float,
    delta: float,
    t: int,
    theta_inf_norm: float = 1.0,
    x_outgoing: np.ndarray | None = None,
) -> StepRecord:
    """Refresh the penalty, predict obs.x, and record diagnostics.

    Does not slide the window; callers ingest afterwards.
    """
    window_size = len(buf)
    sigma_hat, lam, lam_delta, c2_log = _refresh_lambda(
        buf, gram, delta, theta_inf_norm
    )
    theta = ridge_estimate(gram)
    y_hat = float(theta @ obs.x)
    truth_mean = float(truth.theta_star @ obs.x)
    gap = truth_mean - y_hat
    radius, valid = ridge_ellipsoid_radius(
        gram, sigma, truth, delta, window_size, gram.dim
    )
    phi_sq = gram.min_eig / window_size if window_size else 0.0
    q_lambda = gram.x_inf_norm / phi_sq if phi_sq > 0.0 else float("nan")
    if x_outgoing is not None:
        fr = frt(gram.inv, x_outgoing, obs.x)
        frt_val, del_sq, inc_sq = fr.frt, fr.deleted_norm_sq, fr.incoming_norm_sq
    else:
        inc_sq = max(float(obs.x @ (gram.inv @ obs.x)), 0.0)
        frt_val, del_sq = 0.0, 0.0
    state.theta_hat = theta
    state.lambda_t = lam
    state.sigma_hat = sigma_hat
    state.kappa = _kappa(truth.p_count, delta, gram.dim) if truth.p_count else 1.0
    state.nu = truth.inf_norm / truth.p_min if truth.p_count else 1.0
    state.q_lambda = q_lambda
    state.beta_radius = radius
    state.lambda_delta = lam_delta
    return StepRecord(
        t=t,
        y_hat=y_hat,
        pseudo_regret=gap * gap,
        abs_loss=abs(gap),
        cum_regret=0.0,
        l2_error=float(np.linalg.norm(theta - truth.theta_star)),
        lam=lam,
        lambda_delta=lam_delta,
        rank=gram.rank,
        min_eig=gram.min_eig,
        frt=frt_val,
        beta=radius,
        ellipsoid_valid=valid,
        window_size=window_size,
        x_norm_inv_sq=inc_sq,
        deleted_norm_sq=del_sq,
        q_value=q_lambda,
        logdet_window=gram.log_pdet,
        c2_log_step=c2_log,
    )


def fifd_ridge_step(
    buf: WindowBuffer,
    gram: GramState,
    state: RidgeState,
    obs: Observation,
    truth: TruthProfile,
    sigma: float,
    delta: float,
    t: int = 0,
    theta_inf_norm: float = 1.0,
) -> StepRecord:
    """One adaptive-penalty round: refresh, predict, ingest, evict oldest."""
    outgoing = buf.oldest.x if len(buf) >= buf.capacity else None
    record = ridge_prediction_record(
        buf, gram, state, obs, truth, sigma, delta, t,
        theta_inf_norm=theta_inf_norm, x_outgoing=outgoing,
    )
    # the next step rebuilds the inverse and stats for its new penalty, so
    # the slide skips the extra eigendecomposition
    push(buf, gram, obs, refresh_stats=False)
    return record


def fixed_ridge_prediction_record(
    buf: WindowBuffer,
    gram: GramState,
    state: RidgeState,
    obs: Observation,
    truth: TruthProfile,
    sigma: float,
    delta: float,
    lambda_fixed: float,
    t: int,
    x_outgoing: np.ndarray | None = None,
) -> StepRecord:
    """Predict obs.x under a constant penalty and record diagnostics.

    gram must have been built with ridge_lambda == lambda_fixed; the penalty
    never moves, so the incrementally maintained inverse is used as is.
    """
    if lambda_fixed < 0.0:
        raise ValueError("fixed penalty must be non-negative")
    if gram.ridge_lambda != lambda_fixed:
        raise ValueError("gram was not built with the requested fixed penalty")
    window_size = len(buf)
    theta = ridge_estimate(gram)
    y_hat = float(theta @ obs.x)
    truth_mean = float(truth.theta_star @ obs.x)
    gap = truth_mean - y_hat
    radius, valid = ridge_ellipsoid_radius(
        gram, sigma, truth, delta, window_size, gram.dim
    )
    phi_sq = gram.min_eig / window_size if window_size else 0.0
    q_lambda = gram.x_inf_norm / phi_sq if phi_sq > 0.0 else float("nan")
    if x_outgoing is not None:
        fr = frt(gram.inv, x_outgoing, obs.x)
        frt_val, del_sq, inc_sq = fr.frt, fr.deleted_norm_sq, fr.incoming_norm_sq
    else:
        inc_sq = max(float(obs.x @ (gram.inv @ obs.x)), 0.0)
        frt_val, del_sq = 0.0, 0.0
    state.theta_hat = theta
    state.lambda_t = lambda_fixed
    state.kappa = _kappa(truth.p_count, delta, gram.dim) if truth.p_count else 1.0
    state.nu = truth.inf_norm / truth.p_min if truth.p_count else 1.0
    state.q_lambda = q_lambda
    state.beta_radius = radius
    state.lambda_delta = 0.0
    return StepRecord(
        t=t,
        y_hat=y_hat,
        pseudo_regret=gap * gap,
        abs_loss=abs(gap),
        cum_regret=0.0,
        l2_error=float(np.linalg.norm(theta - truth.theta_star)),
        lam=lambda_fixed,
        lambda_delta=0.0,
        rank=gram.rank,
        min_eig=gram.min_eig,
        frt=frt_val,
        beta=radius,
        ellipsoid_valid=valid,
        window_size=window_size,
        x_norm_inv_sq=inc_sq,
        deleted_norm_sq=del_sq,
        q_value=q_lambda,
        logdet_window=gram.log_pdet,
        c2_log_step=0.0,
    )


def fixed_ridge_step(
    buf: WindowBuffer,
    gram: GramState,
    state: RidgeState,
    obs: Observation,
    truth: TruthProfile,
    sigma: float,
    delta: float,
    lambda_fixed: float,
    t: int = 0,
) -> StepRecord:
    """One constant-penalty round: predict, ingest, evict oldest."""
    outgoing = buf.oldest.x if len(buf) >= buf.capacity else None
    record = fixed_ridge_prediction_record(
        buf, gram, state, obs, truth, sigma, delta, lambda_fixed, t,
        x_outgoing=outgoing,
    )
    push(buf, gram, obs)
    return record


def switching_step(mode: str, n_accumulated: int, dim: int) -> str:
    """Permanent ridge-to-least-squares switch once n exceeds twice dim."""
    if mode not in ("ridge", "ols"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "ols" or n_accumulated > 2 * dim:
        return "ols"
    return "ridge"
