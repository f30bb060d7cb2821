"""Sliding-window least squares with a weighted-norm confidence ellipsoid."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import frt
from .records import StepRecord
from .window import GramState, Observation, WindowBuffer, push


@dataclass
class OlsState:
    """Estimator state refreshed once per prediction step."""

    theta_hat: np.ndarray
    q_adaptive: float = float("nan")
    beta_radius: float = float("nan")
    ellipsoid_valid: bool = False

    @classmethod
    def initial(cls, dim: int) -> "OlsState":
        return cls(theta_hat=np.zeros(dim))


def ols_estimate(gram: GramState) -> np.ndarray:
    """Minimum-norm least-squares coefficients for the current window."""
    return gram.inv @ gram.xy_sum


def ols_predict(theta: np.ndarray, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    if theta.shape != x.shape:
        raise ValueError("dimension mismatch between coefficients and context")
    return float(theta @ x)


def ols_ellipsoid_radius(
    gram: GramState, sigma: float, delta: float, window_size: int, dim: int
) -> tuple[float, bool]:
    """Radius of the gram-weighted confidence ball around theta_hat.

    radius = sigma * q * sqrt((2 d / s) * log(2 d / delta)) where q divides
    the window's entrywise sup norm by the smallest positive eigenvalue of
    phi / s. The radius is only trustworthy for a full-rank window (valid
    flag); rank-deficient windows still get a finite number from the
    smallest positive eigenvalue so traces stay plottable.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if sigma < 0.0:
        raise ValueError("noise scale must be non-negative")
    if window_size < 1:
        return float("nan"), False
    phi_sq = gram.min_pos_eig / window_size
    if phi_sq <= 0.0:
        return float("nan"), False
    q = gram.x_inf_norm / phi_sq
    radius = sigma * q * math.sqrt(
        (2.0 * dim / window_size) * math.log(2.0 * dim / delta)
    )
    return radius, gram.rank == dim


def ols_prediction_record(
    buf: WindowBuffer,
    gram: GramState,
    state: OlsState,
    obs: Observation,
    theta_star: np.ndarray,
    sigma: float,
    delta: float,
    t: int,
    x_outgoing: np.ndarray | None = None,
) -> StepRecord:
    """Predict obs.x from the current window and record diagnostics.

    Does not slide the window; callers ingest afterwards. x_outgoing is the
    context about to be deleted, used for the forgetting-cost diagnostic.
    """
    dim = gram.dim
    theta = ols_estimate(gram)
    y_hat = ols_predict(theta, obs.x)
    truth_mean = float(np.asarray(theta_star) @ obs.x)
    gap = truth_mean - y_hat
    window_size = len(buf)
    radius, valid = ols_ellipsoid_radius(gram, sigma, delta, window_size, dim)
    phi_sq = gram.min_pos_eig / window_size if window_size else 0.0
    q = gram.x_inf_norm / phi_sq if phi_sq > 0.0 else float("nan")
    if x_outgoing is not None:
        fr = frt(gram.inv, x_outgoing, obs.x)
        frt_val, del_sq, inc_sq = fr.frt, fr.deleted_norm_sq, fr.incoming_norm_sq
    else:
        inc_sq = max(float(obs.x @ (gram.inv @ obs.x)), 0.0)
        frt_val, del_sq = 0.0, 0.0
    state.theta_hat = theta
    state.q_adaptive = q
    state.beta_radius = radius
    state.ellipsoid_valid = valid
    return StepRecord(
        t=t,
        y_hat=y_hat,
        pseudo_regret=gap * gap,
        abs_loss=abs(gap),
        cum_regret=0.0,
        l2_error=float(np.linalg.norm(theta - np.asarray(theta_star))),
        lam=0.0,
        lambda_delta=0.0,
        rank=gram.rank,
        min_eig=gram.min_eig,
        frt=frt_val,
        beta=radius,
        ellipsoid_valid=valid,
        window_size=window_size,
        x_norm_inv_sq=inc_sq,
        deleted_norm_sq=del_sq,
        q_value=q,
        logdet_window=gram.log_pdet,
        c2_log_step=0.0,
    )


def fifd_ols_step(
    buf: WindowBuffer,
    gram: GramState,
    state: OlsState,
    obs: Observation,
    theta_star: np.ndarray,
    sigma: float,
    delta: float,
    t: int = 0,
) -> StepRecord:
    """One sliding-window round: predict, reveal, ingest, evict oldest."""
    outgoing = buf.oldest.x if len(buf) >= buf.capacity else None
    record = ols_prediction_record(
        buf, gram, state, obs, theta_star, sigma, delta, t, x_outgoing=outgoing
    )
    push(buf, gram, obs)
    return record
