"""Adaptive penalty, signal-ratio condition, and penalized estimates."""

import math
from collections import deque

import numpy as np
import pytest

from fifd.ridge import (
    RidgeState,
    TruthProfile,
    adaptive_lambda,
    estimate_sigma,
    fixed_ridge_prediction_record,
    ridge_ellipsoid_radius,
    ridge_estimate,
    switching_step,
    wpssr_check,
)
from fifd.simharness import SimConfig, gen_context, gen_noise, gen_truth, run_schedule
from fifd.window import GramState, Observation, WindowBuffer


def make_truth(n_pos: int, dim: int, p_min: float = 0.1) -> TruthProfile:
    theta = -np.ones(dim)
    theta[:n_pos] = p_min
    return TruthProfile.from_theta(theta)


def test_penalty_zero_when_noise_estimate_zero():
    assert adaptive_lambda(0.0, 1.0, 100, 100, 0.05) == 0.0


def test_penalty_unit_log_case():
    # delta = 2/e makes log(2 d / delta) = 1 at d = 1, so the penalty
    # collapses to sqrt(2 s) = 2 at s = 2
    delta = 2.0 / math.e
    assert adaptive_lambda(1.0, 1.0, 2, 1, delta) == pytest.approx(2.0, rel=1e-14)


def test_penalty_reference_value():
    # frozen from a 50-digit evaluation of the closed form
    lam = adaptive_lambda(1.0, 1.0, 100, 100, 0.05, theta_inf_norm=1.0)
    assert lam == pytest.approx(40.728490372470295, rel=1e-12)


def test_penalty_scales_linearly():
    base = adaptive_lambda(0.7, 1.3, 50, 20, 0.05, theta_inf_norm=2.0)
    assert adaptive_lambda(1.4, 1.3, 50, 20, 0.05, theta_inf_norm=2.0) == pytest.approx(
        2.0 * base, rel=1e-12
    )
    assert adaptive_lambda(0.7, 2.6, 50, 20, 0.05, theta_inf_norm=2.0) == pytest.approx(
        2.0 * base, rel=1e-12
    )
    assert adaptive_lambda(0.7, 1.3, 50, 20, 0.05, theta_inf_norm=4.0) == pytest.approx(
        base / 2.0, rel=1e-12
    )


def test_penalty_validation():
    with pytest.raises(ValueError):
        adaptive_lambda(1.0, 1.0, 10, 5, 0.0)
    with pytest.raises(ValueError):
        adaptive_lambda(1.0, 1.0, 10, 5, 1.0)
    with pytest.raises(ValueError):
        adaptive_lambda(1.0, 1.0, 10, 5, 0.05, theta_inf_norm=0.0)
    with pytest.raises(ValueError):
        adaptive_lambda(1.0, 1.0, 0, 5, 0.05)


def test_sigma_estimate_is_sample_sd():
    y = np.array([1.0, 2.0, 4.0, 8.0])
    assert estimate_sigma(y) == pytest.approx(float(np.std(y, ddof=1)), rel=1e-14)
    assert estimate_sigma(2.0 * y) == pytest.approx(2.0 * estimate_sigma(y), rel=1e-14)
    with pytest.raises(ValueError):
        estimate_sigma(np.array([1.0]))


def test_signal_ratio_reference_bound():
    # frozen from a 50-digit evaluation; the published figure rounds to 1.02
    truth = make_truth(30, 110)
    res = wpssr_check(truth, window_size=100, dim=110, delta=0.05)
    assert res.applicable
    assert res.bound == pytest.approx(1.0183530331371879, rel=1e-12)
    assert round(res.bound, 2) == 1.02
    assert res.ratio == pytest.approx(0.1)
    assert res.holds


def test_signal_ratio_no_positive_coordinates():
    truth = TruthProfile.from_theta(-np.ones(5))
    res = wpssr_check(truth, 100, 5, 0.05)
    assert not res.applicable
    assert not res.holds
    assert math.isnan(res.ratio) and math.isnan(res.bound)


def test_signal_ratio_bound_monotonicity():
    bound = lambda s, d, p: wpssr_check(make_truth(p, d), s, d, 0.05).bound
    assert bound(50, 110, 30) < bound(100, 110, 30) < bound(200, 110, 30)
    assert bound(100, 110, 5) < bound(100, 110, 30) < bound(100, 110, 100)
    assert bound(100, 50, 30) > bound(100, 110, 30) > bound(100, 500, 30)


def test_signal_ratio_delta_validation():
    with pytest.raises(ValueError):
        wpssr_check(make_truth(2, 4), 10, 4, 1.5)


def test_huge_penalty_crushes_estimate():
    rng = np.random.default_rng(9)
    obs = [Observation(rng.standard_normal(6), rng.standard_normal()) for _ in range(20)]
    gram = GramState.from_observations(6, obs, ridge_lambda=1e12)
    assert float(np.linalg.norm(ridge_estimate(gram))) <= 1e-6


def test_penalized_estimate_matches_direct_solve():
    rng = np.random.default_rng(41)
    dim, n, lam = 5, 15, 3.7
    xs = rng.standard_normal((n, dim))
    ys = rng.standard_normal(n)
    gram = GramState.from_observations(
        dim, [Observation(x, y) for x, y in zip(xs, ys)], ridge_lambda=lam
    )
    oracle = np.linalg.solve(xs.T @ xs + lam * np.eye(dim), xs.T @ ys)
    np.testing.assert_allclose(ridge_estimate(gram), oracle, atol=1e-10)


def test_fixed_step_record_matches_direct_solve():
    rng = np.random.default_rng(6)
    dim, n, lam = 4, 10, 2.0
    xs = rng.standard_normal((n, dim))
    ys = rng.standard_normal(n)
    buf = WindowBuffer(n)
    obs_list = [Observation(x, y) for x, y in zip(xs, ys)]
    for o in obs_list:
        buf.append(o)
    gram = GramState.from_observations(dim, obs_list, ridge_lambda=lam)
    truth = make_truth(2, dim)
    state = RidgeState.initial(dim)
    incoming = Observation(rng.standard_normal(dim), 0.0)
    rec = fixed_ridge_prediction_record(
        buf, gram, state, incoming, truth, 1.0, 0.05, lam, t=n + 1
    )
    oracle = np.linalg.solve(xs.T @ xs + lam * np.eye(dim), xs.T @ ys)
    np.testing.assert_allclose(state.theta_hat, oracle, atol=1e-10)
    assert rec.y_hat == pytest.approx(float(oracle @ incoming.x), abs=1e-10)
    assert rec.lam == lam
    with pytest.raises(ValueError):
        fixed_ridge_prediction_record(
            buf, gram, state, incoming, truth, 1.0, 0.05, -1.0, t=n + 2
        )


def test_radius_falls_back_without_positive_signal():
    rng = np.random.default_rng(12)
    obs = [Observation(rng.standard_normal(3), 0.0) for _ in range(6)]
    gram = GramState.from_observations(3, obs, ridge_lambda=1.0)
    truth = TruthProfile.from_theta(-np.ones(3))
    radius, valid = ridge_ellipsoid_radius(gram, 1.0, truth, 0.05, 6, 3)
    assert not valid
    # kappa = nu = 1 fallback keeps the number finite
    phi_sq = gram.min_eig / 6
    expected = (gram.x_inf_norm / phi_sq) * math.sqrt(3 / 12.0)
    assert radius == pytest.approx(expected, rel=1e-12)


def test_switching_boundary():
    d = 7
    assert switching_step("ridge", 2 * d, d) == "ridge"
    assert switching_step("ridge", 2 * d + 1, d) == "ols"
    # the switch is one way
    assert switching_step("ols", 0, d) == "ols"
    with pytest.raises(ValueError):
        switching_step("blend", 5, d)


def test_adaptive_penalty_trace_matches_shadow_recomputation():
    # replay the exact schedule streams and recompute the penalty from the
    # retained window alone, independently of the engine internals
    cfg = SimConfig(
        d=100, s=40, t_horizon=300, sigma=1.0,
        algorithms=("fifd_adaptive_ridge",), base_seed=5,
    )
    trace = run_schedule(cfg, "fifd_adaptive_ridge", 0)

    seed = cfg.base_seed
    children = np.random.SeedSequence(seed).spawn(3)
    design_rng = np.random.default_rng(children[0])
    truth_rng = np.random.default_rng(children[1])
    noise_rng = np.random.default_rng(children[2])
    truth = gen_truth(truth_rng, cfg.d)
    np.testing.assert_allclose(truth.theta_star, trace.theta_star)

    def draw():
        x = gen_context(design_rng, cfg.d, cfg.design, cfg.L)
        eps = gen_noise(noise_rng, 1, cfg.noise, cfg.sigma, cfg.noise_df)[0]
        return x, float(truth.theta_star @ x + eps)

    window: deque[tuple[np.ndarray, float]] = deque(maxlen=cfg.s)
    for _ in range(cfg.s):
        window.append(draw())
    factor = math.sqrt(2.0 * cfg.s * math.log(2.0 * cfg.d / cfg.delta))
    for rec in trace.records:
        ys = np.array([y for _, y in window])
        x_inf = max(float(np.max(np.abs(x))) for x, _ in window)
        sigma_hat = float(np.std(ys, ddof=1))
        lam_expected = sigma_hat * x_inf * factor / truth.inf_norm
        assert rec.lam == pytest.approx(lam_expected, rel=1e-10)
        window.append(draw())


def test_adaptive_penalty_concentrates():
    cfg = SimConfig(
        d=100, s=40, t_horizon=3000, sigma=1.0,
        algorithms=("fifd_adaptive_ridge",), base_seed=3,
    )
    trace = run_schedule(cfg, "fifd_adaptive_ridge", 0)
    lam = np.array([r.lam for r in trace.records])
    assert lam.min() > 0
    assert float(lam.std() / lam.mean()) < 0.5
