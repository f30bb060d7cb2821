"""Window buffer and incremental gram maintenance."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fifd.window import (
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


def make_stream(rng: np.random.Generator, n: int, dim: int) -> list[Observation]:
    xs = rng.standard_normal((n, dim))
    ys = rng.standard_normal(n)
    return [Observation(x, y) for x, y in zip(xs, ys)]


def batch_gram(observations, dim: int, lam: float = 0.0) -> np.ndarray:
    phi = lam * np.eye(dim)
    for obs in observations:
        phi += np.outer(obs.x, obs.x)
    return phi


def test_observation_validation():
    with pytest.raises(ValueError):
        Observation(np.array([1.0, np.nan]), 0.0)
    with pytest.raises(ValueError):
        Observation(np.array([1.0, 2.0]), np.inf)
    with pytest.raises(ValueError):
        Observation(np.eye(2), 0.0)


def test_buffer_validation_and_oldest():
    with pytest.raises(ValueError):
        WindowBuffer(0)
    buf = WindowBuffer(3)
    with pytest.raises(IndexError):
        _ = buf.oldest
    a = Observation(np.array([1.0]), 2.0)
    buf.append(a)
    assert buf.oldest is a
    assert buf.x_inf_norm() == 1.0


def test_buffer_eviction_order_and_sup_norm():
    buf = WindowBuffer(2)
    a = Observation(np.array([3.0, 0.0]), 0.0)
    b = Observation(np.array([0.0, 1.0]), 0.0)
    c = Observation(np.array([0.5, 0.5]), 0.0)
    assert buf.append(a) is None
    assert buf.append(b) is None
    evicted = buf.append(c)
    assert evicted is a
    # sup norm must drop once the big context leaves
    assert buf.x_inf_norm() == 1.0


def test_incremental_push_matches_batch_gram():
    rng = np.random.default_rng(11)
    dim, cap = 6, 15
    buf = WindowBuffer(cap)
    gram = GramState.from_observations(dim)
    stream = make_stream(rng, 60, dim)
    for obs in stream:
        push(buf, gram, obs)
        retained = list(buf)
        np.testing.assert_allclose(
            gram.phi, batch_gram(retained, dim), rtol=0, atol=1e-9
        )
        expected_xy = sum((o.y * o.x for o in retained), np.zeros(dim))
        np.testing.assert_allclose(gram.xy_sum, expected_xy, rtol=0, atol=1e-9)
        assert gram.x_inf_norm == pytest.approx(buf.x_inf_norm())


def test_incremental_inverse_matches_pinv_oracle():
    # oracle goes through SVD, the implementation through eigh
    rng = np.random.default_rng(5)
    dim, cap = 5, 12
    buf = WindowBuffer(cap)
    gram = GramState.from_observations(dim)
    for obs in make_stream(rng, 80, dim):
        push(buf, gram, obs)
        np.testing.assert_allclose(
            gram.inv, np.linalg.pinv(gram.phi, rcond=1e-10), atol=1e-7
        )


def test_add_then_delete_round_trip():
    rng = np.random.default_rng(23)
    dim = 7
    base = make_stream(rng, 30, dim)
    gram = GramState.from_observations(dim, base)
    inv0 = gram.inv.copy()
    x = rng.standard_normal(dim)
    inv1 = inverse_add_update(inv0, x)
    back = inverse_delete_update(inv1, x)
    assert not isinstance(back, SignalFallback)
    np.testing.assert_allclose(back, inv0, atol=1e-9)


def test_delete_sentinel_on_rank_boundary():
    # single observation: x' pinv(xx') x = 1 exactly, downdate must bail
    x = np.array([1.0, 2.0, -1.0])
    gram = GramState.from_observations(3, [Observation(x, 1.0)])
    result = inverse_delete_update(gram.inv, x)
    assert isinstance(result, SignalFallback)


def test_push_falls_back_after_sentinel():
    # evicting the only direction present forces the pseudo-inverse path
    dim = 3
    buf = WindowBuffer(1)
    gram = GramState.from_observations(dim)
    push(buf, gram, Observation(np.array([1.0, 0.0, 0.0]), 1.0))
    assert gram.rank == 1
    push(buf, gram, Observation(np.array([0.0, 1.0, 0.0]), 1.0))
    assert gram.rank == 1
    assert len(buf) == 1
    np.testing.assert_allclose(
        gram.phi, np.diag([0.0, 1.0, 0.0]), atol=1e-12
    )
    np.testing.assert_allclose(
        gram.inv, np.diag([0.0, 1.0, 0.0]), atol=1e-10
    )


def test_evict_oldest_returns_and_removes():
    rng = np.random.default_rng(3)
    dim = 4
    buf = WindowBuffer(10)
    gram = GramState.from_observations(dim)
    stream = make_stream(rng, 6, dim)
    for obs in stream:
        push(buf, gram, obs)
    gone = evict_oldest(buf, gram)
    assert gone is stream[0]
    assert len(buf) == 5
    np.testing.assert_allclose(
        gram.phi, batch_gram(stream[1:], dim), atol=1e-9
    )
    empty_buf = WindowBuffer(2)
    with pytest.raises(IndexError):
        evict_oldest(empty_buf, GramState.from_observations(dim))


def test_spectral_stats_track_recompute():
    rng = np.random.default_rng(17)
    dim = 5
    stream = make_stream(rng, 9, dim)
    gram = GramState.from_observations(dim, stream)
    w = np.linalg.eigvalsh(gram.phi)
    assert gram.rank == dim
    assert gram.min_eig == pytest.approx(float(w[0]), rel=1e-10)
    assert gram.min_pos_eig == pytest.approx(float(w[0]), rel=1e-10)
    pos = w[w > 1e-10 * w[-1]]
    assert gram.log_pdet == pytest.approx(float(np.sum(np.log(pos))), rel=1e-9)


def test_rank_deficient_stats():
    dim = 4
    obs = [Observation(np.eye(dim)[i], 1.0) for i in range(2)]
    gram = GramState.from_observations(dim, obs)
    assert gram.rank == 2
    assert gram.min_eig == 0.0
    assert gram.min_pos_eig == pytest.approx(1.0)
    assert gram.log_pdet == pytest.approx(0.0)


def test_from_observations_dimension_mismatch():
    with pytest.raises(ValueError):
        GramState.from_observations(3, [Observation(np.ones(2), 0.0)])
    with pytest.raises(ValueError):
        GramState.from_observations(0)
    with pytest.raises(ValueError):
        GramState.from_observations(3, ridge_lambda=-1.0)


def test_ridge_offset_included_in_phi():
    x = np.array([2.0, 0.0])
    gram = GramState.from_observations(2, [Observation(x, 1.0)], ridge_lambda=0.5)
    np.testing.assert_allclose(gram.phi, np.diag([4.5, 0.5]))
    # data rank excludes the ridge offset
    assert gram.rank == 1
    np.testing.assert_allclose(gram.inv, np.diag([1 / 4.5, 2.0]), atol=1e-12)


def test_recompute_pseudo_inverse_symmetrizes():
    rng = np.random.default_rng(2)
    gram = GramState.from_observations(4, make_stream(rng, 10, 4))
    gram.phi += 1e-13 * rng.standard_normal((4, 4))  # tiny asymmetry
    recompute_pseudo_inverse(gram)
    np.testing.assert_allclose(gram.inv, gram.inv.T, atol=0)


small_vectors = st.lists(
    st.integers(min_value=-3, max_value=3), min_size=2, max_size=4
)


@settings(max_examples=60, deadline=None)
@given(st.lists(small_vectors, min_size=1, max_size=12), st.integers(2, 8))
def test_rank_moves_at_most_one_per_push(rows, cap):
    dim = len(rows[0])
    buf = WindowBuffer(cap)
    gram = GramState.from_observations(dim)
    prev_rank = 0
    for row in rows:
        if len(row) != dim:
            row = (row + [0] * dim)[:dim]
        push(buf, gram, Observation(np.array(row, dtype=float), 1.0))
        assert abs(gram.rank - prev_rank) <= 1
        prev_rank = gram.rank


@settings(max_examples=60, deadline=None)
@given(st.lists(small_vectors, min_size=1, max_size=12), st.integers(2, 8))
def test_incremental_inverse_agrees_with_pinv(rows, cap):
    dim = len(rows[0])
    buf = WindowBuffer(cap)
    gram = GramState.from_observations(dim)
    for row in rows:
        if len(row) != dim:
            row = (row + [0] * dim)[:dim]
        push(buf, gram, Observation(np.array(row, dtype=float), 1.0))
    oracle = np.linalg.pinv(gram.phi, rcond=1e-8)
    np.testing.assert_allclose(gram.inv, oracle, atol=1e-6)
