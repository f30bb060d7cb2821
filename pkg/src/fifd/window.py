"""Sliding-window design state: gram matrix, response cross-product, inverse.

The window holds the most recent observations under a hard retention limit.
The gram matrix and its (pseudo-)inverse are maintained with rank-one
up/downdates while the matrix stays invertible, and are rebuilt from a full
symmetric eigendecomposition whenever rank deficiency or a numerically unsafe
downdate is detected.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

# Eigenvalues below RANK_TOL times the largest one count as zero.
RANK_TOL = 1e-10
# A downdate whose denominator |x' inv x - 1| falls below this is unsafe.
DOWNDATE_TOL = 1e-8
# Incrementally maintained inverses are rebuilt after this many pushes.
REFRESH_INTERVAL = 500


class SignalFallback:
    """Sentinel: the requested downdate would cross a rank boundary."""

    __slots__ = ()

    def __repr__(self) -> str:  # pragma: no cover
        return "SignalFallback"


SIGNAL_FALLBACK = SignalFallback()


@dataclass
class Observation:
    """One (context, response) pair. Context is a 1-d float vector."""

    x: np.ndarray
    y: float

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=float)
        self.y = float(self.y)
        if self.x.ndim != 1:
            raise ValueError("observation context must be a 1-d vector")
        if not np.all(np.isfinite(self.x)) or not np.isfinite(self.y):
            raise ValueError("observation contains non-finite values")


class WindowBuffer:
    """Bounded FIFO of observations; tracks the entrywise sup norm."""

    def __init__(self, capacity: int):
        if int(capacity) != capacity or capacity < 1:
            raise ValueError("window capacity must be a positive integer")
        self.capacity = int(capacity)
        self._items: deque[Observation] = deque()
        self._abs_max: deque[float] = deque()

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[Observation]:
        return iter(self._items)

    @property
    def oldest(self) -> Observation:
        if not self._items:
            raise IndexError("window is empty")
        return self._items[0]

    def append(self, obs: Observation) -> Observation | None:
        """Add one observation; return the evicted one if over capacity."""
        self._items.append(obs)
        self._abs_max.append(float(np.max(np.abs(obs.x))) if obs.x.size else 0.0)
        if len(self._items) > self.capacity:
            self._abs_max.popleft()
            return self._items.popleft()
        return None

    def popleft(self) -> Observation:
        if not self._items:
            raise IndexError("window is empty")
        self._abs_max.popleft()
        return self._items.popleft()

    def x_inf_norm(self) -> float:
        """sup of |entry| over every context currently retained."""
        return max(self._abs_max) if self._abs_max else 0.0

    def responses(self) -> np.ndarray:
        return np.array([obs.y for obs in self._items], dtype=float)


@dataclass
class GramState:
    """Gram matrix (plus any ridge offset), its inverse, and spectral stats.

    `phi` always includes `ridge_lambda * I`; `rank` counts the eigenvalues
    of the data part `phi - ridge_lambda * I` above the rank tolerance, so it
    tracks the design's rank even when the ridge offset makes phi invertible.
    `min_eig` is the smallest eigenvalue of phi clamped at zero, and
    `min_pos_eig` the smallest eigenvalue above the tolerance (used for the
    quantities that divide by the smallest positive eigenvalue of phi / s).
    """

    dim: int
    phi: np.ndarray
    inv: np.ndarray
    xy_sum: np.ndarray
    ridge_lambda: float = 0.0
    rank: int = 0
    min_eig: float = 0.0
    min_pos_eig: float = 0.0
    log_pdet: float = 0.0
    x_inf_norm: float = 0.0
    eig_phi: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    updates_since_refresh: int = 0

    @classmethod
    def from_observations(
        cls,
        dim: int,
        observations: Iterable[Observation] = (),
        ridge_lambda: float = 0.0,
    ) -> "GramState":
        if dim < 1:
            raise ValueError("dimension must be positive")
        if ridge_lambda < 0:
            raise ValueError("ridge offset must be non-negative")
        phi = ridge_lambda * np.eye(dim)
        xy = np.zeros(dim)
        sup = 0.0
        for obs in observations:
            if obs.x.shape != (dim,):
                raise ValueError("observation dimension mismatch")
            phi += np.outer(obs.x, obs.x)
            xy += obs.y * obs.x
            if obs.x.size:
                sup = max(sup, float(np.max(np.abs(obs.x))))
        gram = cls(dim=dim, phi=phi, inv=np.zeros((dim, dim)), xy_sum=xy,
                   ridge_lambda=float(ridge_lambda), x_inf_norm=sup)
        recompute_pseudo_inverse(gram)
        return gram


def _assign_spectral_stats(gram: GramState, eigvals: np.ndarray) -> None:
    """Refresh rank/min-eig/log-pdet fields from eigenvalues of phi."""
    w = np.asarray(eigvals, dtype=float)
    gram.eig_phi = w
    gram.min_eig = max(float(w[0]), 0.0)
    top = float(w[-1]) if w.size else 0.0
    tol = RANK_TOL * max(top, 0.0)
    positive = w > tol
    gram.min_pos_eig = float(w[positive][0]) if positive.any() else 0.0
    gram.log_pdet = float(np.sum(np.log(w[positive]))) if positive.any() else 0.0
    data_w = w - gram.ridge_lambda
    data_top = float(data_w[-1]) if data_w.size else 0.0
    data_tol = RANK_TOL * max(data_top, 0.0)
    gram.rank = int(np.sum(data_w > data_tol))


def recompute_pseudo_inverse(gram: GramState) -> GramState:
    """Rebuild `inv` from a full eigendecomposition of phi, in place.

    Eigenvalues at or below the rank tolerance are treated as exact zeros, so
    for a rank-deficient phi this produces the Moore-Penrose pseudo-inverse.
    Also refreshes every spectral stat and resets the drift counter.
    """
    w, v = np.linalg.eigh(gram.phi)
    tol = RANK_TOL * max(float(w[-1]), 0.0) if w.size else 0.0
    keep = w > tol
    if keep.any():
        vk = v[:, keep]
        inv = (vk / w[keep]) @ vk.T
        gram.inv = (inv + inv.T) / 2.0
    else:
        gram.inv = np.zeros((gram.dim, gram.dim))
    _assign_spectral_stats(gram, w)
    gram.updates_since_refresh = 0
    return gram


def inverse_add_update(inv: np.ndarray, x_new: np.ndarray) -> np.ndarray:
    """Inverse of (phi + x x') given inv = phi^-1, phi invertible."""
    v = inv @ x_new
    return inv - np.outer(v, v) / (float(x_new @ v) + 1.0)


def inverse_delete_update(
    inv: np.ndarray, x_old: np.ndarray
) -> np.ndarray | SignalFallback:
    """Inverse of (phi - x x') given inv = phi^-1, or the fallback sentinel.

    The denominator x' inv x - 1 approaches zero exactly when removing x_old
    would drop the rank; such calls return SIGNAL_FALLBACK so the caller can
    rebuild a pseudo-inverse instead.
    """
    v = inv @ x_old
    den = float(x_old @ v) - 1.0
    if abs(den) < DOWNDATE_TOL:
        return SIGNAL_FALLBACK
    return inv - np.outer(v, v) / den


def _add_into(gram: GramState, obs: Observation) -> None:
    if obs.x.shape != (gram.dim,):
        raise ValueError("observation dimension mismatch")
    gram.phi += np.outer(obs.x, obs.x)
    gram.xy_sum += obs.y * obs.x


def _remove_from(gram: GramState, obs: Observation) -> None:
    gram.phi -= np.outer(obs.x, obs.x)
    gram.xy_sum -= obs.y * obs.x


def _phi_invertible(gram: GramState) -> bool:
    return gram.ridge_lambda > 0.0 or gram.rank >= gram.dim


def push(
    buf: WindowBuffer,
    gram: GramState,
    obs: Observation,
    refresh_stats: bool = True,
) -> Observation | None:
    """Ingest one observation, evicting the oldest if over capacity.

    The new context is applied first and the eviction second. While phi is
    invertible both moves go through the rank-one update formulas; any unsafe
    downdate or standing rank deficiency routes through a full rebuild, as
    does every REFRESH_INTERVAL-th push (drift control).

    With refresh_stats=False the spectral stats (rank, min_eig, log_pdet) are
    left stale on the incremental path; callers that rebuild the inverse at
    the start of the next step may skip the extra eigendecomposition here.
    Returns the evicted observation, if any.
    """
    incremental = _phi_invertible(gram)
    evicted = buf.append(obs)
    _add_into(gram, obs)
    if incremental:
        gram.inv = inverse_add_update(gram.inv, obs.x)
    if evicted is not None:
        _remove_from(gram, evicted)
        if incremental:
            out = inverse_delete_update(gram.inv, evicted.x)
            if isinstance(out, SignalFallback):
                incremental = False
            else:
                gram.inv = out
    gram.updates_since_refresh += 1
    gram.x_inf_norm = buf.x_inf_norm()
    if not incremental or gram.updates_since_refresh >= REFRESH_INTERVAL:
        recompute_pseudo_inverse(gram)
    elif refresh_stats:
        _assign_spectral_stats(gram, np.linalg.eigvalsh(gram.phi))
        if gram.ridge_lambda == 0.0 and gram.rank < gram.dim:
            # rank fell without tripping the downdate guard: heal now
            recompute_pseudo_inverse(gram)
    return evicted


def evict_oldest(
    buf: WindowBuffer, gram: GramState, refresh_stats: bool = True
) -> Observation:
    """Remove the oldest observation without ingesting a new one.

    Used by schedules that add several observations per round but delete
    exactly one; plain sliding windows get their eviction from push().
    """
    incremental = _phi_invertible(gram)
    evicted = buf.popleft()
    _remove_from(gram, evicted)
    if incremental:
        out = inverse_delete_update(gram.inv, evicted.x)
        if isinstance(out, SignalFallback):
            incremental = False
        else:
            gram.inv = out
    gram.updates_since_refresh += 1
    gram.x_inf_norm = buf.x_inf_norm()
    if not incremental or gram.updates_since_refresh >= REFRESH_INTERVAL:
        recompute_pseudo_inverse(gram)
    elif refresh_stats:
        _assign_spectral_stats(gram, np.linalg.eigvalsh(gram.phi))
        if gram.ridge_lambda == 0.0 and gram.rank < gram.dim:
            recompute_pseudo_inverse(gram)
    return evicted
