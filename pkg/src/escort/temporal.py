"""Temporal consistency: sliced W1 between consecutive beliefs and the matching force."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .numkit import as_points, pairwise_sq_dist, symmetric_eigen, wasserstein1_1d

FORCE_CLIP = 10.0
FD_STEP = 1e-6


@dataclass(frozen=True)
class TemporalDirections:
    """Unit directions with importance weights and per-direction momentum."""

    directions: np.ndarray
    weights: np.ndarray
    momentum: np.ndarray | None = None

    def __post_init__(self):
        dirs = np.array(self.directions, dtype=float)
        if dirs.ndim == 1:
            dirs = dirs[None, :]
        w = np.array(self.weights, dtype=float).ravel()
        if dirs.ndim != 2 or dirs.shape[0] != w.size or w.size < 1:
            raise ContractError(f"direction/weight shapes disagree: {dirs.shape} vs {w.shape}")
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(norms == 0):
            raise ContractError("directions must be nonzero")
        dirs = dirs / norms[:, None]
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ContractError("direction weights must be nonnegative and sum to 1")
        mom = np.zeros_like(dirs) if self.momentum is None else np.array(self.momentum, dtype=float)
        if mom.shape != dirs.shape:
            raise ContractError("momentum shape must match directions")
        for name, val in (("directions", dirs), ("weights", w), ("momentum", mom)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def m(self) -> int:
        return self.directions.shape[0]

    @property
    def d(self) -> int:
        return self.directions.shape[1]


def _check_pair(prev, curr):
    prev = as_points(prev)
    curr = as_points(curr)
    if prev.shape != curr.shape:
        raise ContractError(f"consecutive beliefs must match in shape: {prev.shape} vs {curr.shape}")
    return prev, curr


def _covariance_eigen(x: np.ndarray):
    xc = x - x.mean(axis=0)
    cov = xc.T @ xc / max(x.shape[0] - 1, 1)
    return symmetric_eigen(cov)


def init_directions(curr, m: int, rng: np.random.Generator) -> TemporalDirections:
    """Top covariance eigenvectors of ``curr``, padded with random unit vectors."""
    curr = as_points(curr)
    d = curr.shape[1]
    if curr.shape[0] >= 2:
        _, vecs = _covariance_eigen(curr)
    else:
        vecs = np.eye(d)
    take = min(m, d)
    dirs = [vecs[:, i] for i in range(take)]
    for _ in range(m - take):
        v = rng.standard_normal(d)
        dirs.append(v / np.linalg.norm(v))
    return TemporalDirections(np.array(dirs), np.full(m, 1.0 / m))


def projected_w1(theta: np.ndarray, prev: np.ndarray, curr: np.ndarray) -> float:
    return wasserstein1_1d(curr @ theta, prev @ theta)[0]


def _batched_w1(thetas: np.ndarray, prev: np.ndarray, curr: np.ndarray) -> np.ndarray:
    """W1 along each row of ``thetas`` at once."""
    a = np.sort(thetas @ curr.T, axis=1)
    b = np.sort(thetas @ prev.T, axis=1)
    return np.mean(np.abs(a - b), axis=1)


def gswd(prev, curr, td: TemporalDirections) -> float:
    """Weighted sum over directions of the projected 1D W1 distance."""
    prev, curr = _check_pair(prev, curr)
    if td.d != prev.shape[1]:
        raise ContractError("direction dimension does not match particles")
    return float(td.weights @ _batched_w1(td.directions, prev, curr))


def optimize_directions(
    td: TemporalDirections,
    prev,
    curr,
    steps: int = 10,
    lr: float = 0.05,
    decay: float = 0.99,
    momentum: float = 0.9,
    refresh_weights: bool = True,
) -> TemporalDirections:
    """Momentum ascent on each direction's projected W1.

    The gradient is a central finite difference per coordinate, then
    preconditioned by the normalised covariance spectrum of ``curr``.
    Steps that lower the distance are rejected (momentum reset); a
    direction whose gradient is not finite keeps its previous value.
    """
    prev, curr = _check_pair(prev, curr)
    n, d = curr.shape
    if n < 2:
        raise ContractError("need at least two particles")
    vals, vecs = _covariance_eigen(curr)
    top = vals[0]
    spectrum = np.clip(vals / top, 0.0, 1.0) if top > 0 else np.ones(d)
    eye = np.eye(d)
    dirs = np.array(td.directions)
    mom = np.array(td.momentum)
    current = _batched_w1(dirs, prev, curr)
    for t in range(steps):
        rate = lr * decay**t
        for i in range(td.m):
            theta = dirs[i]
            probes = np.concatenate([theta + FD_STEP * eye, theta - FD_STEP * eye])
            w = _batched_w1(probes, prev, curr)
            grad = (w[:d] - w[d:]) / (2 * FD_STEP)
            if not np.all(np.isfinite(grad)):
                continue
            grad = vecs @ (spectrum * (vecs.T @ grad))
            v = momentum * mom[i] + rate * grad
            cand = theta + v
            norm = np.linalg.norm(cand)
            if not np.isfinite(norm) or norm == 0.0:
                continue
            cand = cand / norm
            val = projected_w1(cand, prev, curr)
            if val + 1e-12 >= current[i]:
                dirs[i], mom[i], current[i] = cand, v, val
            else:
                mom[i] = 0.0
    weights = td.weights
    if refresh_weights and current.sum() > 0.0:
        weights = current / current.sum()
    return TemporalDirections(dirs, weights, mom)


def _nearest_matching(prev: np.ndarray, curr: np.ndarray) -> np.ndarray:
    return np.argmin(pairwise_sq_dist(curr, prev), axis=1)


def temporal_force(prev, curr, td: TemporalDirections, lam: float) -> np.ndarray:
    """Transport-matching pull of each current particle toward its matched predecessor.

    Row i is ``lam * sum_j w_j (prev[sigma_j(i)] - curr[i])`` clipped to
    [-10, 10] per component, where ``sigma_j`` is the rank matching along
    direction j (nearest neighbour in full space if that projection fails).
    """
    prev, curr = _check_pair(prev, curr)
    if lam == 0.0:
        return np.zeros_like(curr)
    force = np.zeros_like(curr)
    for theta, w in zip(td.directions, td.weights):
        if w == 0.0:
            continue
        pc, pp = curr @ theta, prev @ theta
        if np.all(np.isfinite(pc)) and np.all(np.isfinite(pp)):
            _, sigma = wasserstein1_1d(pc, pp)
        else:
            sigma = _nearest_matching(prev, curr)
        force += w * (prev[sigma] - curr)
    force *= lam
    force = np.nan_to_num(force, nan=0.0, posinf=FORCE_CLIP, neginf=-FORCE_CLIP)
    return np.clip(force, -FORCE_CLIP, FORCE_CLIP)
