"""Correlation-aware projection bank and the regularising force it induces."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .numkit import as_points, correlation_matrix, symmetric_eigen


@dataclass(frozen=True)
class ProjectionBank:
    """``m`` projection matrices of shape ``(d, k)`` with importance weights.

    ``matrices`` is stored as one ``(m, d, k)`` array.
    """

    matrices: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        mats = np.array(self.matrices, dtype=float)
        if mats.ndim == 2:
            mats = mats[:, :, None]
        w = np.array(self.weights, dtype=float).ravel()
        if mats.ndim != 3 or mats.shape[0] != w.size or w.size < 1:
            raise ContractError(f"bank shapes disagree: matrices {mats.shape}, weights {w.shape}")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ContractError("bank weights must be nonnegative and sum to 1")
        mats.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return self.matrices.shape[0]

    @property
    def d(self) -> int:
        return self.matrices.shape[1]

    @property
    def k(self) -> int:
        return self.matrices.shape[2]

    def operator(self) -> np.ndarray:
        """``sum_i w_i A_i A_i^T`` as a ``(d, d)`` matrix."""
        return np.einsum("m,mik,mjk->ij", self.weights, self.matrices, self.matrices)

    def orthonormality_error(self) -> float:
        gram = np.einsum("mik,mil->mkl", self.matrices, self.matrices)
        return float(np.abs(gram - np.eye(self.k)).max())


def _normalise(w: np.ndarray) -> np.ndarray:
    w = np.maximum(np.asarray(w, dtype=float), 0.0)
    total = w.sum()
    if not np.isfinite(total) or total <= 0.0:
        return np.full(w.size, 1.0 / w.size)
    return w / total


def _orthonormal_columns(a: np.ndarray) -> np.ndarray:
    """Gram-Schmidt (via QR) with column signs kept aligned to the input."""
    q, r = np.linalg.qr(a)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def bank_size(d: int, m: int, k: int) -> int:
    """Number of projections that fit: ``m * k`` columns may not exceed ``d``."""
    if k < 1 or k > d:
        raise ContractError(f"projection rank k={k} must lie in [1, {d}]")
    return max(1, min(m, d // k))


def random_projections(d: int, m: int, k: int, rng: np.random.Generator) -> ProjectionBank:
    """Mutually orthonormal random directions with uniform weights."""
    m = bank_size(d, m, k)
    q = _orthonormal_columns(rng.standard_normal((d, m * k)))
    mats = q.T.reshape(m, k, d).transpose(0, 2, 1)
    return ProjectionBank(mats, np.full(m, 1.0 / m))


def init_projections(q, p_samples, m: int, k: int = 1, rng: np.random.Generator | None = None) -> ProjectionBank:
    """Bank from the leading eigenvectors of ``corr(q) - corr(p)``.

    Eigenvectors are taken in descending eigenvalue order, ``k`` per
    projection; weights follow the (positive part of the) eigenvalues.
    A vanishing correlation difference yields random directions.
    """
    q = as_points(q)
    p = as_points(p_samples)
    if q.shape[1] != p.shape[1]:
        raise ContractError("particle and target samples differ in dimension")
    if q.shape[0] < 2 or p.shape[0] < 2:
        raise ContractError("need at least two samples on each side")
    d = q.shape[1]
    m = bank_size(d, m, k)
    delta = correlation_matrix(q) - correlation_matrix(p)
    if np.linalg.norm(delta) < 1e-8:
        return random_projections(d, m, k, rng if rng is not None else np.random.default_rng(0))
    vals, vecs = symmetric_eigen(delta)
    cols = vecs[:, : m * k]
    mats = cols.T.reshape(m, k, d).transpose(0, 2, 1)
    w = vals[: m * k].reshape(m, k).sum(axis=1)
    return ProjectionBank(mats, _normalise(w))


def _pairing(q: np.ndarray, p: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Indices into ``p`` rank-matched to ``q`` along ``direction``."""
    iq = np.argsort(q @ direction, kind="stable")
    ip = np.argsort(p @ direction, kind="stable")
    out = np.empty(q.shape[0], dtype=int)
    out[iq] = ip
    return out


def projection_objective(a: np.ndarray, q: np.ndarray, p: np.ndarray) -> float:
    """Mean squared projected gap ``|A^T (x_b - y_b)|^2`` over rank-matched pairs."""
    diff = q - p[_pairing(q, p, a[:, 0])]
    proj = diff @ a
    return float(np.mean(np.sum(proj * proj, axis=1)))


def optimize_projections(
    bank: ProjectionBank,
    q,
    p_samples,
    steps: int = 20,
    lr: float = 0.05,
    refresh_weights: bool = True,
) -> ProjectionBank:
    """Gradient ascent on the projected transport gap for each projection.

    Pairs are formed by rank matching along the current leading column, so
    the objective is the squared sliced 2-Wasserstein gap. Steps that lower
    the objective are rejected and the learning rate halved. With
    ``refresh_weights`` the weights are reset proportional to the final
    per-projection objective.
    """
    q = as_points(q)
    p = as_points(p_samples)
    if q.shape != p.shape:
        raise ContractError(f"particle and target sample arrays must match in shape: {q.shape} vs {p.shape}")
    if bank.d != q.shape[1]:
        raise ContractError("bank dimension does not match particles")
    n = q.shape[0]
    mats = np.array(bank.matrices)
    scores = np.zeros(bank.m)
    for i in range(bank.m):
        a = mats[i]
        obj = projection_objective(a, q, p)
        rate = lr
        for _ in range(steps):
            diff = q - p[_pairing(q, p, a[:, 0])]
            grad = (2.0 / n) * diff.T @ (diff @ a)
            if not np.all(np.isfinite(grad)) or np.abs(grad).max() < 1e-14:
                break
            cand = _orthonormal_columns(a + rate * grad)
            new = projection_objective(cand, q, p)
            if new + 1e-12 >= obj:
                a, obj = cand, new
            else:
                rate *= 0.5
        mats[i] = a
        scores[i] = obj
    if refresh_weights and scores.sum() > 0.0:
        weights = _normalise(scores)
    else:
        weights = bank.weights
    return ProjectionBank(mats, weights)


def corr_penalty(bank: ProjectionBank, velocities) -> float:
    """``mean_x sum_i w_i |A_i^T (v(x) - mean v)|^2``."""
    v = as_points(velocities)
    dev = v - v.mean(axis=0)
    proj = np.einsum("nd,mdk->nmk", dev, bank.matrices)
    return float(np.mean(np.einsum("m,nmk->n", bank.weights, proj * proj)))


def corr_penalty_grad(bank: ProjectionBank, velocities) -> np.ndarray:
    """Gradient of :func:`corr_penalty` with respect to each velocity row."""
    v = as_points(velocities)
    dev = v - v.mean(axis=0)
    return (2.0 / v.shape[0]) * dev @ bank.operator()


def corr_reg_force(bank: ProjectionBank, x, lam: float) -> np.ndarray:
    """Row i is ``-lam * sum_k w_k A_k A_k^T (x_i - mean x)``."""
    x = as_points(x)
    if lam == 0.0:
        return np.zeros_like(x)
    dev = x - x.mean(axis=0)
    return -lam * dev @ bank.operator()


def approximation_residual(bank: ProjectionBank, cov: np.ndarray) -> float:
    """``||Sigma - sum_i w_i A_i A_i^T||_F`` (diagnostic only)."""
    return float(np.linalg.norm(np.asarray(cov) - bank.operator()))
