"""Numerical primitives: distances, RBF kernels, correlation, Jacobi eigen, 1D transport."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError

# above this component magnitude the squared norm is computed in rescaled form
_LARGE_DIFF = 1e5
CORR_VAR_FLOOR = 1e-12


@dataclass(frozen=True)
class ParticleSet:
    """``n`` particles in ``d`` dimensions at a given timestep."""

    positions: np.ndarray
    timestep: int = 0

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim == 1:
            pos = pos[:, None]
        if pos.ndim != 2 or pos.shape[0] < 1 or pos.shape[1] < 1:
            raise ContractError(f"particle positions must be a non-empty n x d array, got shape {pos.shape}")
        if not np.all(np.isfinite(pos)):
            raise ContractError("particle positions must be finite")
        if self.timestep < 0:
            raise ContractError("timestep must be nonnegative")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.positions, dtype=dtype)

    def __len__(self):
        return self.n

    def mean(self) -> np.ndarray:
        return self.positions.mean(axis=0)

    def replace(self, positions=None, timestep=None) -> "ParticleSet":
        return ParticleSet(
            self.positions if positions is None else positions,
            self.timestep if timestep is None else timestep,
        )


def as_points(x) -> np.ndarray:
    """Coerce a ParticleSet, vector, or matrix to a float ``(n, d)`` array."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ContractError(f"expected an n x d array, got shape {arr.shape}")
    return arr


def _stable_sq_norm(diff: np.ndarray) -> np.ndarray:
    """Squared norm over the last axis using ||x||^2 = exp(2m) * sum exp(2(log|x_j| - m))."""
    absd = np.abs(diff)
    with np.errstate(divide="ignore"):
        logs = np.log(absd)
    m = logs.max(axis=-1, keepdims=True)
    zero = ~np.isfinite(m)
    m_safe = np.where(zero, 0.0, m)
    s = np.exp(2.0 * (logs - m_safe)).sum(axis=-1)
    out = np.exp(2.0 * m_safe[..., 0]) * s
    return np.where(zero[..., 0], 0.0, out)


def pairwise_sq_dist(a, b=None) -> np.ndarray:
    """Matrix of squared Euclidean distances ``||a_i - b_j||^2``.

    Pass ``b=None`` for the self-distance matrix, which is returned exactly
    symmetric with a zero diagonal.
    """
    a = as_points(a)
    same = b is None
    b = a if same else as_points(b)
    if a.shape[1] != b.shape[1]:
        raise ContractError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    diff = a[:, None, :] - b[None, :, :]
    if diff.size and np.max(np.abs(diff)) > _LARGE_DIFF:
        out = _stable_sq_norm(diff)
    else:
        out = np.einsum("ijk,ijk->ij", diff, diff)
    if same:
        out = 0.5 * (out + out.T)
        np.fill_diagonal(out, 0.0)
    return out


def median_bandwidth(x, h0: float, sq_dist: np.ndarray | None = None) -> float:
    """Adaptive RBF bandwidth ``h0 * median(||x_i - x_j||) * sqrt(d) / 2``.

    Falls back to ``h0`` when every particle coincides.
    """
    x = as_points(x)
    n, d = x.shape
    if n < 2:
        raise ContractError("median bandwidth needs at least two particles")
    if h0 <= 0:
        raise ContractError("h0 must be positive")
    if sq_dist is None:
        sq_dist = pairwise_sq_dist(x)
    iu = np.triu_indices(n, k=1)
    med = float(np.median(np.sqrt(sq_dist[iu])))
    if med <= 0.0:
        return float(h0)
    return float(h0 * med * np.sqrt(d) / 2.0)


def rbf_kernel_grad(x, h: float, sq_dist: np.ndarray | None = None):
    """RBF kernel matrix and its per-pair gradient block.

    Returns ``(K, G)`` where ``K[i, j] = exp(-||x_i - x_j||^2 / h)`` and
    ``G[i, j] = grad_{x_j} k(x_j, x_i) = (2/h) (x_i - x_j) K[i, j]``.
    """
    x = as_points(x)
    if h <= 0:
        raise ContractError("bandwidth must be positive")
    if sq_dist is None:
        sq_dist = pairwise_sq_dist(x)
    K = np.exp(-sq_dist / h)
    G = (2.0 / h) * (x[:, None, :] - x[None, :, :]) * K[:, :, None]
    return K, G


def correlation_matrix(x) -> np.ndarray:
    """Sample correlation matrix with a variance floor on constant dimensions."""
    x = as_points(x)
    n, d = x.shape
    if n < 2:
        raise ContractError("correlation needs at least two samples")
    xc = x - x.mean(axis=0)
    cov = xc.T @ xc / (n - 1)
    sd = np.sqrt(np.maximum(np.diag(cov), CORR_VAR_FLOOR))
    corr = cov / np.outer(sd, sd)
    corr = np.clip(0.5 * (corr + corr.T), -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr


def _round_robin(d: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Tournament schedule covering every index pair once per sweep, in disjoint rounds."""
    m = d + (d % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(x, y), max(x, y)) for x, y in pairs if x < d and y < d]
        rounds.append((np.array([x for x, _ in pairs]), np.array([y for _, y in pairs])))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def symmetric_eigen(m, tol: float = 1e-11, max_sweeps: int = 100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    m : array_like, shape (d, d)
        Symmetric input (asymmetry above 1e-9, relative, is rejected).
    tol : float
        Convergence threshold on the off-diagonal Frobenius norm, relative
        to the matrix norm.
    max_sweeps : int
        Upper bound on full sweeps over the upper triangle.

    Returns
    -------
    values : ndarray, shape (d,)
        Eigenvalues in descending order.
    vectors : ndarray, shape (d, d)
        Orthonormal eigenvectors as columns, matching ``values``.
    """
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {a.shape}")
    scale = max(np.abs(a).max(), 1.0)
    if np.abs(a - a.T).max() > 1e-9 * scale:
        raise ContractError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    d = a.shape[0]
    v = np.eye(d)
    norm = np.linalg.norm(a)
    if d == 1 or norm == 0.0:
        return np.diag(a).copy(), v
    thresh = tol * norm
    iu = np.triu_indices(d, k=1)
    rounds = _round_robin(d)
    for _ in range(max_sweeps):
        off = np.sqrt(2.0 * np.sum(a[iu] ** 2))
        if off < thresh:
            break
        for p, q in rounds:
            # every round rotates disjoint (p, q) pairs, so the rotations commute
            apq = a[p, q]
            live = np.abs(apq) >= 1e-300
            if not live.any():
                continue
            p, q, apq = p[live], q[live], apq[live]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            t = np.where(theta != 0, np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0)), 1.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            sn = t * c
            r = np.eye(d)
            r[p, p] = c
            r[q, q] = c
            r[p, q] = sn
            r[q, p] = -sn
            a = r.T @ a @ r
            a = 0.5 * (a + a.T)
            v = v @ r
    vals = np.diag(a).copy()
    order = np.argsort(-vals, kind="stable")
    return vals[order], v[:, order]


def wasserstein1_1d(a, b):
    """Exact W1 between two equal-size 1D samples and the rank matching.

    Returns ``(distance, matching)`` where ``matching[i]`` is the index in
    ``b`` paired with ``a[i]``. Ties are broken by original index.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size != b.size or a.size < 1:
        raise ContractError(f"samples must have equal nonzero length, got {a.size} and {b.size}")
    ia = np.argsort(a, kind="stable")
    ib = np.argsort(b, kind="stable")
    matching = np.empty(a.size, dtype=int)
    matching[ia] = ib
    dist = float(np.mean(np.abs(a[ia] - b[ib])))
    return dist, matching


PHASES = ("init", "transition", "observation", "noise", "projections")


def phase_streams(seed: int, phases=PHASES) -> dict[str, np.random.Generator]:
    """Independent Philox streams per phase, split from one experiment seed."""
    children = np.random.SeedSequence(seed).spawn(len(phases))
    return {name: np.random.Generator(np.random.Philox(child)) for name, child in zip(phases, children)}
