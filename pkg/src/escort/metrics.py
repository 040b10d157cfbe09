"""Approximation-quality metrics and seed aggregation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .numkit import as_points, correlation_matrix, pairwise_sq_dist, wasserstein1_1d

MMD_GAMMA = 0.5
SW_DIRECTIONS = 100
COVERAGE_TAU = 1.0


def _same_dim(x, y):
    x, y = as_points(x), as_points(y)
    if x.shape[1] != y.shape[1]:
        raise ContractError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")
    return x, y


def mmd(x, y, gamma: float = MMD_GAMMA) -> float:
    """Biased empirical MMD with kernel ``exp(-gamma |x - y|^2)``.

    Returns ``sqrt(max(0, MMD^2))``.
    """
    if gamma <= 0:
        raise ContractError("gamma must be positive")
    x, y = _same_dim(x, y)
    # canonical argument order makes mmd(x, y) == mmd(y, x) bit for bit
    if (x.shape[0], x.tobytes()) > (y.shape[0], y.tobytes()):
        x, y = y, x
    kxx = np.exp(-gamma * pairwise_sq_dist(x)).mean()
    kyy = np.exp(-gamma * pairwise_sq_dist(y)).mean()
    kxy = np.exp(-gamma * pairwise_sq_dist(x, y)).mean()
    return float(np.sqrt(max(0.0, kxx + kyy - 2.0 * kxy)))


def random_directions(d: int, n_dirs: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal((n_dirs, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sliced_wasserstein(x, y, n_dirs: int = SW_DIRECTIONS, rng: np.random.Generator | None = None, directions=None) -> float:
    """Mean projected W1 over uniform random unit directions."""
    x, y = _same_dim(x, y)
    if x.shape[0] != y.shape[0]:
        raise ContractError(f"sliced Wasserstein needs equal counts, got {x.shape[0]} and {y.shape[0]}")
    if directions is None:
        if rng is None:
            raise ContractError("need an rng or explicit directions")
        directions = random_directions(x.shape[1], n_dirs, rng)
    theta = as_points(directions)
    a = np.sort(theta @ x.T, axis=1)
    b = np.sort(theta @ y.T, axis=1)
    return float(np.mean(np.abs(a - b)))


def wasserstein_1d(x, y) -> float:
    """Exact W1 between two equal-size 1D samples."""
    x, y = _same_dim(x, y)
    if x.shape[1] != 1:
        raise ContractError("exact W1 here is one-dimensional")
    return wasserstein1_1d(x[:, 0], y[:, 0])[0]


def mode_coverage(x, modes, tau: float = COVERAGE_TAU) -> float:
    """Fraction of modes holding more than ``0.05 / K`` of the particles within ``tau``."""
    x = as_points(x)
    modes = as_points(np.atleast_2d(np.asarray(modes, dtype=float)))
    if modes.shape[1] != x.shape[1] and modes.shape[0] == x.shape[1] and x.shape[1] == 1:
        modes = modes.T
    k = modes.shape[0]
    if k < 1:
        raise ContractError("need at least one mode")
    if modes.shape[1] != x.shape[1]:
        raise ContractError("mode dimension does not match particles")
    within = np.sqrt(pairwise_sq_dist(x, modes)) < tau
    share = within.mean(axis=0)
    return float(np.mean(share > 0.05 / k))


def correlation_error(x, c_true) -> float:
    """Frobenius distance between the sample correlation of ``x`` and ``c_true``."""
    x = as_points(x)
    c_true = np.asarray(c_true, dtype=float)
    if x.shape[0] < 2:
        raise ContractError("need at least two particles")
    if c_true.shape != (x.shape[1], x.shape[1]):
        raise ContractError("correlation matrix shape does not match particles")
    return float(np.linalg.norm(correlation_matrix(x) - c_true))


def rmse(estimates, truths) -> float:
    """``sqrt(mean_i |s_i - t_i|^2)`` over paired vectors."""
    e = np.atleast_2d(np.asarray(estimates, dtype=float))
    t = np.atleast_2d(np.asarray(truths, dtype=float))
    if e.shape != t.shape:
        raise ContractError(f"length mismatch: {e.shape} vs {t.shape}")
    return float(np.sqrt(np.mean(np.sum((e - t) ** 2, axis=1))))


def position_error(particles, true_state, position_index) -> float:
    """Distance between the belief-mean position and the true position."""
    idx = list(position_index)
    mean = as_points(particles)[:, idx].mean(axis=0)
    return float(np.linalg.norm(mean - np.asarray(true_state, dtype=float)[idx]))


@dataclass(frozen=True)
class MetricSummary:
    name: str
    values: tuple[float, ...]

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def stderr(self) -> float:
        if len(self.values) < 2:
            return 0.0
        return float(np.std(self.values, ddof=1) / np.sqrt(len(self.values)))


class MetricReport:
    """Per-seed values of named metrics with mean and standard error."""

    def __init__(self):
        self._values: dict[str, list[float]] = {}

    def add(self, name: str, value: float) -> None:
        self._values.setdefault(name, []).append(float(value))

    def names(self) -> list[str]:
        return list(self._values)

    def __getitem__(self, name: str) -> MetricSummary:
        return MetricSummary(name, tuple(self._values[name]))

    def summary(self) -> dict[str, tuple[float, float]]:
        return {k: (self[k].mean, self[k].stderr) for k in self._values}
