"""SVGD velocity field and step with dimension-scaled repulsion and noise."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, NumericalError
from .numkit import ParticleSet, as_points, median_bandwidth, pairwise_sq_dist, rbf_kernel_grad


@dataclass(frozen=True)
class SvgdConfig:
    step_size: float = 0.01
    bandwidth_base: float = 0.1
    repulsion_scale_enabled: bool = True
    noise_enabled: bool = True

    def __post_init__(self):
        if self.step_size < 0:
            raise ContractError("step size must be nonnegative")
        if self.bandwidth_base <= 0:
            raise ContractError("bandwidth base must be positive")


def repulsion_scale(d: int) -> float:
    return 1.0 + 0.1 * d


def noise_variance(d: int) -> float:
    return 0.01 * (1.0 + 0.1 * d)


def kernel_terms(x: np.ndarray, h0: float):
    """Bandwidth, kernel matrix and gradient block for particles ``x``."""
    sq = pairwise_sq_dist(x)
    h = median_bandwidth(x, h0, sq) if x.shape[0] > 1 else h0
    K, G = rbf_kernel_grad(x, h, sq)
    return h, K, G


def direction_from_kernel(K, G, scores, repulsion: float) -> np.ndarray:
    """``(1/n) sum_j [K_ji s_j + repulsion * G_ij]`` for every particle i."""
    n = K.shape[0]
    attract = K.T @ scores
    repel = G.sum(axis=1)
    return (attract + repulsion * repel) / n


def _check_scores(scores, shape):
    scores = np.asarray(scores, dtype=float)
    if scores.shape != shape:
        raise ContractError(f"score function returned shape {scores.shape}, expected {shape}")
    bad = ~np.all(np.isfinite(scores), axis=1)
    if bad.any():
        raise NumericalError(f"non-finite score at particle {int(np.argmax(bad))}", phase="svgd")
    return scores


def svgd_direction(x, score_fn, cfg: SvgdConfig) -> np.ndarray:
    """Stein variational velocity for every particle."""
    x = as_points(x)
    scores = _check_scores(score_fn(x), x.shape)
    _, K, G = kernel_terms(x, cfg.bandwidth_base)
    rho = repulsion_scale(x.shape[1]) if cfg.repulsion_scale_enabled else 1.0
    return direction_from_kernel(K, G, scores, rho)


def inject_noise(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    sd = np.sqrt(noise_variance(x.shape[1]))
    return x + sd * rng.standard_normal(x.shape)


def svgd_step(x: ParticleSet, score_fn, cfg: SvgdConfig, rng: np.random.Generator | None = None) -> ParticleSet:
    """One explicit SVGD step; noise is added only when ``cfg.noise_enabled``."""
    pos = np.asarray(x, dtype=float)
    out = pos + cfg.step_size * svgd_direction(pos, score_fn, cfg)
    if cfg.noise_enabled:
        if rng is None:
            raise ContractError("noise injection needs an rng")
        out = inject_noise(out, rng)
    return x.replace(positions=out) if isinstance(x, ParticleSet) else ParticleSet(out)
