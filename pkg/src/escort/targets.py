"""Target densities: the Gaussian-mixture family and finite-difference scores."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Protocol, runtime_checkable

import numpy as np

from .errors import ContractError
from .numkit import ParticleSet, as_points, symmetric_eigen

LOG_DENSITY_FLOOR = np.log(1e-300)
OBS_DENSITY_FLOOR = 1e-15
SCORE_CLIP = 100.0


@runtime_checkable
class DensityModel(Protocol):
    """Anything with a vectorised ``log_density``; ``score`` is optional."""

    def log_density(self, x: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class GmmSpec:
    """Weighted Gaussian mixture ``sum_k w_k N(mu_k, Sigma_k)``."""

    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False, compare=False)
    _prec: np.ndarray = field(init=False, repr=False, compare=False)
    _logdet: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        mu = np.array(self.means, dtype=float)
        if mu.ndim == 1:
            mu = mu[:, None]
        cov = np.array(self.covs, dtype=float)
        if cov.ndim == 1:
            cov = cov[:, None, None]
        k, d = mu.shape
        if w.shape != (k,) or cov.shape != (k, d, d):
            raise ContractError(f"inconsistent mixture shapes: weights {w.shape}, means {mu.shape}, covs {cov.shape}")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ContractError("mixture weights must be positive and sum to 1")
        for c in cov:
            if np.abs(c - c.T).max() > 1e-9 * max(1.0, np.abs(c).max()):
                raise ContractError("covariance is not symmetric")
            if np.linalg.eigvalsh(c)[0] <= 0:
                raise ContractError("covariance is not positive definite")
        chol = np.linalg.cholesky(cov)
        prec = np.linalg.inv(cov)
        logdet = 2.0 * np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)
        for name, val in (("weights", w), ("means", mu), ("covs", cov), ("_chol", chol), ("_prec", prec), ("_logdet", logdet)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def d(self) -> int:
        return self.means.shape[1]

    @property
    def k(self) -> int:
        return self.means.shape[0]

    def _check(self, x) -> tuple[np.ndarray, bool]:
        arr = np.asarray(x, dtype=float)
        single = arr.ndim == 1 and arr.shape[0] == self.d
        if single:
            arr = arr[None, :]
        elif arr.ndim == 1 and self.d == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[1] != self.d:
            raise ContractError(f"point dimension {arr.shape[-1]} does not match mixture dimension {self.d}")
        return arr, single

    def component_log_densities(self, x) -> np.ndarray:
        """``(n, k)`` array of ``log w_k + log N(x_i; mu_k, Sigma_k)``."""
        x, _ = self._check(x)
        diff = x[:, None, :] - self.means[None, :, :]
        maha = np.einsum("nki,kij,nkj->nk", diff, self._prec, diff)
        return np.log(self.weights) - 0.5 * (self.d * np.log(2 * np.pi) + self._logdet + maha)

    def log_density(self, x):
        x, single = self._check(x)
        comp = self.component_log_densities(x)
        m = comp.max(axis=1, keepdims=True)
        out = (m + np.log(np.exp(comp - m).sum(axis=1, keepdims=True)))[:, 0]
        out = np.maximum(np.nan_to_num(out, nan=LOG_DENSITY_FLOOR, neginf=LOG_DENSITY_FLOOR), LOG_DENSITY_FLOOR)
        return out[0] if single else out

    def score(self, x):
        x, single = self._check(x)
        comp = self.component_log_densities(x)
        resp = np.exp(comp - comp.max(axis=1, keepdims=True))
        resp /= resp.sum(axis=1, keepdims=True)
        diff = self.means[None, :, :] - x[:, None, :]
        pulls = np.einsum("kij,nkj->nki", self._prec, diff)
        out = np.einsum("nk,nki->ni", resp, pulls)
        return out[0] if single else out

    def mixture_mean(self) -> np.ndarray:
        return self.weights @ self.means

    def mixture_cov(self) -> np.ndarray:
        """Covariance of the whole mixture (law of total covariance)."""
        mean = self.mixture_mean()
        dm = self.means - mean
        return np.einsum("k,kij->ij", self.weights, self.covs) + np.einsum("k,ki,kj->ij", self.weights, dm, dm)

    def mixture_corr(self) -> np.ndarray:
        cov = self.mixture_cov()
        sd = np.sqrt(np.diag(cov))
        corr = cov / np.outer(sd, sd)
        np.fill_diagonal(corr, 1.0)
        return corr


def gmm_log_density(g: GmmSpec, x):
    return g.log_density(x)


def gmm_score(g: GmmSpec, x):
    return g.score(x)


def gmm_sample(g: GmmSpec, n: int, rng: np.random.Generator, timestep: int = 0) -> ParticleSet:
    """Draw ``n`` points: component by weight, then ``mu + L z``."""
    if n < 1:
        raise ContractError("sample count must be positive")
    comp = rng.choice(g.k, size=n, p=g.weights)
    z = rng.standard_normal((n, g.d))
    x = g.means[comp] + np.einsum("nij,nj->ni", g._chol[comp], z)
    return ParticleSet(x, timestep)


def fd_score(log_density: Callable[[np.ndarray], np.ndarray], x, floor: float = OBS_DENSITY_FLOOR) -> np.ndarray:
    """Central-difference score of ``log max(p, floor)`` with adaptive steps.

    ``log_density`` must accept an ``(m, d)`` array and return ``(m,)``.
    The step in dimension j is ``max(1e-6, 1e-4 |x_j|)``; the result is
    clipped to [-100, 100] componentwise.
    """
    x = as_points(x)
    n, d = x.shape
    eps = np.maximum(1e-6, 1e-4 * np.abs(x))
    eye = np.eye(d)
    plus = (x[:, None, :] + eps[:, :, None] * eye[None]).reshape(n * d, d)
    minus = (x[:, None, :] - eps[:, :, None] * eye[None]).reshape(n * d, d)
    log_floor = np.log(floor)
    lp = np.maximum(np.asarray(log_density(plus), dtype=float), log_floor).reshape(n, d)
    lm = np.maximum(np.asarray(log_density(minus), dtype=float), log_floor).reshape(n, d)
    score = (lp - lm) / (2.0 * eps)
    score = np.nan_to_num(score, nan=0.0, posinf=SCORE_CLIP, neginf=-SCORE_CLIP)
    return np.clip(score, -SCORE_CLIP, SCORE_CLIP)


def repair_spd(cov: np.ndarray, min_eig: float = 1e-6) -> np.ndarray:
    """Shift a symmetric matrix by ``(min_eig - lambda_min) I`` if needed."""
    cov = 0.5 * (cov + cov.T)
    vals, _ = symmetric_eigen(cov)
    lo = vals[-1]
    if lo < min_eig:
        cov = cov + (min_eig - lo) * np.eye(cov.shape[0])
    return cov
