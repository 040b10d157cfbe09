"""Common interface for generative POMDP models and the versioned layout file."""
from __future__ import annotations

import hashlib
import json
from functools import lru_cache
from importlib import resources

import numpy as np

from ..errors import ContractError
from ..targets import OBS_DENSITY_FLOOR

LOG_OBS_FLOOR = float(np.log(OBS_DENSITY_FLOOR))
DATA_FILE = "layouts_v1.json"


@lru_cache(maxsize=None)
def _raw_data() -> bytes:
    return resources.files("escort.envs").joinpath("data", DATA_FILE).read_bytes()


def layout_data() -> dict:
    """Parsed environment constants (fresh copy on every call)."""
    return json.loads(_raw_data())


def data_hash() -> str:
    """SHA-256 of the layout file, recorded in every report."""
    return hashlib.sha256(_raw_data()).hexdigest()


def correlated_noise_factor(corr: np.ndarray, std: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of ``diag(std) corr diag(std)``."""
    from ..targets import repair_spd

    cov = repair_spd(np.asarray(corr, dtype=float)) * np.outer(std, std)
    return np.linalg.cholesky(cov)


def gaussian_logpdf(x: np.ndarray, mean: np.ndarray, var) -> np.ndarray:
    """Isotropic Gaussian log-density summed over the last axis."""
    var = np.asarray(var, dtype=float)
    diff = x - mean
    return -0.5 * np.sum(diff * diff / var + np.log(2 * np.pi * var), axis=-1)


class EnvModel:
    """Generative POMDP model with vectorised transition and likelihood.

    ``transition`` and ``obs_loglik`` accept either one state ``(d,)`` or a
    batch ``(n, d)``. Subclasses set ``name``, ``state_dim``, ``obs_dim``,
    ``n_actions``, ``position_index`` and ``delta_max``.
    """

    name = "env"
    state_dim = 0
    obs_dim = 0
    n_actions = 0
    action_names: tuple[str, ...] = ()
    position_index: tuple[int, ...] = ()
    delta_max = np.inf

    def check_action(self, action) -> int:
        if isinstance(action, (bool, np.bool_)) or not isinstance(action, (int, np.integer)):
            raise ContractError(f"{self.name}: action must be an integer, got {action!r}")
        if not 0 <= int(action) < self.n_actions:
            raise ContractError(f"{self.name}: action {action} outside [0, {self.n_actions})")
        return int(action)

    def _states(self, s) -> tuple[np.ndarray, bool]:
        arr = np.asarray(s, dtype=float)
        single = arr.ndim == 1
        if single:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[1] != self.state_dim:
            raise ContractError(f"{self.name}: states must have {self.state_dim} columns, got shape {np.shape(s)}")
        return arr, single

    def _check_obs(self, obs) -> np.ndarray:
        obs = np.asarray(obs, dtype=float).ravel()
        if obs.shape != (self.obs_dim,):
            raise ContractError(f"{self.name}: observation must have length {self.obs_dim}, got {obs.shape}")
        return obs

    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def initial_particles(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def transition(self, s, action, rng: np.random.Generator, noise: bool = True) -> np.ndarray:
        raise NotImplementedError

    def sample_observation(self, s, action, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def obs_loglik(self, s, action, obs) -> np.ndarray:
        raise NotImplementedError

    def reward(self, s, action) -> float:
        raise NotImplementedError

    def is_terminal(self, s) -> bool:
        return False

    def scripted_action(self, belief_mean: np.ndarray, t: int) -> int:
        """Greedy action computed from the belief mean."""
        raise NotImplementedError

    def position(self, s) -> np.ndarray:
        return np.asarray(s, dtype=float)[..., list(self.position_index)]

    def step(self, s, action, rng: np.random.Generator, obs_rng: np.random.Generator | None = None):
        """Sample ``(next_state, observation, reward, done)``.

        ``obs_rng`` (default ``rng``) drives only the observation draw.
        """
        action = self.check_action(action)
        s = np.asarray(s, dtype=float)
        r = self.reward(s, action)
        s2 = self.transition(s, action, rng)
        o = self.sample_observation(s2, action, rng if obs_rng is None else obs_rng)
        return s2, o, r, self.is_terminal(s2)
