"""Ten-dimensional Light-Dark navigation: five positions, five velocities."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError
from .base import LOG_OBS_FLOOR, EnvModel, correlated_noise_factor, gaussian_logpdf, layout_data

SIGMA_BASE = 0.5
SIGMA_MIN = 0.01
FORCE = 0.1
DAMPING = 0.1
DT = 0.1
NOISE_STD = 0.05
V_MAX = 2.0
POS_LOW, POS_HIGH = 0.0, 10.0
LIGHT_FLOOR = 0.05
CONFUSION_LIGHT = 0.1
CONFUSION_PROB = 0.2
SUCCESS_RADIUS = 0.5


def process_correlation() -> np.ndarray:
    """Correlation of the ``[x; v]`` process noise."""
    c = np.eye(10)

    def put(i, j, rho):
        c[i, j] = c[j, i] = rho

    for i in range(5):
        put(i, 5 + i, 0.8)
    for i in range(4):
        put(i, i + 1, 0.5)
        put(5 + i, 6 + i, 0.6)
    put(0, 2, 0.4)
    put(1, 3, 0.4)
    put(5, 6, 0.7)
    put(5, 7, 0.5)
    return c


@dataclass(frozen=True)
class LightRegion:
    name: str
    center: np.ndarray
    radius: float
    intensity: float


def light_regions() -> tuple[LightRegion, ...]:
    raw = layout_data()["lightdark"]["regions"]
    return tuple(LightRegion(r["name"], np.array(r["center"], dtype=float), float(r["radius"]), float(r["intensity"])) for r in raw)


class LightDark(EnvModel):
    """Double-integrator in a 5D box with position-dependent observation noise.

    Action ``2i`` pushes dimension ``i`` up, ``2i + 1`` pushes it down.
    In dark spots (light below 0.1) the observation may arrive with
    dimensions 1-2 or 3-4 swapped.
    """

    name = "lightdark"
    state_dim = 10
    obs_dim = 5
    n_actions = 10
    action_names = tuple(f"{'+' if a % 2 == 0 else '-'}x{a // 2 + 1}" for a in range(10))
    position_index = (0, 1, 2, 3, 4)

    def __init__(self):
        data = layout_data()["lightdark"]
        self.regions = light_regions()
        self._centers = np.stack([r.center for r in self.regions])
        self._radii = np.array([r.radius for r in self.regions])
        self._intensity = np.array([r.intensity for r in self.regions])
        self.goal = np.array(data["goal"], dtype=float)
        self.start_low = float(data["start_low"])
        self.start_high = float(data["start_high"])
        self._chol = correlated_noise_factor(process_correlation(), np.full(10, NOISE_STD))
        noise_sd = np.sqrt(np.sum(self._chol**2, axis=1))
        self.delta_max = float(
            DT * V_MAX * np.sqrt(5) + FORCE + DAMPING * V_MAX * np.sqrt(5) + 6.0 * np.linalg.norm(noise_sd)
        )

    def light_level(self, x) -> np.ndarray:
        """Light intensity in [0.05, 1] at one or many 5D positions."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        if pts.shape[-1] != 5 or not np.all(np.isfinite(pts)):
            raise ContractError("light level needs finite 5D positions")
        dist = np.linalg.norm(pts[:, None, :] - self._centers[None], axis=2)
        ratio = dist / self._radii
        terms = np.where(dist < self._radii, self._intensity * (1.0 - ratio**2), 0.0)
        out = np.maximum(LIGHT_FLOOR, terms.max(axis=1))
        return out[0] if single else out

    def obs_variance(self, x) -> np.ndarray:
        return SIGMA_BASE**2 * (1.0 - self.light_level(x)) + SIGMA_MIN**2

    def initial_state(self, rng):
        s = np.zeros(10)
        s[:5] = rng.uniform(self.start_low, self.start_high, 5)
        return s

    def initial_particles(self, n, rng):
        p = np.zeros((n, 10))
        p[:, :5] = rng.uniform(self.start_low, self.start_high, (n, 5))
        p[:, 5:] = 0.01 * rng.standard_normal((n, 5))
        return p

    def force(self, action) -> np.ndarray:
        a = self.check_action(action)
        f = np.zeros(5)
        f[a // 2] = FORCE if a % 2 == 0 else -FORCE
        return f

    def transition(self, s, action, rng, noise=True):
        f = self.force(action)
        st, single = self._states(s)
        x, v = st[:, :5], st[:, 5:]
        nx = x + DT * v
        nv = v + f - DAMPING * v
        out = np.concatenate([nx, nv], axis=1)
        if noise:
            out = out + rng.standard_normal(out.shape) @ self._chol.T
        out[:, :5] = np.clip(out[:, :5], POS_LOW, POS_HIGH)
        out[:, 5:] = np.clip(out[:, 5:], -V_MAX, V_MAX)
        return out[0] if single else out

    def sample_observation(self, s, action, rng):
        s = np.asarray(s, dtype=float)
        x = s[:5].copy()
        if self.light_level(x) < CONFUSION_LIGHT and rng.random() < CONFUSION_PROB:
            i, j = (0, 1) if rng.random() < 0.5 else (2, 3)
            x[[i, j]] = x[[j, i]]
        return x + np.sqrt(self.obs_variance(s[:5])) * rng.standard_normal(5)

    def obs_loglik(self, s, action, obs):
        obs = self._check_obs(obs)
        st, single = self._states(s)
        x = st[:, :5]
        var = self.obs_variance(x)[:, None]
        plain = gaussian_logpdf(obs, x, var)
        dark = self.light_level(x) < CONFUSION_LIGHT
        out = plain
        if dark.any():
            s12 = x[:, [1, 0, 2, 3, 4]]
            s34 = x[:, [0, 1, 3, 2, 4]]
            branches = np.stack(
                [
                    np.log(1.0 - CONFUSION_PROB) + plain,
                    np.log(CONFUSION_PROB / 2) + gaussian_logpdf(obs, s12, var),
                    np.log(CONFUSION_PROB / 2) + gaussian_logpdf(obs, s34, var),
                ]
            )
            m = branches.max(axis=0)
            mixed = m + np.log(np.exp(branches - m).sum(axis=0))
            out = np.where(dark, mixed, plain)
        out = np.maximum(out, LOG_OBS_FLOOR)
        return out[0] if single else out

    def reward(self, s, action):
        s = np.asarray(s, dtype=float)
        return float(-0.1 * np.linalg.norm(s[:5] - self.goal) - 0.1)

    def is_terminal(self, s):
        return bool(np.linalg.norm(np.asarray(s, dtype=float)[:5] - self.goal) < SUCCESS_RADIUS)

    def scripted_action(self, belief_mean, t):
        """Push the dimension whose velocity lags its goal-seeking target most."""
        m = np.asarray(belief_mean, dtype=float)
        want = np.clip(0.5 * (self.goal - m[:5]), -1.0, 1.0)
        gap = want - m[5:]
        i = int(np.argmax(np.abs(gap)))
        return 2 * i if gap[i] >= 0 else 2 * i + 1
