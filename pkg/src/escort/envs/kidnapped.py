"""Twenty-dimensional kidnapped-robot localisation among aliased landmarks.

State layout: ``[x, y, theta, v, steer, c1..c5, f1..f10]``. Heading is kept
unwrapped; trigonometric functions make it periodic where it matters.
"""
from __future__ import annotations

import numpy as np

from .base import LOG_OBS_FLOOR, EnvModel, correlated_noise_factor, layout_data

TURN = 0.1
CRUISE_SPEED = 0.5
SPEED_GAIN = 0.5
DT = 1.0
STEER_GAIN = 0.1
STEER_DECAY = 0.9
CALIB_DECAY = 0.95
V_LIMIT = 1.0
STEER_LIMIT = 1.0
CALIB_LIMIT = 1.0
DIST_STD = 0.1
SIM_STD = 0.05
CALIB_DIST_GAIN = 0.1
NOISE_STD = np.array([0.05, 0.05, 0.02, 0.02, 0.01] + [0.02] * 5 + [0.02] * 10)
TURN_LEFT, TURN_RIGHT, FORWARD, STAY = range(4)


def process_correlation() -> np.ndarray:
    c = np.eye(20)

    def put(i, j, rho):
        c[i, j] = c[j, i] = rho

    for p in (0, 1):
        put(p, 2, 0.6)
        put(p, 3, 0.8)
    for i in range(5, 10):
        for j in range(i + 1, 10):
            put(i, j, 0.4)
        for j in range(10, 20):
            put(i, j, 0.3)
    return c


class KidnappedRobot(EnvModel):
    """Unicycle robot on a 20 x 20 map with three identical landmark triads.

    The observation has one ``(distance, similarity)`` slot per landmark
    kind (house, shop, warehouse, four singletons) holding the nearest
    visible landmark of that kind, or NaN when none is in range and view.
    Similarity is the inner product of the landmark descriptor with the
    robot's feature state.
    """

    name = "kidnapped"
    state_dim = 20
    n_actions = 4
    action_names = ("turn-left", "turn-right", "forward", "stay")
    position_index = (0, 1)

    def __init__(self):
        data = layout_data()["kidnapped"]
        self.map_size = float(data["map_size"])
        self.sensor_range = float(data["sensor_range"])
        self.half_fov = np.deg2rad(float(data["fov_deg"])) / 2.0
        marks = data["landmarks"]
        self.kinds = tuple(dict.fromkeys(m["kind"] for m in marks))
        self.obs_dim = 2 * len(self.kinds)
        self.landmarks = np.array([m["position"] for m in marks], dtype=float)
        self.descriptors = np.array([m["descriptor"] for m in marks], dtype=float)
        self.kind_index = np.array([self.kinds.index(m["kind"]) for m in marks])
        f0 = self.descriptors.sum(axis=0)
        self.feature0 = f0 / np.linalg.norm(f0)
        self._chol = correlated_noise_factor(process_correlation(), NOISE_STD)
        noise_sd = np.sqrt(np.sum(self._chol**2, axis=1))
        # motion + turn + speed change + steering/calibration decay, plus noise
        # at 6 sigma counted twice to cover the feature renormalisation
        drift = (
            V_LIMIT * DT
            + TURN
            + STEER_GAIN * STEER_LIMIT
            + SPEED_GAIN * (V_LIMIT + CRUISE_SPEED)
            + (1 - STEER_DECAY) * STEER_LIMIT
            + (1 - CALIB_DECAY) * CALIB_LIMIT * np.sqrt(5)
        )
        self.delta_max = float(drift + 12.0 * np.linalg.norm(noise_sd))

    def initial_state(self, rng):
        s = np.zeros(20)
        s[:2] = rng.uniform(2.0, self.map_size - 2.0, 2)
        s[2] = rng.uniform(0.0, 2 * np.pi)
        s[10:] = self.feature0
        return s

    def initial_particles(self, n, rng):
        p = np.zeros((n, 20))
        p[:, :2] = rng.uniform(2.0, self.map_size - 2.0, (n, 2))
        p[:, 2] = rng.uniform(0.0, 2 * np.pi, n)
        p[:, 3:10] = 0.01 * rng.standard_normal((n, 7))
        f = self.feature0 + 0.02 * rng.standard_normal((n, 10))
        p[:, 10:] = f / np.linalg.norm(f, axis=1, keepdims=True)
        return p

    def transition(self, s, action, rng, noise=True):
        a = self.check_action(action)
        st, single = self._states(s)
        x, y, th, v, steer = (st[:, i] for i in range(5))
        out = st.copy()
        out[:, 0] = x + v * np.cos(th) * DT
        out[:, 1] = y + v * np.sin(th) * DT
        turn = TURN if a == TURN_LEFT else -TURN if a == TURN_RIGHT else 0.0
        out[:, 2] = th + turn + STEER_GAIN * steer
        if a == FORWARD:
            out[:, 3] = v + SPEED_GAIN * (CRUISE_SPEED - v)
        elif a == STAY:
            out[:, 3] = v - SPEED_GAIN * v
        out[:, 4] = STEER_DECAY * steer
        out[:, 5:10] = CALIB_DECAY * st[:, 5:10]
        if noise:
            out = out + rng.standard_normal(out.shape) @ self._chol.T
        out[:, :2] = np.clip(out[:, :2], 0.0, self.map_size)
        out[:, 3] = np.clip(out[:, 3], -V_LIMIT, V_LIMIT)
        out[:, 4] = np.clip(out[:, 4], -STEER_LIMIT, STEER_LIMIT)
        out[:, 5:10] = np.clip(out[:, 5:10], -CALIB_LIMIT, CALIB_LIMIT)
        norms = np.linalg.norm(out[:, 10:], axis=1, keepdims=True)
        out[:, 10:] = np.where(norms > 0, out[:, 10:] / np.where(norms > 0, norms, 1.0), self.feature0)
        return out[0] if single else out

    def _geometry(self, st: np.ndarray):
        """Distances ``(n, L)`` and visibility mask for every landmark."""
        rel = self.landmarks[None, :, :] - st[:, None, :2]
        dist = np.linalg.norm(rel, axis=2)
        bearing = np.arctan2(rel[..., 1], rel[..., 0]) - st[:, 2:3]
        off = np.abs(np.angle(np.exp(1j * bearing)))
        visible = (dist <= self.sensor_range) & (off <= self.half_fov)
        return dist, visible

    def _predicted(self, st: np.ndarray, visible_only: bool):
        """Per kind: predicted distance, similarity and whether any landmark is visible."""
        dist, visible = self._geometry(st)
        sims = st[:, 10:] @ self.descriptors.T
        n, k = st.shape[0], len(self.kinds)
        pd = np.full((n, k), np.nan)
        ps = np.full((n, k), np.nan)
        seen = np.zeros((n, k), dtype=bool)
        rows = np.arange(n)
        for kind in range(k):
            cols = np.flatnonzero(self.kind_index == kind)
            dk, vk = dist[:, cols], visible[:, cols]
            masked = np.where(vk, dk, np.inf)
            pick_vis = np.argmin(masked, axis=1)
            any_vis = vk.any(axis=1)
            if visible_only:
                pick = pick_vis
            else:
                pick = np.where(any_vis, pick_vis, np.argmin(dk, axis=1))
            chosen = cols[pick]
            pd[:, kind] = dist[rows, chosen] + CALIB_DIST_GAIN * st[:, 5]
            ps[:, kind] = sims[rows, chosen]
            seen[:, kind] = any_vis
        return pd, ps, seen

    def visible_landmarks(self, s) -> np.ndarray:
        st, _ = self._states(s)
        return self._geometry(st)[1][0]

    def sample_observation(self, s, action, rng):
        st, _ = self._states(s)
        pd, ps, seen = self._predicted(st, visible_only=True)
        k = len(self.kinds)
        d = pd[0] + DIST_STD * rng.standard_normal(k)
        sim = ps[0] + SIM_STD * rng.standard_normal(k)
        obs = np.empty(self.obs_dim)
        obs[0::2] = np.where(seen[0], d, np.nan)
        obs[1::2] = np.where(seen[0], sim, np.nan)
        return obs

    def obs_loglik(self, s, action, obs):
        """Gaussian terms for observed slots; unobserved slots contribute nothing.

        A hypothesis that sees no landmark of an observed kind is scored
        against its nearest landmark of that kind.
        """
        obs = self._check_obs(obs)
        st, single = self._states(s)
        pd, ps, _ = self._predicted(st, visible_only=False)
        od, osim = obs[0::2], obs[1::2]
        mask = np.isfinite(od)
        ll = np.zeros(st.shape[0])
        if mask.any():
            rd = (od[mask] - pd[:, mask]) / DIST_STD
            rs = (osim[mask] - ps[:, mask]) / SIM_STD
            norm = np.log(2 * np.pi * DIST_STD * SIM_STD)
            ll = -0.5 * np.sum(rd * rd + rs * rs, axis=1) - mask.sum() * norm
        ll = np.maximum(ll, LOG_OBS_FLOOR)
        return ll[0] if single else ll

    def reward(self, s, action):
        return -1.0

    def scripted_action(self, belief_mean, t):
        """Cruise forward, turning left when the believed pose nears a wall."""
        m = np.asarray(belief_mean, dtype=float)
        ahead = m[:2] + 2.0 * np.array([np.cos(m[2]), np.sin(m[2])])
        if np.any(ahead < 1.0) or np.any(ahead > self.map_size - 1.0):
            return TURN_LEFT
        return FORWARD if t % 5 != 4 else TURN_LEFT
