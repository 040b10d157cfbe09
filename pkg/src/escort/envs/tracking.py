"""Twenty-dimensional multi-target tracking with visibility zones.

State layout: agent ``[x, y, vx, vy]`` followed by four targets in the same
layout. Observations hold the agent position and one ``(x, y)`` slot per
target, NaN where the target is unobserved.
"""
from __future__ import annotations

import numpy as np

from .base import LOG_OBS_FLOOR, EnvModel, correlated_noise_factor, gaussian_logpdf, layout_data

N_TARGETS = 4
DT = 0.5
ACCEL = 0.2
DAMPING = 0.1
FLOW = 0.02
REPULSION = 0.05
REPULSION_RADIUS = 1.0
V_LIMIT = 1.0
NOISE_POS, NOISE_VEL = 0.02, 0.02
SIGMA_MIN = 0.05
SIGMA_SCALE = 0.5
SWAP_RADIUS = 2.0
COLLISION_RADIUS = 0.5
GOAL_RADIUS = 0.5
ALPHA, BETA = 0.1, 0.05
PLUS_X, MINUS_X, PLUS_Y, MINUS_Y = range(4)


def process_correlation() -> np.ndarray:
    c = np.eye(20)

    def put(i, j, rho):
        c[i, j] = c[j, i] = rho

    for e in range(N_TARGETS + 1):
        put(4 * e, 4 * e + 2, 0.8)
        put(4 * e + 1, 4 * e + 3, 0.8)
    for i in range(1, N_TARGETS + 1):
        for j in range(i + 1, N_TARGETS + 1):
            for comp, rho in ((0, 0.4), (1, 0.4), (2, 0.6), (3, 0.6)):
                put(4 * i + comp, 4 * j + comp, rho)
    return c


class MultiTargetTracking(EnvModel):
    """Agent steering to a goal while four targets drift in a swirl flow."""

    name = "tracking"
    state_dim = 20
    obs_dim = 2 + 2 * N_TARGETS
    n_actions = 4
    action_names = ("+x", "-x", "+y", "-y")
    position_index = (0, 1)

    def __init__(self):
        data = layout_data()["tracking"]
        self.size = float(data["size"])
        self.goal = np.array(data["goal"], dtype=float)
        self.agent_start = np.array(data["agent_start"], dtype=float)
        self.half_fov = np.deg2rad(float(data["fov_deg"])) / 2.0
        zones = data["zones"]
        self.zone_names = tuple(z["name"] for z in zones)
        self._lo = np.array([z["lo"] for z in zones], dtype=float)
        self._hi = np.array([z["hi"] for z in zones], dtype=float)
        self.visibility = np.array([z["visibility"] for z in zones], dtype=float)
        self.swap_prob = np.array([z["swap_prob"] for z in zones], dtype=float)
        self._chol = correlated_noise_factor(process_correlation(), np.tile([NOISE_POS, NOISE_POS, NOISE_VEL, NOISE_VEL], 5))
        noise_sd = np.sqrt(np.sum(self._chol**2, axis=1))
        per_entity = np.sqrt(2) * ((1 + DT) * (2 * V_LIMIT))
        self.delta_max = float(np.sqrt(N_TARGETS + 1) * per_entity + 6.0 * np.linalg.norm(noise_sd))

    def zone_of(self, xy) -> np.ndarray:
        """Index of the zone containing each point (points outside the map are clamped)."""
        xy = np.clip(np.asarray(xy, dtype=float), 0.0, self.size - 1e-9)
        inside = np.all((xy[..., None, :] >= self._lo) & (xy[..., None, :] < self._hi), axis=-1)
        return np.argmax(inside, axis=-1)

    def obs_std(self, xy) -> np.ndarray:
        return SIGMA_MIN + SIGMA_SCALE * (1.0 - self.visibility[self.zone_of(xy)])

    def flow(self, xy: np.ndarray) -> np.ndarray:
        """Constant-magnitude counter-clockwise swirl about the map centre."""
        rel = xy - self.size / 2.0
        tang = np.stack([-rel[..., 1], rel[..., 0]], axis=-1)
        norm = np.linalg.norm(tang, axis=-1, keepdims=True)
        return FLOW * np.where(norm > 0, tang / np.where(norm > 0, norm, 1.0), 0.0)

    def initial_state(self, rng):
        s = np.zeros(20)
        s[:2] = self.agent_start
        for i in range(1, N_TARGETS + 1):
            s[4 * i : 4 * i + 2] = rng.uniform(1.0, self.size - 1.0, 2)
            s[4 * i + 2 : 4 * i + 4] = 0.1 * rng.standard_normal(2)
        return s

    def initial_particles(self, n, rng):
        p = np.zeros((n, 20))
        p[:, :2] = self.agent_start + 0.1 * rng.standard_normal((n, 2))
        p[:, 2:4] = 0.01 * rng.standard_normal((n, 2))
        for i in range(1, N_TARGETS + 1):
            p[:, 4 * i : 4 * i + 2] = rng.uniform(1.0, self.size - 1.0, (n, 2))
            p[:, 4 * i + 2 : 4 * i + 4] = 0.1 * rng.standard_normal((n, 2))
        return p

    def transition(self, s, action, rng, noise=True):
        a = self.check_action(action)
        st, single = self._states(s)
        out = st.copy()
        push = np.zeros(2)
        push[a // 2] = ACCEL if a % 2 == 0 else -ACCEL
        v = (1 - DAMPING) * st[:, 2:4] + push
        out[:, 2:4] = v
        out[:, 0:2] = st[:, 0:2] + DT * v
        pos = np.stack([st[:, 4 * i : 4 * i + 2] for i in range(1, N_TARGETS + 1)], axis=1)
        diff = pos[:, :, None, :] - pos[:, None, :, :]
        dist = np.linalg.norm(diff, axis=-1)
        close = (dist < REPULSION_RADIUS) & (dist > 0)
        unit = diff / np.where(dist > 0, dist, 1.0)[..., None]
        rep = REPULSION * np.sum(np.where(close[..., None], unit, 0.0), axis=2)
        for k, i in enumerate(range(1, N_TARGETS + 1)):
            tv = (1 - DAMPING) * st[:, 4 * i + 2 : 4 * i + 4] + self.flow(pos[:, k]) + rep[:, k]
            out[:, 4 * i + 2 : 4 * i + 4] = tv
            out[:, 4 * i : 4 * i + 2] = pos[:, k] + DT * tv
        if noise:
            out = out + rng.standard_normal(out.shape) @ self._chol.T
        for e in range(N_TARGETS + 1):
            out[:, 4 * e : 4 * e + 2] = np.clip(out[:, 4 * e : 4 * e + 2], 0.0, self.size)
            out[:, 4 * e + 2 : 4 * e + 4] = np.clip(out[:, 4 * e + 2 : 4 * e + 4], -V_LIMIT, V_LIMIT)
        return out[0] if single else out

    def _heading(self, st: np.ndarray) -> np.ndarray:
        v = st[:, 2:4]
        to_goal = self.goal - st[:, 0:2]
        moving = np.linalg.norm(v, axis=1) > 1e-6
        ref = np.where(moving[:, None], v, to_goal)
        return np.arctan2(ref[:, 1], ref[:, 0])

    def target_positions(self, st: np.ndarray) -> np.ndarray:
        return np.stack([st[:, 4 * i : 4 * i + 2] for i in range(1, N_TARGETS + 1)], axis=1)

    def _in_view(self, st: np.ndarray) -> np.ndarray:
        """``(n, 4)`` mask of targets inside the agent's field of view and not in a blind zone."""
        tp = self.target_positions(st)
        rel = tp - st[:, None, 0:2]
        bearing = np.arctan2(rel[..., 1], rel[..., 0]) - self._heading(st)[:, None]
        off = np.abs(np.angle(np.exp(1j * bearing)))
        visible = self.visibility[self.zone_of(tp)] > 0
        return (off <= self.half_fov) & visible

    def _swap_pair(self, tp: np.ndarray, observed: np.ndarray):
        """First pair ``(i, j)`` of observed, nearby targets with one in a confusion zone.

        ``tp`` is ``(n, 4, 2)`` and ``observed`` ``(n, 4)``; returns index
        arrays (``-1`` where no pair qualifies) and the swap probability.
        """
        n = tp.shape[0]
        zones = self.zone_of(tp)
        prob = self.swap_prob[zones]
        pi = np.full(n, -1)
        pj = np.full(n, -1)
        pp = np.zeros(n)
        for i in range(N_TARGETS):
            for j in range(i + 1, N_TARGETS):
                near = np.linalg.norm(tp[:, i] - tp[:, j], axis=1) < SWAP_RADIUS
                p = np.maximum(prob[:, i], prob[:, j])
                ok = (pi < 0) & observed[:, i] & observed[:, j] & near & (p > 0)
                pi = np.where(ok, i, pi)
                pj = np.where(ok, j, pj)
                pp = np.where(ok, p, pp)
        return pi, pj, pp

    def sample_observation(self, s, action, rng):
        st, _ = self._states(s)
        obs = np.full(self.obs_dim, np.nan)
        obs[0:2] = st[0, 0:2] + self.obs_std(st[0, 0:2]) * rng.standard_normal(2)
        tp = self.target_positions(st)
        seen = self._in_view(st)
        noisy = tp[0] + self.obs_std(tp[0])[:, None] * rng.standard_normal((N_TARGETS, 2))
        pi, pj, pp = self._swap_pair(tp, seen)
        if pi[0] >= 0 and rng.random() < pp[0]:
            noisy[[pi[0], pj[0]]] = noisy[[pj[0], pi[0]]]
        for k in range(N_TARGETS):
            if seen[0, k]:
                obs[2 + 2 * k : 4 + 2 * k] = noisy[k]
        return obs

    def obs_loglik(self, s, action, obs):
        """Product of per-slot Gaussians; the swap branch is marginalised.

        Unobserved slots contribute zero. Observed targets are scored with
        the noise level of the hypothesised target's zone.
        """
        obs = self._check_obs(obs)
        st, single = self._states(s)
        n = st.shape[0]
        ll = gaussian_logpdf(obs[0:2], st[:, 0:2], (self.obs_std(st[:, 0:2]) ** 2)[:, None])
        tp = self.target_positions(st)
        slots = obs[2:].reshape(N_TARGETS, 2)
        observed = np.isfinite(slots[:, 0])
        if observed.any():
            var = (self.obs_std(tp) ** 2)[..., None]
            term = np.where(observed, gaussian_logpdf(np.nan_to_num(slots), tp, var), 0.0)
            ll = ll + term.sum(axis=1)
            pi, pj, pp = self._swap_pair(tp, np.broadcast_to(observed, (n, N_TARGETS)))
            rows = np.flatnonzero(pi >= 0)
            if rows.size:
                i, j = pi[rows], pj[rows]
                straight = term[rows, i] + term[rows, j]
                crossed = gaussian_logpdf(slots[i], tp[rows, j], var[rows, j]) + gaussian_logpdf(
                    slots[j], tp[rows, i], var[rows, i]
                )
                p = pp[rows]
                mixed = np.logaddexp(np.log1p(-p) + straight, np.log(p) + crossed)
                ll[rows] += mixed - straight
        ll = np.maximum(ll, LOG_OBS_FLOOR)
        return ll[0] if single else ll

    def reward(self, s, action):
        s = np.asarray(s, dtype=float)
        agent = s[0:2]
        hits = sum(np.linalg.norm(agent - s[4 * i : 4 * i + 2]) < COLLISION_RADIUS for i in range(1, N_TARGETS + 1))
        return float(-ALPHA * np.linalg.norm(agent - self.goal) - BETA - hits)

    def is_terminal(self, s):
        return bool(np.linalg.norm(np.asarray(s, dtype=float)[0:2] - self.goal) < GOAL_RADIUS)

    def scripted_action(self, belief_mean, t):
        """Accelerate along the axis whose velocity most lags the goal-seeking target."""
        m = np.asarray(belief_mean, dtype=float)
        want = np.clip(0.5 * (self.goal - m[0:2]), -0.5, 0.5)
        gap = want - m[2:4]
        i = int(np.argmax(np.abs(gap)))
        return 2 * i if gap[i] >= 0 else 2 * i + 1
