"""A fixed density presented to a filter as a constant observation likelihood."""
from __future__ import annotations

import numpy as np

from ..errors import ContractError
from ..targets import GmmSpec, gmm_sample
from .base import LOG_OBS_FLOOR, EnvModel


class StaticTargetEnv(EnvModel):
    """Identity transition (plus optional jitter) and likelihood equal to ``target``.

    Lets the filters approximate a plain density: the observation is empty
    and ignored, the single action does nothing.
    """

    name = "static"
    obs_dim = 0
    n_actions = 1
    action_names = ("hold",)

    def __init__(self, target: GmmSpec, transition_std: float = 0.0, init_std: float = 2.0):
        if transition_std < 0 or init_std <= 0:
            raise ContractError("noise scales must be nonnegative (init strictly positive)")
        self.target = target
        self.state_dim = target.d
        self.position_index = tuple(range(target.d))
        self.transition_std = float(transition_std)
        self.init_std = float(init_std)
        self.delta_max = 6.0 * self.transition_std * np.sqrt(target.d)

    def initial_state(self, rng):
        return gmm_sample(self.target, 1, rng).positions[0].copy()

    def initial_particles(self, n, rng):
        return self.init_std * rng.standard_normal((n, self.state_dim))

    def transition(self, s, action, rng, noise=True):
        self.check_action(action)
        st, single = self._states(s)
        out = st.copy()
        if noise and self.transition_std > 0:
            out = out + self.transition_std * rng.standard_normal(out.shape)
        return out[0] if single else out

    def sample_observation(self, s, action, rng):
        return np.zeros(0)

    def obs_loglik(self, s, action, obs):
        st, single = self._states(s)
        out = np.maximum(self.target.log_density(st), LOG_OBS_FLOOR)
        return out[0] if single else out

    def obs_score(self, s, action, obs):
        """Analytic gradient of the target log-density."""
        return self.target.score(np.atleast_2d(np.asarray(s, dtype=float)))

    def target_samples(self, n, rng):
        return gmm_sample(self.target, n, rng).positions

    def reward(self, s, action):
        return 0.0

    def scripted_action(self, belief_mean, t):
        return 0
