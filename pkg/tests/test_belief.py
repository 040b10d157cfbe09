import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from escort.belief import (
    TIMING_KEYS,
    EscortConfig,
    displacement,
    escort_update,
    init_state,
    observation_weights,
    propagate,
    sir_update,
    systematic_resample,
)
from escort.bench.config import load_config
from escort.bench.runner import streams
from escort.catalog import benchmark_catalog
from escort.envs import LightDark, StaticTargetEnv
from escort.errors import ContractError, NumericalError
from escort.metrics import correlation_error
from escort.numkit import ParticleSet
from escort.targets import GmmSpec


def _gauss(mean, var):
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    d = mean.size
    return GmmSpec([1.0], mean[None], (var * np.eye(d))[None])


def _static(d=2, var=1.0, jitter=0.0):
    return StaticTargetEnv(_gauss(np.zeros(d), var), transition_std=jitter)


# --- propagate -------------------------------------------------------------------


def test_identity_transition_keeps_particles_and_advances_time():
    x = ParticleSet(np.random.default_rng(0).standard_normal((5, 2)), timestep=3)
    out = propagate(x, 0, _static(), np.random.default_rng(1))
    np.testing.assert_array_equal(out.positions, x.positions)
    assert out.timestep == 4


def test_propagate_matches_env_sampler():
    env = LightDark()
    x = ParticleSet(env.initial_particles(8, np.random.default_rng(0)))
    out = propagate(x, 0, env, np.random.default_rng(5))
    np.testing.assert_array_equal(out.positions, env.transition(x.positions, 0, np.random.default_rng(5)))
    again = propagate(x, 0, env, np.random.default_rng(5))
    np.testing.assert_array_equal(out.positions, again.positions)


def test_propagate_rejects_bad_action_and_dims():
    with pytest.raises(ContractError):
        propagate(ParticleSet(np.zeros((3, 2))), 4, _static(), np.random.default_rng(0))
    with pytest.raises(ContractError):
        propagate(ParticleSet(np.zeros((3, 3))), 0, _static(), np.random.default_rng(0))


# --- observation_weights -------------------------------------------------------


def test_particle_at_observed_mode_weighs_most():
    x = np.array([[0.0, 0.0], [0.5, 0.1], [-1.0, 2.0]])
    w = observation_weights(x, np.zeros(0), 0, _static())
    assert np.argmax(w) == 0


def test_weights_floor_in_zero_likelihood_region():
    env = StaticTargetEnv(_gauss([0.0, 0.0], 0.01))
    w = observation_weights(np.full((4, 2), 50.0), np.zeros(0), 0, env)
    np.testing.assert_array_equal(w, 1e-15)


def test_weights_match_direct_density():
    x = np.array([[0.0, 0.0], [1.0, -1.0], [0.3, 0.2]])
    w = observation_weights(x, np.zeros(0), 0, _static(var=2.0))
    ref = np.exp(-np.sum(x**2, axis=1) / 4.0) / (2 * np.pi * 2.0)
    np.testing.assert_allclose(w, ref, rtol=1e-12)


# --- displacement ----------------------------------------------------------------


def test_displacement_alpha_zero():
    np.testing.assert_array_equal(displacement(np.ones((3, 2)), np.ones(3), 0.0), 0.0)


def test_displacement_uniform_weights_pull_to_mean():
    x = np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 3.0]])
    out = displacement(x, np.full(3, 0.4), 0.5)
    np.testing.assert_allclose(out, 0.5 * 0.4 * (x.mean(axis=0) - x))


def test_displacement_dominant_particle():
    x = np.array([[1.0, 2.0], [-3.0, 5.0]])
    w = np.array([1.0, 1e-15])
    mu = (w @ x) / w.sum()
    assert np.abs(mu - x[0]).max() < 1e-10
    out = displacement(x, w, 0.7)
    assert np.abs(out[0]).max() < 1e-10


def test_displacement_weight_count():
    with pytest.raises(ContractError):
        displacement(np.zeros((3, 2)), np.ones(2), 0.5)


@given(st.integers(0, 10_000), st.floats(0.0, 0.99))
@settings(max_examples=50, deadline=None)
def test_displacement_formula(seed, alpha):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((7, 3))
    w = rng.uniform(1e-15, 1.0, 7)
    mu = sum(w[i] * x[i] for i in range(7)) / w.sum()
    ref = np.array([alpha * w[i] * (mu - x[i]) for i in range(7)])
    np.testing.assert_allclose(displacement(x, w, alpha), ref, atol=1e-12)


# --- systematic resampling / SIR ---------------------------------------------------


def test_resample_degenerate_weight():
    idx = systematic_resample(np.r_[1.0, np.full(9, 1e-15)], np.random.default_rng(0))
    np.testing.assert_array_equal(idx, 0)


@given(st.integers(0, 10_000), st.integers(1, 40))
@settings(max_examples=100, deadline=None)
def test_resample_counts_within_systematic_bounds(seed, n):
    rng = np.random.default_rng(seed)
    w = rng.uniform(0, 1, n) ** 3 + 1e-15
    idx = systematic_resample(w, rng)
    counts = np.bincount(idx, minlength=n)
    expected = n * w / w.sum()
    assert idx.size == n
    assert np.all(counts >= np.floor(expected) - 1e-9) and np.all(counts <= np.ceil(expected) + 1e-9)


def test_resample_uniform_weights_keep_everyone():
    idx = systematic_resample(np.full(12, 0.3), np.random.default_rng(2))
    np.testing.assert_array_equal(np.sort(idx), np.arange(12))


def test_sir_collapses_onto_dominant_particle():
    x = np.array([[0.0, 0.0], [5.0, 5.0], [-6.0, 4.0], [7.0, -7.0]])
    env = StaticTargetEnv(_gauss([0.0, 0.0], 0.01))
    out = sir_update(ParticleSet(x), 0, np.zeros(0), env, np.random.default_rng(0))
    np.testing.assert_array_equal(out.positions, np.zeros((4, 2)))
    assert out.timestep == 1


def test_sir_is_reproducible():
    env = LightDark()
    x = ParticleSet(env.initial_particles(30, np.random.default_rng(0)))
    o = env.sample_observation(env.initial_state(np.random.default_rng(1)), 0, np.random.default_rng(2))
    a = sir_update(x, 0, o, env, np.random.default_rng(3), np.random.default_rng(4))
    b = sir_update(x, 0, o, env, np.random.default_rng(3), np.random.default_rng(4))
    np.testing.assert_array_equal(a.positions, b.positions)


# --- EscortConfig / FilterState -----------------------------------------------------


@pytest.mark.parametrize(
    "bad",
    [dict(step_size=-1.0), dict(alpha=1.0), dict(alpha=-0.1), dict(n_proj=0), dict(bandwidth_base=0.0), dict(lambda_corr=-0.1), dict(step_decay=0.0)],
)
def test_config_validation(bad):
    with pytest.raises(ContractError):
        EscortConfig(**bad)


def test_init_state_needs_randomness():
    with pytest.raises(ContractError):
        init_state(np.zeros((3, 2)))
    st_ = init_state(np.zeros((3, 2)), seed=1)
    assert st_.particles is st_.prev_particles


# --- escort_update ----------------------------------------------------------------


def _run(cfg, env, x0, steps=2, seed=0, obs=None, action=0):
    st_ = init_state(x0.copy(), seed=seed)
    for _ in range(steps):
        escort_update(st_, action, np.zeros(0) if obs is None else obs, env, cfg)
    return st_


def test_all_corrections_off_equals_propagation():
    env = _static(jitter=0.1)
    x0 = np.random.default_rng(0).standard_normal((20, 2))
    cfg = EscortConfig(step_size=0.0, alpha=0.0, lambda_temp=0.0, noise_enabled=False)
    st_ = _run(cfg, env, x0, steps=1, seed=4)
    ref = propagate(ParticleSet(x0), 0, env, init_state(x0, seed=4).rngs["transition"])
    np.testing.assert_array_equal(st_.particles.positions, ref.positions)


@pytest.mark.parametrize("noise", [True, False])
def test_ablation_flags_equal_zero_strengths(noise):
    env = _static(d=3, jitter=0.05)
    x0 = np.random.default_rng(1).standard_normal((25, 3)) * 2
    base = EscortConfig(step_size=0.5, alpha=0.3, noise_enabled=noise)
    a = _run(dataclasses.replace(base, no_corr=True, no_temp=True), env, x0, steps=3)
    b = _run(dataclasses.replace(base, lambda_corr=0.0, lambda_temp=0.0), env, x0, steps=3)
    np.testing.assert_array_equal(a.particles.positions, b.particles.positions)


def test_update_preserves_shape_and_tracks_previous():
    env = LightDark()
    rng = np.random.default_rng(2)
    x0 = env.initial_particles(40, rng)
    s = env.initial_state(rng)
    _, o, _, _ = env.step(s, 0, rng)
    st_ = init_state(x0, seed=3)
    before = st_.particles
    escort_update(st_, 0, o, env, EscortConfig(step_size=1.0))
    assert (st_.particles.n, st_.particles.d) == (40, 10)
    assert st_.prev_particles is before
    assert st_.particles.timestep == 1
    assert np.all(np.isfinite(st_.particles.positions))


def test_update_is_reproducible():
    env = _static(d=2, jitter=0.05)
    x0 = np.random.default_rng(3).standard_normal((15, 2))
    cfg = EscortConfig(step_size=0.5)
    a = _run(cfg, env, x0, steps=3, seed=8)
    b = _run(cfg, env, x0, steps=3, seed=8)
    np.testing.assert_array_equal(a.particles.positions, b.particles.positions)


def test_timings_cover_all_phases():
    env = _static(d=2, jitter=0.05)
    st_ = _run(EscortConfig(step_size=0.5), env, np.random.default_rng(4).standard_normal((20, 2)), steps=2)
    assert set(TIMING_KEYS) <= set(st_.timings)
    assert all(st_.timings[k] >= 0 for k in TIMING_KEYS)
    assert sum(st_.timings[k] for k in TIMING_KEYS) <= st_.timings["total"]
    fr = st_.timing_fractions()
    assert sum(fr.values()) <= 1.0


def test_random_projection_ablation_runs():
    env = _static(d=3, jitter=0.05)
    st_ = _run(EscortConfig(step_size=0.5, random_proj=True), env, np.random.default_rng(6).standard_normal((20, 3)))
    assert st_.bank is not None and st_.bank.orthonormality_error() < 1e-8


class _BadScoreEnv(StaticTargetEnv):
    def obs_score(self, s, action, obs):
        out = super().obs_score(s, action, obs)
        out[2, 0] = np.nan
        return out


class _BadTransitionEnv(StaticTargetEnv):
    def transition(self, s, action, rng, noise=True):
        out = super().transition(s, action, rng, noise)
        out[1, 1] = np.inf
        return out


def test_nonfinite_scores_name_the_phase():
    env = _BadScoreEnv(_gauss([0.0, 0.0], 1.0))
    with pytest.raises(NumericalError) as info:
        _run(EscortConfig(step_size=0.1), env, np.zeros((5, 2)) + np.arange(5)[:, None], steps=1)
    assert info.value.phase == "svgd"


def test_nonfinite_transition_names_the_phase():
    env = _BadTransitionEnv(_gauss([0.0, 0.0], 1.0))
    with pytest.raises(NumericalError) as info:
        _run(EscortConfig(), env, np.zeros((5, 2)), steps=1)
    assert info.value.phase == "propagate"
    assert "particle 1" in str(info.value)


def test_predictive_score_flag_runs():
    env = _static(d=2, jitter=0.05)
    st_ = _run(EscortConfig(step_size=0.5, predictive_score=True, analytic_score=False), env, np.random.default_rng(7).standard_normal((20, 2)))
    assert np.all(np.isfinite(st_.particles.positions))


def _static_run(method, seed, xcfg):
    from escort.bench.runner import approximate_density

    g = benchmark_catalog("gmm2d")
    x, _, _ = approximate_density(g, method, xcfg.method_config(method), seed, 100, 300, xcfg.init_std, xcfg.jitter)
    env = StaticTargetEnv(g, xcfg.jitter, xcfg.init_std)
    x0 = env.initial_particles(100, streams(seed)["init"])
    return correlation_error(x0, g.mixture_corr()), correlation_error(x, g.mixture_corr())


def test_static_gmm2d_correlation_improves():
    xcfg = load_config(suite="synthetic")
    full, plain = [], []
    for seed in range(10):
        e0, e = _static_run("escort", seed, xcfg)
        assert e <= 0.8 * e0
        full.append(e)
        plain.append(_static_run("svgd", seed, xcfg)[1])
    assert np.mean(full) <= np.mean(plain)
