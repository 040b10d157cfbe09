"""Belief filters: the regularised SVGD update, its ablations, and bootstrap SIR."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .corrproj import ProjectionBank, init_projections, optimize_projections, random_projections
from .errors import ContractError, NumericalError
from .numkit import ParticleSet, as_points, median_bandwidth, pairwise_sq_dist, phase_streams
from .stein import _check_scores, direction_from_kernel, inject_noise, kernel_terms, repulsion_scale
from .targets import OBS_DENSITY_FLOOR, fd_score
from .temporal import TemporalDirections, init_directions, optimize_directions, temporal_force

TIMING_KEYS = ("kernel", "svgd", "gswd", "temporal")


@dataclass(frozen=True)
class EscortConfig:
    """Hyperparameters of one ESCORT filter.

    ``alpha`` is the observation-displacement strength, ``inner_iters`` the
    number of SVGD iterations per belief update and ``step_decay`` the
    per-iteration step-size decay. ``analytic_score`` uses an environment's
    ``obs_score`` when it has one instead of finite differences;
    ``predictive_score`` adds a kernel estimate of the predicted belief's
    score to the observation score.
    """

    step_size: float = 0.01
    bandwidth_base: float = 0.1
    lambda_corr: float = 0.1
    lambda_temp: float = 0.1
    n_proj: int = 5
    proj_rank: int = 1
    inner_iters: int = 10
    alpha: float = 0.5
    step_decay: float = 0.999
    no_corr: bool = False
    no_temp: bool = False
    random_proj: bool = False
    noise_enabled: bool = True
    repulsion_scale_enabled: bool = True
    proj_steps: int = 20
    proj_lr: float = 0.05
    temp_dirs: int = 5
    temp_steps: int = 10
    temp_lr: float = 0.05
    analytic_score: bool = True
    predictive_score: bool = False

    def __post_init__(self):
        for name in ("step_size", "lambda_corr", "lambda_temp", "proj_lr", "temp_lr"):
            if getattr(self, name) < 0:
                raise ContractError(f"{name} must be nonnegative")
        if self.bandwidth_base <= 0:
            raise ContractError("bandwidth_base must be positive")
        if not 0.0 <= self.alpha < 1.0:
            raise ContractError("alpha must lie in [0, 1)")
        if not 0.0 < self.step_decay <= 1.0:
            raise ContractError("step_decay must lie in (0, 1]")
        for name in ("n_proj", "proj_rank", "temp_dirs"):
            if getattr(self, name) < 1:
                raise ContractError(f"{name} must be at least 1")
        for name in ("inner_iters", "proj_steps", "temp_steps"):
            if getattr(self, name) < 0:
                raise ContractError(f"{name} must be nonnegative")


@dataclass
class FilterState:
    """Mutable state owned by one filter run."""

    particles: ParticleSet
    prev_particles: ParticleSet
    rngs: dict
    bank: ProjectionBank | None = None
    directions: TemporalDirections | None = None
    inner_count: int = 0
    timings: dict = field(default_factory=lambda: {k: 0.0 for k in TIMING_KEYS + ("total",)})

    def __post_init__(self):
        if (self.particles.n, self.particles.d) != (self.prev_particles.n, self.prev_particles.d):
            raise ContractError("particles and prev_particles must share n and d")

    def timing_fractions(self) -> dict:
        total = self.timings["total"]
        return {k: (self.timings[k] / total if total > 0 else 0.0) for k in TIMING_KEYS}


def init_state(particles, seed: int | None = None, rngs: dict | None = None) -> FilterState:
    ps = particles if isinstance(particles, ParticleSet) else ParticleSet(particles)
    if rngs is None:
        if seed is None:
            raise ContractError("need a seed or a dict of phase streams")
        rngs = phase_streams(seed)
    return FilterState(ps, ps, rngs)


def _finite_or_raise(x: np.ndarray, phase: str) -> np.ndarray:
    bad = ~np.all(np.isfinite(x), axis=1)
    if bad.any():
        raise NumericalError(f"non-finite particle {int(np.argmax(bad))} after {phase}", phase=phase)
    return x


def propagate(x: ParticleSet, a, env, rng: np.random.Generator) -> ParticleSet:
    """Push every particle through the transition sampler; timestep advances by one."""
    pos = np.asarray(x, dtype=float)
    if pos.shape[1] != env.state_dim:
        raise ContractError(f"particles have {pos.shape[1]} dims, environment expects {env.state_dim}")
    out = _finite_or_raise(np.atleast_2d(env.transition(pos, a, rng)), "propagate")
    return ParticleSet(out, x.timestep + 1 if isinstance(x, ParticleSet) else 1)


def observation_weights(x, o, a, env) -> np.ndarray:
    """Raw likelihoods ``O(o | x_i, a)`` floored at 1e-15 (not normalised)."""
    ll = np.asarray(env.obs_loglik(as_points(x), a, o), dtype=float)
    with np.errstate(over="ignore"):
        w = np.exp(ll)
    # exp(log(floor)) overshoots the floor by an ulp; floored entries get it exactly
    w = np.where(ll <= np.log(OBS_DENSITY_FLOOR), OBS_DENSITY_FLOOR, w)
    return np.maximum(np.nan_to_num(w, nan=OBS_DENSITY_FLOOR), OBS_DENSITY_FLOOR)


def displacement(x, w, alpha: float) -> np.ndarray:
    """Row i is ``alpha * w_i * (mu_obs - x_i)`` with ``mu_obs`` the w-weighted mean."""
    x = as_points(x)
    w = np.asarray(w, dtype=float).ravel()
    if w.shape[0] != x.shape[0]:
        raise ContractError("one weight per particle required")
    if alpha == 0.0:
        return np.zeros_like(x)
    total = w.sum()
    if not total > 0:
        raise ContractError("weights must have a positive sum")
    mu = (w @ x) / total
    return alpha * w[:, None] * (mu - x)


def systematic_resample(w, rng: np.random.Generator) -> np.ndarray:
    """Indices drawn with one uniform offset over ``n`` evenly spaced positions."""
    w = np.asarray(w, dtype=float).ravel()
    n = w.size
    total = w.sum()
    if not np.isfinite(total) or total <= 0:
        w = np.full(n, 1.0 / n)
    else:
        w = w / total
    cum = np.cumsum(w)
    cum[-1] = 1.0
    positions = (rng.random() + np.arange(n)) / n
    return np.searchsorted(cum, positions, side="right").clip(0, n - 1)


def _kde_score(x: np.ndarray, centers: np.ndarray, h0: float) -> np.ndarray:
    """Score of a Gaussian kernel density over ``centers`` (median-heuristic bandwidth)."""
    h = median_bandwidth(centers, h0) if centers.shape[0] > 1 else h0
    sq = pairwise_sq_dist(x, centers)
    logk = -sq / h
    logk -= logk.max(axis=1, keepdims=True)
    k = np.exp(logk)
    k /= k.sum(axis=1, keepdims=True)
    return (2.0 / h) * (k @ centers - x)


def _score_fn(env, a, o, cfg: EscortConfig, predicted: np.ndarray | None):
    if cfg.analytic_score and hasattr(env, "obs_score"):
        base = lambda z: env.obs_score(z, a, o)  # noqa: E731
    else:
        base = lambda z: fd_score(lambda y: env.obs_loglik(y, a, o), z)  # noqa: E731
    if not cfg.predictive_score or predicted is None:
        return base
    return lambda z: base(z) + _kde_score(z, predicted, cfg.bandwidth_base)


def _target_samples(env, xt: np.ndarray, w: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Samples standing in for the posterior when building projections."""
    if hasattr(env, "target_samples"):
        return np.asarray(env.target_samples(xt.shape[0], rng), dtype=float)
    return xt[systematic_resample(w, rng)]


def escort_update(st: FilterState, a, o, env, cfg: EscortConfig) -> FilterState:
    """One belief update; mutates and returns ``st``.

    Order: propagate, weight, displace, refresh projections, ``inner_iters``
    regularised SVGD iterations, temporal pull toward the previous belief,
    optional noise.
    """
    t_start = time.perf_counter()
    before = st.particles
    if before.d != env.state_dim:
        raise ContractError(f"belief has {before.d} dims, environment expects {env.state_dim}")
    pred = propagate(before, a, env, st.rngs["transition"])
    xt = np.array(pred.positions)
    w = observation_weights(xt, o, a, env)
    if cfg.alpha > 0.0:
        # raw likelihoods span many decades; the strongest particle gets weight 1
        x = _finite_or_raise(xt + displacement(xt, w / w.max(), cfg.alpha), "displacement")
    else:
        x = xt.copy()
    n, d = x.shape

    t0 = time.perf_counter()
    use_corr = not cfg.no_corr
    if use_corr:
        prng = st.rngs["projections"]
        if cfg.random_proj:
            st.bank = random_projections(d, cfg.n_proj, cfg.proj_rank, prng)
        elif n >= 2:
            p = _target_samples(env, xt, w, prng)
            if st.bank is None or st.bank.d != d:
                st.bank = init_projections(x, p, cfg.n_proj, cfg.proj_rank, prng)
            st.bank = optimize_projections(st.bank, x, p, cfg.proj_steps, cfg.proj_lr)
        operator = st.bank.operator() if st.bank is not None else None
    st.timings["gswd"] += time.perf_counter() - t0

    score_fn = _score_fn(env, a, o, cfg, xt)
    rho = repulsion_scale(d) if cfg.repulsion_scale_enabled else 1.0
    for _ in range(cfg.inner_iters):
        eps = cfg.step_size * cfg.step_decay**st.inner_count
        st.inner_count += 1
        t0 = time.perf_counter()
        _, K, G = kernel_terms(x, cfg.bandwidth_base)
        t1 = time.perf_counter()
        scores = _check_scores(score_fn(x), x.shape)
        phi = direction_from_kernel(K, G, scores, rho)
        t2 = time.perf_counter()
        st.timings["kernel"] += t1 - t0
        st.timings["svgd"] += t2 - t1
        if use_corr and operator is not None and cfg.lambda_corr != 0.0:
            # same field as corrproj.corr_reg_force, with the operator hoisted out of the loop
            phi = phi - cfg.lambda_corr * (x - x.mean(axis=0)) @ operator
        st.timings["gswd"] += time.perf_counter() - t2
        x = _finite_or_raise(x + eps * phi, "svgd")

    if not cfg.no_temp and n >= 2:
        t0 = time.perf_counter()
        prev = np.asarray(before.positions)
        trng = st.rngs["projections"]
        if st.directions is None or st.directions.d != d:
            st.directions = init_directions(x, cfg.temp_dirs, trng)
        st.directions = optimize_directions(st.directions, prev, x, cfg.temp_steps, cfg.temp_lr)
        if cfg.lambda_temp != 0.0:
            x = _finite_or_raise(x + temporal_force(prev, x, st.directions, cfg.lambda_temp), "temporal")
        st.timings["temporal"] += time.perf_counter() - t0

    if cfg.noise_enabled:
        x = _finite_or_raise(inject_noise(x, st.rngs["noise"]), "noise")

    st.prev_particles = before
    st.particles = ParticleSet(x, pred.timestep)
    st.timings["total"] += time.perf_counter() - t_start
    return st


def sir_update(x: ParticleSet, a, o, env, rng: np.random.Generator, resample_rng: np.random.Generator | None = None) -> ParticleSet:
    """Bootstrap filter step: propagate, weight, systematic resampling."""
    pred = propagate(x, a, env, rng)
    w = observation_weights(pred.positions, o, a, env)
    idx = systematic_resample(w, rng if resample_rng is None else resample_rng)
    return ParticleSet(pred.positions[idx], pred.timestep)
