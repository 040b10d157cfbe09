"""Seeded experiment execution for the synthetic, POMDP and scalability suites."""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..belief import EscortConfig, escort_update, init_state, sir_update
from ..catalog import benchmark_catalog, scalability_gmm
from ..envs import StaticTargetEnv, data_hash, make_env
from ..metrics import correlation_error, mmd, mode_coverage, position_error, rmse, sliced_wasserstein, wasserstein_1d
from ..numkit import PHASES, ParticleSet, phase_streams
from ..targets import GmmSpec, gmm_sample
from .config import ExperimentConfig
from .report import RunReport

# filter phases first so adding bench phases never perturbs them
BENCH_PHASES = PHASES + ("world", "metric", "resample")


def streams(seed: int) -> dict:
    return phase_streams(seed, BENCH_PHASES)


def _timing_row(timings: dict | None) -> dict:
    if timings is None:
        return {}
    total = timings["total"]
    row = {f"frac_{k}": (timings[k] / total if total > 0 else 0.0) for k in ("kernel", "svgd", "gswd", "temporal")}
    row["total_time"] = total
    return row


def approximate_density(g: GmmSpec, method: str, cfg: EscortConfig, seed: int, n: int, iterations: int, init_std: float, jitter: float):
    """Drive one filter toward the static density ``g``.

    Returns ``(particles, timings, rngs)``; ``timings`` is None for SIR.
    """
    env = StaticTargetEnv(g, transition_std=jitter, init_std=init_std)
    rs = streams(seed)
    x0 = env.initial_particles(n, rs["init"])
    obs = np.zeros(0)
    if method == "sir":
        x = ParticleSet(x0)
        for _ in range(iterations):
            x = sir_update(x, 0, obs, env, rs["transition"], rs["resample"])
        return np.asarray(x.positions), None, rs
    st = init_state(x0, rngs=rs)
    outer = iterations // cfg.inner_iters if cfg.inner_iters else 0
    for _ in range(outer):
        escort_update(st, 0, obs, env, cfg)
    return np.asarray(st.particles.positions), dict(st.timings), rs


def density_metrics(x: np.ndarray, g: GmmSpec, rng: np.random.Generator) -> dict:
    ref = gmm_sample(g, x.shape[0], rng).positions
    row = {
        "mmd": mmd(x, ref),
        "sw": wasserstein_1d(x, ref) if g.d == 1 else sliced_wasserstein(x, ref, rng=rng),
        "coverage": mode_coverage(x, g.means),
        "rmse": rmse(x.mean(axis=0), g.mixture_mean()),
    }
    if g.d >= 2:
        row["corr_error"] = correlation_error(x, g.mixture_corr())
    return row


def synthetic_seed(xcfg: ExperimentConfig, seed: int) -> dict:
    g = benchmark_catalog(xcfg.target)
    x, timings, rs = approximate_density(
        g, xcfg.method, xcfg.method_config(), seed, xcfg.n_particles, xcfg.iterations, xcfg.init_std, xcfg.jitter
    )
    row = {"suite": "synthetic", "method": xcfg.method, "case": xcfg.target, "seed": seed}
    row.update(density_metrics(x, g, rs["metric"]))
    row.update(_timing_row(timings))
    return row


def scalability_seed(xcfg: ExperimentConfig, seed: int) -> list[dict]:
    rows = []
    for d in xcfg.dims:
        g = scalability_gmm(d)
        for method in ("escort", "escort-nocorr"):
            x, timings, _ = approximate_density(
                g, method, xcfg.method_config(method), seed, xcfg.n_particles, xcfg.iterations, xcfg.init_std, xcfg.jitter
            )
            row = {"suite": "scalability", "method": method, "case": f"scal-{d}", "seed": seed}
            row["rmse"] = rmse(x.mean(axis=0), g.mixture_mean())
            if d >= 2:
                row["corr_error"] = correlation_error(x, g.mixture_corr())
            row.update(_timing_row(timings))
            rows.append(row)
    return rows


def run_episode(env, method: str, cfg: EscortConfig, n: int, steps: int, rs: dict) -> tuple[float, float, dict | None]:
    """One scripted-policy episode; returns (mean error, final error, timings).

    The policy acts on the belief mean. With ``steps == 0`` both errors are
    the error of the initial belief.
    """
    s = env.initial_state(rs["world"])
    particles = env.initial_particles(n, rs["init"])
    pos = env.position_index
    st = None if method == "sir" else init_state(particles, rngs=rs)
    belief = ParticleSet(particles)
    errors = []
    for t in range(steps):
        mean = belief.positions.mean(axis=0)
        a = env.scripted_action(mean, t)
        s, o, _, done = env.step(s, a, rs["world"], rs["observation"])
        if st is None:
            belief = sir_update(belief, a, o, env, rs["transition"], rs["resample"])
        else:
            escort_update(st, a, o, env, cfg)
            belief = st.particles
        errors.append(position_error(belief.positions, s, pos))
        if done:
            break
    if not errors:
        errors.append(position_error(belief.positions, s, pos))
    return float(np.mean(errors)), errors[-1], (None if st is None else dict(st.timings))


def pomdp_seed(xcfg: ExperimentConfig, seed: int) -> dict:
    env = make_env(xcfg.env)
    rs = streams(seed)
    cfg = xcfg.method_config()
    means, finals = [], []
    totals = None
    for _ in range(xcfg.episodes):
        m, f, timings = run_episode(env, xcfg.method, cfg, xcfg.n_particles, xcfg.episode_len, rs)
        means.append(m)
        finals.append(f)
        if timings is not None:
            totals = timings if totals is None else {k: totals[k] + timings[k] for k in totals}
    row = {"suite": "pomdp", "method": xcfg.method, "case": xcfg.env, "seed": seed}
    if means:
        row["position_error"] = float(np.mean(means))
        row["final_position_error"] = float(np.mean(finals))
    row.update(_timing_row(totals))
    return row


_SEED_RUNNERS = {"synthetic": synthetic_seed, "pomdp": pomdp_seed, "scalability": scalability_seed}


def _run_one(args):
    suite, xcfg, seed = args
    return _SEED_RUNNERS[suite](xcfg, seed)


def _map_seeds(xcfg: ExperimentConfig) -> list:
    """Per-seed results in seed order, whatever order the workers finish in."""
    jobs = [(xcfg.suite, xcfg, s) for s in xcfg.seeds]
    if xcfg.workers == 1 or len(jobs) == 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=xcfg.workers) as pool:
        return list(pool.map(_run_one, jobs))


def _new_report(xcfg: ExperimentConfig) -> RunReport:
    return RunReport(config=xcfg.echo(), data_hash=data_hash())


def run_synthetic(xcfg: ExperimentConfig) -> RunReport:
    report = _new_report(xcfg)
    report.rows.extend(_map_seeds(xcfg))
    return report


def run_pomdp(xcfg: ExperimentConfig) -> RunReport:
    report = _new_report(xcfg)
    report.rows.extend(_map_seeds(xcfg))
    return report


def run_scalability(xcfg: ExperimentConfig) -> RunReport:
    """ESCORT and ESCORT-NoCorr per dimension; ``extras`` holds NoCorr/ESCORT RMSE ratios."""
    report = _new_report(xcfg)
    for rows in _map_seeds(xcfg):
        report.rows.extend(rows)
    for d in xcfg.dims:
        case = f"scal-{d}"
        full = report.summary("rmse", "escort", case).mean
        ablated = report.summary("rmse", "escort-nocorr", case).mean
        report.extras[f"rmse_ratio:{case}"] = ablated / full if full > 0 else float("inf")
    return report


SUITE_RUNNERS = {"synthetic": run_synthetic, "pomdp": run_pomdp, "scalability": run_scalability}


def run_experiment(xcfg: ExperimentConfig) -> RunReport:
    return SUITE_RUNNERS[xcfg.suite](xcfg)


def scaling_exponent(dims, times) -> float:
    """Least-squares slope of log time against log dimension."""
    dims = np.asarray(dims, dtype=float)
    times = np.asarray(times, dtype=float)
    if dims.size < 2 or np.any(times <= 0):
        return float("nan")
    return float(np.polyfit(np.log(dims), np.log(times), 1)[0])


def profile(xcfg: ExperimentConfig) -> RunReport:
    """Phase timing breakdown.

    For the scalability suite the configured method runs on the scalability
    family at every entry of ``dims`` and ``extras`` records the fitted
    exponent of total time against dimension. Other suites are simply run
    and their timing columns reported.
    """
    if xcfg.suite != "scalability":
        return run_experiment(xcfg)
    report = _new_report(xcfg)
    cfg = xcfg.method_config("escort")
    for d in xcfg.dims:
        g = scalability_gmm(d)
        for seed in xcfg.seeds:
            t0 = time.perf_counter()
            _, timings, _ = approximate_density(g, "escort", cfg, seed, xcfg.n_particles, xcfg.iterations, xcfg.init_std, xcfg.jitter)
            row = {"suite": "profile", "method": "escort", "case": f"scal-{d}", "seed": seed}
            row.update(_timing_row(timings))
            if timings["total"] <= 0:
                row["total_time"] = time.perf_counter() - t0
            report.rows.append(row)
    totals = [report.summary("total_time", "escort", f"scal-{d}").mean for d in xcfg.dims]
    report.extras["scaling_exponent"] = scaling_exponent(xcfg.dims, totals)
    return report
