import json
import math

import numpy as np
import pytest

from escort.bench.cli import main
from escort.bench.config import BUNDLED, ExperimentConfig, build_config, builtin_config_text, load_config, parse_seeds, read_ini
from escort.bench.report import COLUMNS, TIMING_COLUMNS, RunReport, parse_csv, strip_timing
from escort.bench.runner import run_experiment, scaling_exponent, streams
from escort.catalog import target_names
from escort.envs import data_hash, env_names, make_env
from escort.errors import ConfigError
from escort.metrics import position_error

FAST = ["n_particles=20", "iterations=20", "seeds=0,1"]


def _cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# --- configuration ----------------------------------------------------------------


def test_parse_seeds():
    assert parse_seeds("0,1,5-7") == (0, 1, 5, 6, 7)
    for bad in ("", "a", "3-1", "-2"):
        with pytest.raises(ConfigError):
            parse_seeds(bad)


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_configs_load(name):
    settings = read_ini(builtin_config_text(name))
    cfg = build_config(settings)
    assert cfg.suite in ("synthetic", "pomdp", "scalability")


@pytest.mark.parametrize(
    "overrides",
    [
        ["method=mcmc"],
        ["target=gmm7d"],
        ["bogus=1"],
        ["escort.bogus=1"],
        ["step_size=fast"],
        ["alpha=1.5"],
        ["n_particles=1"],
        ["iterations=25"],
        ["seeds="],
        ["workers=0"],
        ["noise_enabled=maybe"],
        ["novalue"],
    ],
)
def test_bad_settings_raise_config_error(overrides):
    with pytest.raises(ConfigError):
        load_config(suite="synthetic", overrides=overrides)


def test_scalability_requires_escort_method():
    with pytest.raises(ConfigError):
        load_config(suite="scalability", overrides=["method=sir"])


def test_suite_must_match_file(tmp_path):
    p = tmp_path / "x.ini"
    p.write_text(builtin_config_text("pomdp"))
    with pytest.raises(ConfigError):
        load_config(str(p), suite="synthetic")
    assert load_config(str(p), suite="pomdp").env == "lightdark"


def test_seed_shortcut_and_echo():
    cfg = load_config(suite="synthetic", seeds=3, overrides=["escort.n_proj=7"])
    assert cfg.seeds == (0, 1, 2)
    echo = cfg.echo()
    assert echo["experiment.seeds"] == "0,1,2"
    assert echo["escort.n_proj"] == "7"
    with pytest.raises(ConfigError):
        load_config(suite="synthetic", seeds=0)


def test_method_flags():
    cfg = ExperimentConfig()
    assert cfg.method_config("svgd").no_corr and cfg.method_config("svgd").no_temp
    assert cfg.method_config("escort-noproj").random_proj
    assert not cfg.method_config("escort").no_corr


def test_streams_are_independent_of_added_phases():
    a, b = streams(4), streams(4)
    assert a["world"].random() == b["world"].random()
    assert a["init"].random() != a["metric"].random()


def test_scaling_exponent_recovers_power_law():
    dims = [10, 20, 50]
    assert scaling_exponent(dims, [d**1.7 for d in dims]) == pytest.approx(1.7)
    assert math.isnan(scaling_exponent([10], [1.0]))


# --- runs and reports -------------------------------------------------------------


@pytest.fixture(scope="module")
def synthetic_report():
    return run_experiment(load_config(suite="synthetic", overrides=FAST))


def test_report_rows_and_header(synthetic_report):
    text = synthetic_report.to_csv()
    assert f"# data_hash={data_hash()}" in text
    assert "# experiment.target=gmm2d" in text
    assert "# escort.step_size=3.0" in text
    rows = parse_csv(text)
    assert [r["seed"] for r in rows] == ["0", "1"]
    assert list(rows[0]) == list(COLUMNS)


def test_aggregates_recomputable_from_rows(synthetic_report):
    rows = parse_csv(synthetic_report.to_csv())
    agg = synthetic_report.aggregates()["escort"]["gmm2d"]
    for col, (mean, se) in agg.items():
        vals = [float(r[col]) for r in rows]
        assert np.mean(vals) == pytest.approx(mean, abs=1e-12)
        assert np.std(vals, ddof=1) / np.sqrt(len(vals)) == pytest.approx(se, abs=1e-12)


def test_four_timing_categories_present(synthetic_report):
    for r in synthetic_report.rows:
        for c in TIMING_COLUMNS:
            assert c in r
        assert sum(r[c] for c in TIMING_COLUMNS[:4]) <= 1.0
    assert set(synthetic_report.timing_fractions()) == {"kernel", "svgd", "gswd", "temporal"}


def test_json_report(synthetic_report):
    doc = json.loads(synthetic_report.to_json())
    assert doc["data_hash"] == data_hash()
    assert len(doc["rows"]) == 2 and doc["columns"] == list(COLUMNS)
    assert "escort" in doc["aggregates"]


def test_sir_rows_have_no_timing():
    rep = run_experiment(load_config(suite="synthetic", overrides=FAST + ["method=sir", "target=gmm1d"]))
    rows = parse_csv(rep.to_csv())
    assert rows[0]["frac_kernel"] == "" and rows[0]["corr_error"] == ""
    assert float(rows[0]["coverage"]) >= 0


def test_workers_do_not_change_results():
    one = run_experiment(load_config(suite="synthetic", overrides=FAST))
    two = run_experiment(load_config(suite="synthetic", overrides=FAST + ["workers=2"]))
    body = lambda r: strip_timing(r.to_csv())  # noqa: E731
    assert body(one) == body(two)


def test_zero_length_episode_reports_initial_error():
    cfg = load_config(suite="pomdp", overrides=["episode_len=0", "episodes=1", "seeds=3", "n_particles=30"])
    rep = run_experiment(cfg)
    env = make_env("lightdark")
    rs = streams(3)
    s = env.initial_state(rs["world"])
    p = env.initial_particles(30, rs["init"])
    expected = position_error(p, s, env.position_index)
    assert rep.rows[0]["position_error"] == pytest.approx(expected, rel=1e-15)
    assert rep.rows[0]["final_position_error"] == rep.rows[0]["position_error"]


def test_scalability_ratios():
    rep = run_experiment(load_config(suite="scalability", overrides=["dims=1,3", "seeds=0", "n_particles=20", "iterations=20"]))
    assert set(rep.extras) == {"rmse_ratio:scal-1", "rmse_ratio:scal-3"}
    assert {m for m, _ in rep.groups()} == {"escort", "escort-nocorr"}


def test_strip_timing_blanks_only_wall_clock():
    rep = RunReport(config={}, data_hash="h", rows=[{"suite": "s", "method": "m", "case": "c", "seed": 0, "mmd": 0.5, "total_time": 3.0}])
    body = strip_timing(rep.to_csv())
    assert "total_time" not in body and "0.5" in body


# --- command line -----------------------------------------------------------------


def test_cli_lists(capsys):
    code, out, _ = _cli(capsys, "list-targets")
    assert code == 0 and out.split() == target_names()
    code, out, _ = _cli(capsys, "list-envs")
    assert code == 0 and out.split() == env_names()


def test_cli_deterministic_reports(capsys):
    args = ["synthetic", "--seeds", "2"] + [x for kv in FAST[:2] for x in ("--set", kv)]
    code1, out1, _ = _cli(capsys, *args)
    code2, out2, _ = _cli(capsys, *args)
    assert code1 == code2 == 0
    assert strip_timing(out1) == strip_timing(out2)
    assert len(parse_csv(out1)) == 2


def test_cli_out_file_and_summary(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, stdout, stderr = _cli(capsys, "synthetic", "--seeds", "1", "--set", "iterations=10", "--set", "n_particles=10", "--out", str(out), "--format", "json")
    assert code == 0 and stdout == ""
    assert "coverage=" in stderr
    assert json.loads(out.read_text())["report_version"] == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["synthetic", "--set", "method=mcmc"],
        ["synthetic", "--config", "/nonexistent.ini"],
        ["pomdp", "--set", "env=atari"],
        ["synthetic", "--bogus"],
        ["teleport"],
        ["synthetic", "--format", "xml"],
    ],
)
def test_cli_config_errors_exit_2(capsys, argv):
    with pytest.raises(SystemExit) as info:
        code = main(argv)
        raise SystemExit(code)
    assert info.value.code == 2


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_cli_numerical_failure_exits_3(capsys):
    code, _, err = _cli(capsys, "synthetic", "--seeds", "1", "--set", "step_size=1e308", "--set", "iterations=10", "--set", "n_particles=10")
    assert code == 3
    assert "numerical failure" in err


def test_cli_profile_small(capsys):
    code, out, _ = _cli(capsys, "profile", "--set", "dims=2,4", "--set", "iterations=10", "--set", "n_particles=10", "--format", "json")
    doc = json.loads(out)
    assert code == 0
    assert np.isfinite(doc["extras"]["scaling_exponent"])
    assert set(doc["timing_fractions"]) == {"kernel", "svgd", "gswd", "temporal"}


def test_ini_inline_comments(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[experiment]\nsuite = synthetic   ; which suite\ntarget = gmm3d\n[escort]\nstep_size = 2.5 ; larger\n")
    cfg = load_config(str(p), suite="synthetic")
    assert cfg.target == "gmm3d" and cfg.escort.step_size == 2.5
