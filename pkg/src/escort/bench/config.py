"""Experiment configuration: INI files with ``[experiment]`` and ``[escort]`` sections.

Schema
------
``[experiment]``
    suite        synthetic | pomdp | scalability
    method       escort | escort-nocorr | escort-notemp | escort-noproj | svgd | sir
    target       catalog name (synthetic suite)
    env          environment name (pomdp suite)
    dims         comma list of dimensions (scalability suite)
    seeds        comma list of integers, ``a-b`` ranges allowed
    n_particles  particles per filter
    iterations   SVGD iterations for density suites (outer updates = iterations / inner_iters);
                 SIR performs this many bootstrap updates
    episodes     episodes per seed (pomdp suite)
    episode_len  steps per episode (pomdp suite)
    init_std     std of the N(0, init_std^2 I) initial particles (density suites)
    jitter       identity-transition jitter used by the static driver
    workers      worker processes (1 runs in-process)

``[escort]``
    any field of :class:`escort.belief.EscortConfig`.

Overrides take the form ``key=value`` or ``section.key=value``.
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from importlib import resources

from ..belief import EscortConfig
from ..catalog import target_names
from ..envs import env_names
from ..errors import ConfigError, ContractError

SUITES = ("synthetic", "pomdp", "scalability")
METHODS = ("escort", "escort-nocorr", "escort-notemp", "escort-noproj", "svgd", "sir")
METHOD_FLAGS = {
    "escort": {},
    "escort-nocorr": {"no_corr": True},
    "escort-notemp": {"no_temp": True},
    "escort-noproj": {"random_proj": True},
    "svgd": {"no_corr": True, "no_temp": True},
}


def parse_seeds(text: str) -> tuple[int, ...]:
    """``"0,1,5-7"`` -> ``(0, 1, 5, 6, 7)``."""
    seeds: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if "-" in part:
                lo, hi = part.split("-", 1)
                if int(hi) < int(lo):
                    raise ValueError
                seeds.extend(range(int(lo), int(hi) + 1))
            else:
                seeds.append(int(part))
        except ValueError:
            raise ConfigError(f"bad seed entry {part!r}") from None
    if not seeds:
        raise ConfigError("seed list is empty")
    if any(s < 0 for s in seeds):
        raise ConfigError("seeds must be nonnegative")
    return tuple(seeds)


def _parse_ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in str(text).split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"expected a comma list of integers, got {text!r}") from None


def _coerce(value: str, kind, key: str):
    text = str(value).strip()
    try:
        if kind is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError
        return kind(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot read {text!r} as {kind.__name__}") from None


_ESCORT_TYPES = {f.name: type(f.default) for f in dataclasses.fields(EscortConfig)}


@dataclass(frozen=True)
class ExperimentConfig:
    suite: str = "synthetic"
    method: str = "escort"
    target: str = "gmm2d"
    env: str = "lightdark"
    dims: tuple[int, ...] = (1, 5, 20, 50)
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    n_particles: int = 100
    iterations: int = 300
    episodes: int = 10
    episode_len: int = 30
    init_std: float = 2.0
    jitter: float = 0.05
    workers: int = 1
    escort: EscortConfig = field(default_factory=EscortConfig)

    def __post_init__(self):
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}; choose from {SUITES}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not self.seeds:
            raise ConfigError("seed list is empty")
        if self.suite == "synthetic" and self.target not in target_names():
            raise ConfigError(f"unknown target {self.target!r}")
        if self.suite == "pomdp" and self.env not in env_names():
            raise ConfigError(f"unknown environment {self.env!r}")
        if self.suite == "scalability":
            if self.method != "escort":
                raise ConfigError("the scalability suite compares escort with escort-nocorr; set method = escort")
            if not self.dims or min(self.dims) < 1:
                raise ConfigError("dims must be a nonempty list of positive integers")
        if self.n_particles < 2:
            raise ConfigError("n_particles must be at least 2")
        for name in ("iterations", "episodes", "episode_len"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative")
        if self.suite != "pomdp" and self.escort.inner_iters > 0 and self.iterations % self.escort.inner_iters:
            raise ConfigError("iterations must be a multiple of escort.inner_iters")
        if self.init_std <= 0 or self.jitter < 0:
            raise ConfigError("init_std must be positive and jitter nonnegative")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    def method_config(self, method: str | None = None) -> EscortConfig:
        """The filter hyperparameters with the ablation flags of ``method`` applied."""
        method = self.method if method is None else method
        return dataclasses.replace(self.escort, **METHOD_FLAGS.get(method, {}))

    def echo(self) -> dict:
        """Flat ``section.key -> str`` view of every setting."""
        out = {}
        for f in dataclasses.fields(self):
            if f.name == "escort":
                continue
            v = getattr(self, f.name)
            out[f"experiment.{f.name}"] = ",".join(map(str, v)) if isinstance(v, tuple) else str(v)
        for f in dataclasses.fields(EscortConfig):
            out[f"escort.{f.name}"] = str(getattr(self.escort, f.name))
        return out


_EXPERIMENT_TYPES = {
    "suite": str,
    "method": str,
    "target": str,
    "env": str,
    "n_particles": int,
    "iterations": int,
    "episodes": int,
    "episode_len": int,
    "init_std": float,
    "jitter": float,
    "workers": int,
}


def _resolve_key(key: str) -> tuple[str, str]:
    key = key.strip()
    if "." in key:
        section, name = key.split(".", 1)
    elif key in _EXPERIMENT_TYPES or key in ("seeds", "dims"):
        section, name = "experiment", key
    elif key in _ESCORT_TYPES:
        section, name = "escort", key
    else:
        raise ConfigError(f"unknown setting {key!r}")
    if section == "experiment" and name not in _EXPERIMENT_TYPES and name not in ("seeds", "dims"):
        raise ConfigError(f"unknown setting experiment.{name}")
    if section == "escort" and name not in _ESCORT_TYPES:
        raise ConfigError(f"unknown setting escort.{name}")
    if section not in ("experiment", "escort"):
        raise ConfigError(f"unknown section {section!r}")
    return section, name


def build_config(settings: dict[str, str]) -> ExperimentConfig:
    """Typed config from ``{section.key or key: text}``."""
    exp, esc = {}, {}
    for key, value in settings.items():
        section, name = _resolve_key(key)
        if section == "escort":
            esc[name] = _coerce(value, _ESCORT_TYPES[name], key)
        elif name == "seeds":
            exp[name] = parse_seeds(value)
        elif name == "dims":
            exp[name] = _parse_ints(value)
        else:
            exp[name] = _coerce(value, _EXPERIMENT_TYPES[name], key)
    try:
        return ExperimentConfig(escort=EscortConfig(**esc), **exp)
    except ContractError as exc:
        raise ConfigError(f"escort: {exc}") from None


def read_ini(text: str) -> dict[str, str]:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from None
    out = {}
    for section in parser.sections():
        if section not in ("experiment", "escort"):
            raise ConfigError(f"unknown section [{section}]")
        for key, value in parser.items(section):
            out[f"{section}.{key}"] = value
    return out


def parse_override(item: str) -> tuple[str, str]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, value = item.split("=", 1)
    section, name = _resolve_key(key)
    return f"{section}.{name}", value.strip()


BUNDLED = SUITES + ("profile",)


def builtin_config_text(name: str) -> str:
    """Text of a bundled config: one per suite plus ``profile``."""
    if name not in BUNDLED:
        raise ConfigError(f"no bundled config {name!r}")
    return resources.files("escort.bench").joinpath("configs", f"{name}.ini").read_text()


def load_config(
    path=None, suite: str | None = None, overrides=(), seeds: int | None = None, bundled: str | None = None
) -> ExperimentConfig:
    """Read ``path`` (or a bundled config) and apply overrides.

    Without ``path`` the bundled config named ``bundled`` (default: the
    suite's own) is used. A given ``suite`` must agree with the file.
    ``seeds`` is the ``--seeds N`` shortcut for ``seeds = 0..N-1``.
    """
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from None
    else:
        text = builtin_config_text(bundled or suite or "synthetic")
    settings = read_ini(text)
    if suite is not None:
        file_suite = settings.get("experiment.suite", suite)
        if file_suite != suite:
            raise ConfigError(f"config is for suite {file_suite!r}, not {suite!r}")
        settings["experiment.suite"] = suite
    if seeds is not None:
        if seeds < 1:
            raise ConfigError("--seeds must be positive")
        settings["experiment.seeds"] = f"0-{seeds - 1}"
    for item in overrides:
        key, value = parse_override(item)
        settings[key] = value
    return build_config(settings)
