"""POMDP environments and the static-density driver."""
from .base import EnvModel, data_hash, layout_data
from .kidnapped import KidnappedRobot
from .lightdark import LightDark
from .static import StaticTargetEnv
from .tracking import MultiTargetTracking

ENVS = {"lightdark": LightDark, "kidnapped": KidnappedRobot, "tracking": MultiTargetTracking}


def make_env(name: str) -> EnvModel:
    try:
        return ENVS[name]()
    except KeyError:
        raise KeyError(f"unknown environment {name!r}; choose from {sorted(ENVS)}") from None


def env_names() -> list[str]:
    return list(ENVS)


__all__ = [
    "ENVS",
    "EnvModel",
    "KidnappedRobot",
    "LightDark",
    "MultiTargetTracking",
    "StaticTargetEnv",
    "data_hash",
    "env_names",
    "layout_data",
    "make_env",
]
