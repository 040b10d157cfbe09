"""Particle belief approximation with Stein variational updates, correlation-aware
projections and sliced-Wasserstein temporal consistency."""
from .belief import EscortConfig, FilterState, escort_update, init_state, sir_update
from .catalog import benchmark_catalog, target_names
from .errors import ConfigError, ContractError, NumericalError
from .numkit import ParticleSet
from .targets import GmmSpec, fd_score, gmm_sample

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ContractError",
    "EscortConfig",
    "FilterState",
    "GmmSpec",
    "NumericalError",
    "ParticleSet",
    "benchmark_catalog",
    "escort_update",
    "fd_score",
    "gmm_sample",
    "init_state",
    "sir_update",
    "target_names",
]
