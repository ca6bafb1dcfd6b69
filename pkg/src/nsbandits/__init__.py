"""Recurrent and feedforward neural-linear posterior sampling for
non-stationary contextual bandits, with conventional non-stationary
baselines and a benchmarking harness."""

from .agents import EnvInfo, NeuralLinearConfig, PolicySpec, make_policy
from .envs import EnvSpec, make_env
from .harness import TrialRecord, aggregate, grid_search, run_trial

__all__ = [
    "EnvInfo",
    "EnvSpec",
    "NeuralLinearConfig",
    "PolicySpec",
    "TrialRecord",
    "aggregate",
    "grid_search",
    "make_env",
    "make_policy",
    "run_trial",
]
