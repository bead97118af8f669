"""CT-graph confounding POMDP benchmark and the modulated-Hebbian-plus-Q agent."""

from .ctgraph import (
    CTGraphConfig,
    CTGraphEnv,
    HiddenState,
    ObsMode,
    StateKind,
    StepResult,
    estimate_random_policy_success,
    random_policy_success_prob,
)
from .config import AgentConfig, ExperimentConfig, MohnConfig, RunConfig, load_config
from .errors import ConfigError, NumericError

__version__ = "0.1.0"

__all__ = [
    "CTGraphConfig",
    "CTGraphEnv",
    "HiddenState",
    "ObsMode",
    "StateKind",
    "StepResult",
    "random_policy_success_prob",
    "estimate_random_policy_success",
    "AgentConfig",
    "ExperimentConfig",
    "MohnConfig",
    "RunConfig",
    "load_config",
    "ConfigError",
    "NumericError",
    "__version__",
]
