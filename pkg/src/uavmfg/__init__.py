"""Ultra-dense UAV downlink simulator and mean-field RL toolkit.

A desk-scale model of solar-powered UAV base stations serving bursty ground
users, plus the learning machinery to find the population's mean-field
equilibrium: a two-step fixed-point iteration whose best-response step is a
maximum-entropy deep Q-learner (with hard-max baselines and a partially
observable variant).
"""

__version__ = "0.1.0"

from .config import (ConfigError, ConfigParseError, ConfigSchemaError,
                     ConfigUnitError, ExperimentConfig, desk_scale_config,
                     load_config, save_config, with_overrides)
from .env import RepresentativeEnv, SimModel, World, step_world
from .meanfield import (EquilibriumReport, MeanField, distance,
                        empirical_meanfield, solve_equilibrium)
from .softq import (QPolicy, ReplayBuffer, TrainerConfig, TrainingDiverged,
                    soft_policy, soft_value, tabular_soft_value_iteration,
                    train_best_response)

__all__ = [
    "ConfigError", "ConfigParseError", "ConfigSchemaError", "ConfigUnitError",
    "ExperimentConfig", "desk_scale_config", "load_config", "save_config",
    "with_overrides", "RepresentativeEnv", "SimModel", "World", "step_world",
    "EquilibriumReport", "MeanField", "distance", "empirical_meanfield",
    "solve_equilibrium", "QPolicy", "ReplayBuffer", "TrainerConfig",
    "TrainingDiverged", "soft_policy", "soft_value",
    "tabular_soft_value_iteration", "train_best_response", "__version__",
]
