"""Probabilistic models of pulse-coupled oscillator synchronisation."""
from .dtmc import INIT, BudgetExceeded, ModelError, RewardStructure, SparseDtmc
from .params import ModelParams, ParamsError, PhaseResponseFunction, params_from_dict, validate
from .population import build_population_dtmc
from .reduction import build_reduced_dtmc, reduced_state_count, transform_rewards
from .concrete import build_concrete_dtmc
from .abstraction import check_correspondence

__all__ = [
    "INIT", "BudgetExceeded", "ModelError", "RewardStructure", "SparseDtmc",
    "ModelParams", "ParamsError", "PhaseResponseFunction", "params_from_dict", "validate",
    "build_population_dtmc", "build_reduced_dtmc", "reduced_state_count", "transform_rewards",
    "build_concrete_dtmc", "check_correspondence",
]
