"""EM classification of radar clutter snapshots into homogeneous classes."""

from .em import (
    ClassCollapseError,
    FitConfig,
    FitResult,
    MOSRule,
    classify,
    e_step,
    estimate_ranks,
    log_likelihood,
    m_step_general,
    m_step_lowrank,
    m_step_scaled,
    run_em,
    update_priors,
)
from .estimator import ClutterEM
from .evaluation import BenchmarkReport, classification_error, monte_carlo, rmsce
from .initialization import init_params
from .params import General, LowRankNoise, MixtureParams, ScaledCommon
from .scenario import (
    ScenarioConfig,
    ar1_scenario,
    covar_ar1,
    covar_patches,
    generate,
    patch_scenario,
    steering_vector,
)

__version__ = "0.1.0"

__all__ = [
    "BenchmarkReport",
    "ClassCollapseError",
    "ClutterEM",
    "FitConfig",
    "FitResult",
    "General",
    "LowRankNoise",
    "MOSRule",
    "MixtureParams",
    "ScaledCommon",
    "ScenarioConfig",
    "ar1_scenario",
    "classification_error",
    "classify",
    "covar_ar1",
    "covar_patches",
    "e_step",
    "estimate_ranks",
    "generate",
    "init_params",
    "log_likelihood",
    "m_step_general",
    "m_step_lowrank",
    "m_step_scaled",
    "monte_carlo",
    "patch_scenario",
    "rmsce",
    "run_em",
    "steering_vector",
    "update_priors",
]
