"""Weakly-supervised boosting with localized base learners, a learned
conditional source gate and estimate-then-modify weight correction."""

from .datamodel import (
    ABSTAIN,
    CleanSet,
    Instance,
    LabelSpace,
    MatchMatrix,
    ValidationError,
    WeakLabeledSet,
    build_match_matrix,
    majority_vote,
    weighted_vote,
)
from .boost import (
    BoostConfig,
    Ensemble,
    HardMatchGate,
    LearnedGate,
    UniformGate,
    ensemble_predict,
    ensemble_scores,
    prop1_counterexample,
    run_ablation,
    run_localboost,
)
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = [
    "ABSTAIN",
    "BoostConfig",
    "CleanSet",
    "Ensemble",
    "HardMatchGate",
    "Instance",
    "KERNEL_BACKEND",
    "LabelSpace",
    "LearnedGate",
    "MatchMatrix",
    "UniformGate",
    "ValidationError",
    "WeakLabeledSet",
    "build_match_matrix",
    "ensemble_predict",
    "ensemble_scores",
    "majority_vote",
    "prop1_counterexample",
    "run_ablation",
    "run_localboost",
    "weighted_vote",
]
