"""Bandit-weighted online ensemble learning with runtime accuracy-bound checks."""

from .bandit import (
    EnsembleState,
    Principle,
    estimated_rewards,
    expert_rewards,
    gamma_for,
    realized_rewards,
    select_action,
)
from .bounds import BoundLedger, BoundReport, exp4_regret_term, regret_term
from .drift import DriftMonitor, DriftStatus
from .learners import (
    AdviceMode,
    IncrementalGaussianNB,
    RandomFeatureLinearLearner,
    advice_of,
)
from .model import BanditEnsemble, LabelGate, PredictionRecord, RunResult, run_stream
from .streams import StreamSample, StreamSpec, export_csv, generate, ingest_csv

__version__ = "0.1.0"

__all__ = [
    "AdviceMode",
    "BanditEnsemble",
    "BoundLedger",
    "BoundReport",
    "DriftMonitor",
    "DriftStatus",
    "EnsembleState",
    "IncrementalGaussianNB",
    "LabelGate",
    "PredictionRecord",
    "Principle",
    "RandomFeatureLinearLearner",
    "RunResult",
    "StreamSample",
    "StreamSpec",
    "advice_of",
    "estimated_rewards",
    "exp4_regret_term",
    "expert_rewards",
    "export_csv",
    "gamma_for",
    "generate",
    "ingest_csv",
    "realized_rewards",
    "regret_term",
    "run_stream",
    "select_action",
]
