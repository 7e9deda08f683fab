"""pairrank: pairwise ordinal ranking from side-by-side human judgments.

The package learns a per-item latent score (mean and deviation) plus shared
ordinal decision boundaries from K-way pair judgments, optionally
personalized per judge, and ships the surrounding machinery: a swiss
tournament pair sampler, dataset formats, evaluation metrics, a synthetic
judge oracle, a labeling HTTP service, and a CLI.
"""

from .model import (
    BoundarySet,
    JudgeTable,
    LabelDistribution,
    ModelParams,
    PairBatch,
    PairScoreDiff,
    RankHead,
    ScoreDistribution,
    cost_and_gradients,
    darn_cost,
    darn_v2_cost,
    forward,
    pair_label_probs,
    predict_label,
    predict_label_v2,
)
from .training import Checkpoint, TrainConfig, evaluate_loss, init_params, train

__version__ = "0.1.0"

__all__ = [
    "BoundarySet",
    "Checkpoint",
    "JudgeTable",
    "LabelDistribution",
    "ModelParams",
    "PairBatch",
    "PairScoreDiff",
    "RankHead",
    "ScoreDistribution",
    "TrainConfig",
    "cost_and_gradients",
    "darn_cost",
    "darn_v2_cost",
    "evaluate_loss",
    "forward",
    "init_params",
    "pair_label_probs",
    "predict_label",
    "predict_label_v2",
    "train",
]
