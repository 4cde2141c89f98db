"""Downstream heads, metrics and the training loop."""

from .heads import CnnHead, FcnHead, load_head, save_head
from .metrics import MetricsReport, evaluate_predictions
from .train import Adam, TrainConfig, cross_entropy, evaluate, predict, train

__all__ = [
    "Adam",
    "CnnHead",
    "FcnHead",
    "MetricsReport",
    "TrainConfig",
    "cross_entropy",
    "evaluate",
    "evaluate_predictions",
    "load_head",
    "predict",
    "save_head",
    "train",
]
