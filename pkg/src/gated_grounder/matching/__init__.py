"""Matching scores, box regression, losses and metrics."""

from gated_grounder.matching.boxes import iou, iou_to_all
from gated_grounder.matching.heads import (
    match_scores,
    matching_loss,
    matching_probabilities,
    refine_box,
    regression_loss,
    select_node,
    total_loss,
    training_target,
)
from gated_grounder.matching.metrics import evaluate

__all__ = [
    "evaluate",
    "iou",
    "iou_to_all",
    "match_scores",
    "matching_loss",
    "matching_probabilities",
    "refine_box",
    "regression_loss",
    "select_node",
    "total_loss",
    "training_target",
]
