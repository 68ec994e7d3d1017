"""Acc@0.5 and IoU aggregates over predictions."""

from typing import Optional, Sequence

import numpy as np

from gated_grounder.matching.boxes import iou
from gated_grounder.models import GroundTruth, Metrics, Prediction

HIT_THRESHOLD = 0.5


def evaluate(
    predictions: Sequence[Prediction],
    truths: Sequence[GroundTruth],
    split: str,
    epoch: int = 0,
    losses_ce: Optional[Sequence[float]] = None,
    losses_reg: Optional[Sequence[float]] = None,
) -> Metrics:
    """Aggregate predictions into split metrics.

    A prediction is a hit when IoU(box, b_GT) > 0.5, checked for both the
    refined box and the selected detector box.

    Args:
        predictions: One per example
        truths: Matching ground truths
        split: Split name recorded in the metrics
        epoch: Epoch recorded in the metrics
        losses_ce: Per-example matching losses (optional)
        losses_reg: Per-example regression losses (optional)

    Returns:
        Metrics
    """
    if len(predictions) != len(truths):
        raise ValueError(f"{len(predictions)} predictions for {len(truths)} ground truths")
    if not predictions:
        return Metrics(
            epoch=epoch, split=split, acc_at_0_5=0.0, acc_raw_box=0.0,
            mean_iou=0.0, mean_iou_raw=0.0, count=0,
        )
    refined = np.array([iou(p.refined_box, t.target_box) for p, t in zip(predictions, truths)])
    raw = np.array([iou(p.raw_box, t.target_box) for p, t in zip(predictions, truths)])
    return Metrics(
        epoch=epoch,
        split=split,
        loss_ce=float(np.mean(losses_ce)) if losses_ce else 0.0,
        loss_reg=float(np.mean(losses_reg)) if losses_reg else 0.0,
        acc_at_0_5=float(np.mean(refined > HIT_THRESHOLD)),
        acc_raw_box=float(np.mean(raw > HIT_THRESHOLD)),
        mean_iou=float(refined.mean()),
        mean_iou_raw=float(raw.mean()),
        count=len(predictions),
    )
