"""Evaluation Stage - scores a parameter snapshot on a split."""

import logging
from typing import Any, Dict, List, Sequence, Tuple

from gated_grounder.base_stage import BaseStage
from gated_grounder.matching.metrics import evaluate
from gated_grounder.model import GroundingModel
from gated_grounder.models import Example, Metrics, Prediction, ReasoningTrace, StageMessage

logger = logging.getLogger(__name__)


def evaluate_model(
    model: GroundingModel, examples: Sequence[Example], split: str, epoch: int = 0
) -> Tuple[Metrics, List[Prediction], List[ReasoningTrace]]:
    """Run the model on every example without updating it.

    Args:
        model: Model (its store is only read)
        examples: Examples to score
        split: Split name for the metrics
        epoch: Epoch recorded in the metrics

    Returns:
        (metrics, predictions, traces)
    """
    predictions, traces, losses_ce, losses_reg = [], [], [], []
    for example in examples:
        result = model.forward(example)
        predictions.append(result.prediction)
        losses_ce.append(result.loss_ce)
        losses_reg.append(result.loss_reg)
        traces.append(
            ReasoningTrace(
                expression=example.truth.expression,
                steps=result.reasoning.traces(),
                prediction=result.prediction,
            )
        )
    metrics = evaluate(
        predictions,
        [e.truth for e in examples],
        split,
        epoch,
        losses_ce=losses_ce,
        losses_reg=losses_reg,
    )
    return metrics, predictions, traces


class EvaluationStage(BaseStage):
    """Stage responsible for evaluation and trace dumps."""

    def __init__(self):
        """Initialize the Evaluation Stage."""
        super().__init__("EvaluationStage")

    def process(self, message: StageMessage) -> Dict[str, Any]:
        """Evaluate a model on a split.

        Args:
            message: Message with "model", "examples", "split" and optional
                "epoch" and "trace" (write per-item trace CSVs)

        Returns:
            Dictionary with metrics, predictions and trace file paths
        """
        model: GroundingModel = message.data["model"]
        examples = message.data["examples"]
        split = message.data.get("split", "test")
        epoch = message.data.get("epoch", 0)

        metrics, predictions, traces = evaluate_model(model, examples, split, epoch)
        logger.info(
            "%s: Acc@0.5 %.4f (raw %.4f), mean IoU %.4f over %d examples",
            split, metrics.acc_at_0_5, metrics.acc_raw_box, metrics.mean_iou, metrics.count,
        )
        flagged = sum(1 for p in predictions if p.degenerate_nodes)
        if flagged:
            logger.warning("%s: %d examples had zero-norm matching scores", split, flagged)

        trace_files = []
        if message.data.get("trace"):
            writer = self.require_tool("metrics_writer")
            for i, trace in enumerate(traces):
                trace_files.append(writer.write_trace(f"traces/{split}_{i:04d}", trace.steps))

        return {
            "phase": "evaluation",
            "status": "completed",
            "metrics": metrics,
            "predictions": predictions,
            "traces": traces,
            "trace_files": trace_files,
        }
