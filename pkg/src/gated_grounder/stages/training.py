"""Training Stage - mini-batch Adam over the training split."""

import logging
import math
from typing import Any, Dict, List, Sequence

import numpy as np

from gated_grounder.autodiff.adam import AdamState, adam_step
from gated_grounder.base_stage import BaseStage
from gated_grounder.config import AdamConfig, RunConfig
from gated_grounder.matching.metrics import evaluate
from gated_grounder.model import GroundingModel
from gated_grounder.models import Example, Metrics, StageMessage
from gated_grounder.stages.evaluation import evaluate_model
from gated_grounder.synth.dataset import derive_seed

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.csv"


def epoch_order(config: RunConfig, epoch: int, size: int) -> np.ndarray:
    """Shuffled example order of one epoch, fixed by (seed, epoch)."""
    return np.random.default_rng(derive_seed(config.seed, epoch)).permutation(size)


def epoch_learning_rate(hyper: AdamConfig, epoch: int) -> float:
    """Step size of a 1-based epoch; cosine runs end at lr_floor * learning_rate."""
    if hyper.lr_schedule == "constant" or hyper.epochs == 1:
        return hyper.learning_rate
    progress = (epoch - 1) / (hyper.epochs - 1)
    decay = hyper.lr_floor + (1.0 - hyper.lr_floor) * 0.5 * (1.0 + math.cos(math.pi * progress))
    return hyper.learning_rate * decay


def gates_open(config: RunConfig, epoch: int) -> bool:
    """True while a DGC run is still in its open-gate warm-up."""
    return config.ablation.dgc and epoch <= config.optimizer.gate_warmup_epochs


def train_epoch(
    model: GroundingModel, examples: Sequence[Example], state: AdamState, epoch: int
) -> Metrics:
    """One pass of mini-batch Adam; metrics come from the forward passes taken.

    Args:
        model: Model whose store is updated in place
        examples: Training examples
        state: Adam moments, updated in place
        epoch: 1-based epoch number

    Returns:
        Training-split metrics of this epoch
    """
    hyper = model.config.optimizer
    order = epoch_order(model.config, epoch, len(examples))
    lr = epoch_learning_rate(hyper, epoch)
    open_gates = gates_open(model.config, epoch)
    predictions, truths, losses_ce, losses_reg = [], [], [], []

    for start in range(0, len(order), hyper.batch_size):
        batch = [examples[i] for i in order[start:start + hyper.batch_size]]
        _, results = model.forward_and_tape(batch, open_gates=open_gates)
        adam_step(model.store, model.gradients(results), state, hyper, learning_rate=lr)
        for example, result in zip(batch, results):
            predictions.append(result.prediction)
            truths.append(example.truth)
            losses_ce.append(result.loss_ce)
            losses_reg.append(result.loss_reg)

    return evaluate(predictions, truths, "train", epoch, losses_ce=losses_ce, losses_reg=losses_reg)


class TrainingStage(BaseStage):
    """Stage responsible for optimizing the model parameters."""

    def __init__(self):
        """Initialize the Training Stage."""
        super().__init__("TrainingStage")

    def process(self, message: StageMessage) -> Dict[str, Any]:
        """Train for the configured number of epochs.

        A checkpoint is written after every epoch and one train row plus one
        val row (when a val split exists) are appended to the metrics file.

        Args:
            message: Message with "model", "train" and optional "val" examples

        Returns:
            Dictionary with metrics history, metrics path and last checkpoint

        Raises:
            NumericError: If a loss, gradient or update becomes non-finite
        """
        model: GroundingModel = message.data["model"]
        train: List[Example] = message.data["train"]
        val: List[Example] = message.data.get("val") or []
        config = model.config
        checkpoints = self.require_tool("checkpoint_store")
        writer = self.require_tool("metrics_writer")

        metrics_path = writer.start_metrics(METRICS_FILE, config.config_hash())
        state = AdamState()
        history: List[Metrics] = []
        saved: Dict[str, str] = {}

        for epoch in range(1, config.optimizer.epochs + 1):
            train_metrics = train_epoch(model, train, state, epoch)
            writer.append_metrics(metrics_path, train_metrics)
            history.append(train_metrics)
            loss = train_metrics.loss_ce + train_metrics.loss_reg
            line = (
                f"epoch {epoch}/{config.optimizer.epochs}: loss {loss:.4f}"
                f" train Acc@0.5 {train_metrics.acc_at_0_5:.4f}"
                f" lr {epoch_learning_rate(config.optimizer, epoch):.2e}"
            )
            if gates_open(config, epoch):
                line += " (gates open)"
            if val:
                val_metrics, _, _ = evaluate_model(model, val, "val", epoch)
                writer.append_metrics(metrics_path, val_metrics)
                history.append(val_metrics)
                line += f" val Acc@0.5 {val_metrics.acc_at_0_5:.4f}"
            logger.info(line)
            saved = checkpoints.save(model.store, config.config_hash(), config.model_hash(), epoch)

        return {
            "phase": "training",
            "status": "completed",
            "history": history,
            "metrics_path": str(metrics_path),
            "checkpoint": saved.get("latest"),
        }
