"""Cross-graph matching, the matching loss and expression-guided regression."""

import logging
from typing import Tuple

import numpy as np

from gated_grounder.autodiff import ops
from gated_grounder.autodiff.tape import Tape, Var
from gated_grounder.matching.boxes import iou_to_all
from gated_grounder.models import GroundTruth, Scene

logger = logging.getLogger(__name__)


def match_scores(features: Var, q: Var, graph: str, tape: Tape) -> Tuple[Var, np.ndarray]:
    """Cosine between W_v v_i(T) and W_q q for every node.

    Args:
        features: (K, D_g) final node features
        q: Whole-expression embedding
        graph: "visual" or "categorical"
        tape: Tape bound to the parameter store

    Returns:
        (scores in [-1, 1], boolean flags marking zero-norm projections)
    """
    projected = ops.linear(features, tape.param(f"{graph}.W_v"))
    query = ops.linear(q, tape.param("match.W_q"))
    degenerate = np.linalg.norm(projected.value, axis=1) == 0.0
    if np.linalg.norm(query.value) == 0.0:
        degenerate[:] = True
    if degenerate.any():
        logger.debug(
            "Zero-norm projection on %s graph for nodes %s",
            graph,
            np.flatnonzero(degenerate).tolist(),
        )
    return ops.cosine_rows(projected, query), degenerate


def matching_probabilities(scores_visual: np.ndarray, scores_categorical: np.ndarray) -> np.ndarray:
    """P_i = softmax(theta_a + theta_c)_i, max-subtracted."""
    combined = np.asarray(scores_visual, dtype=np.float64) + np.asarray(
        scores_categorical, dtype=np.float64
    )
    e = np.exp(combined - combined.max())
    return e / e.sum()


def matching_loss(combined: Var, target: int) -> Var:
    """-log P at the ground-truth index."""
    return ops.neg_log_softmax(combined, target)


def select_node(scores_visual: np.ndarray, scores_categorical: np.ndarray) -> int:
    """argmax of the combined scores, lowest index on ties."""
    return int(np.argmax(np.asarray(scores_visual) + np.asarray(scores_categorical)))


def refine_box(feature_visual: Var, feature_categorical: Var, q: Var, tape: Tape) -> Var:
    """Two-layer perceptron over [v_a; v_c; q] predicting an absolute box."""
    hidden = ops.tanh(
        ops.add(
            ops.linear(ops.concat([feature_visual, feature_categorical, q]), tape.param("egr.W1")),
            tape.param("egr.b1"),
        )
    )
    return ops.add(ops.linear(hidden, tape.param("egr.W2")), tape.param("egr.b2"))


def regression_loss(predicted: Var, target_box) -> Var:
    return ops.smooth_l1(predicted, np.asarray(target_box, dtype=np.float64), knee=1.0)


def total_loss(ce: Var, reg: Var) -> Var:
    """L = L_CE + L_reg."""
    return ops.add(ce, reg)


def training_target(scene: Scene, truth: GroundTruth) -> int:
    """Node trained towards: the annotated target, unless jitter moved
    another candidate strictly closer (by IoU) to the true box."""
    overlaps = iou_to_all(scene.boxes(), truth.target_box)
    best = int(np.argmax(overlaps))
    if overlaps[best] > overlaps[truth.target_id]:
        return best
    return truth.target_id
