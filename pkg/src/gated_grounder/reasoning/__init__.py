"""Dynamic gating and gated message passing over the bimodal graphs."""

from gated_grounder.reasoning.dgc import (
    ReasoningResult,
    StepState,
    SubGraph,
    apply_gate,
    build_sub_graphs,
    correlation_scores,
    edge_weights,
    message_pass,
    node_weights,
    reason,
)

__all__ = [
    "ReasoningResult",
    "StepState",
    "SubGraph",
    "apply_gate",
    "build_sub_graphs",
    "correlation_scores",
    "edge_weights",
    "message_pass",
    "node_weights",
    "reason",
]
