"""Synthetic scenes, expressions and datasets."""

from gated_grounder.synth.dataset import derive_seed, find_example, generate_example, generate_split
from gated_grounder.synth.expressions import (
    ChunkSpec,
    ClauseSpec,
    generate_expression,
    matching_objects,
    replay_expression,
    satisfies_clause,
)
from gated_grounder.synth.relations import relation_holds
from gated_grounder.synth.scenes import generate_scene, jitter_boxes

__all__ = [
    "ChunkSpec",
    "ClauseSpec",
    "derive_seed",
    "find_example",
    "generate_example",
    "generate_expression",
    "generate_scene",
    "generate_split",
    "jitter_boxes",
    "matching_objects",
    "relation_holds",
    "replay_expression",
    "satisfies_clause",
]
