"""Assembling examples and reproducible dataset splits."""

import logging
from typing import List, Optional

import numpy as np

from gated_grounder.config import GrammarConfig, RunConfig, SceneConfig
from gated_grounder.errors import GenerationError
from gated_grounder.models import Example
from gated_grounder.synth.expressions import generate_expression
from gated_grounder.synth.scenes import generate_scene, jitter_boxes

logger = logging.getLogger(__name__)

# Scene seeds fit a signed 64-bit integer.
SEED_MASK = (1 << 63) - 1


def derive_seed(*entropy: int) -> int:
    """One non-negative 63-bit seed mixed from the given integers."""
    state = np.random.SeedSequence(list(entropy)).generate_state(1, np.uint64)[0]
    return int(state) & SEED_MASK


def generate_example(scene_config: SceneConfig, grammar: GrammarConfig, seed: int) -> Example:
    """Scene, expression on the true geometry, then detector jitter.

    If no unique expression exists the scene is resampled from a derived
    seed; `Scene.seed` records the seed actually used.

    Raises:
        GenerationError: If every scene attempt fails
    """
    for attempt in range(grammar.max_scene_attempts):
        scene_seed = seed if attempt == 0 else derive_seed(seed, attempt)
        scene = generate_scene(scene_config, scene_seed)
        expression_seed, jitter_seed = (
            int(s) for s in np.random.SeedSequence(scene_seed).generate_state(2, np.uint64)
        )
        try:
            _, truth = generate_expression(scene, grammar, expression_seed)
        except GenerationError as e:
            logger.debug("Resampling scene for seed %d: %s", seed, e)
            continue
        return Example(scene=jitter_boxes(scene, scene_config.box_jitter, jitter_seed), truth=truth)

    raise GenerationError(
        f"Seed {seed}: no usable scene after {grammar.max_scene_attempts} attempts"
    )


def generate_split(config: RunConfig, split: str, size: Optional[int] = None) -> List[Example]:
    """Generate one split; item i uses a seed derived from (split seed, i).

    Args:
        config: Run configuration
        split: train, val or test
        size: Number of examples (default: the configured split size)

    Returns:
        Examples in index order
    """
    split_seed = config.split_seed(split)
    size = config.split_size(split) if size is None else size
    examples = [
        generate_example(config.scene, config.grammar, derive_seed(split_seed, i))
        for i in range(size)
    ]
    logger.info("Generated %d %s examples from seed %d", len(examples), split, split_seed)
    return examples


def find_example(
    scene_config: SceneConfig, grammar: GrammarConfig, seed: int, clauses: int, max_tries: int = 200
) -> Example:
    """First example from seeds derived from `seed` whose expression has `clauses` clauses.

    Raises:
        GenerationError: If none of `max_tries` seeds yields such an example
    """
    for i in range(max_tries):
        try:
            example = generate_example(scene_config, grammar, derive_seed(seed, i))
        except GenerationError:
            continue
        if example.truth.expression.count(" and ") + 1 == clauses:
            return example
    raise GenerationError(f"No {clauses}-clause example within {max_tries} seeds")
