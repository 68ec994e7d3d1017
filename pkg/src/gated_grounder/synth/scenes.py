"""Synthetic scenes: candidate objects standing in for detector output."""

import logging
from functools import lru_cache

import numpy as np

from gated_grounder.config import SceneConfig
from gated_grounder.errors import ConfigurationError
from gated_grounder.models import CandidateObject, Scene

logger = logging.getLogger(__name__)

# Smallest extent a jittered box may shrink to.
MIN_EXTENT = 1e-3
# Jittered boxes stay inside this window.
BOX_LOW, BOX_HIGH = -0.25, 1.25


@lru_cache(maxsize=8)
def _projection(seed: int, num_categories: int, num_colors: int, dim: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    fan_in = num_categories + num_colors + 4
    projection = rng.standard_normal((dim, fan_in)) / np.sqrt(fan_in)
    projection.setflags(write=False)
    return projection


def descriptor_projection(config: SceneConfig) -> np.ndarray:
    """Fixed random projection shared by every scene of a config.

    Maps one-hot category, one-hot color and the box to D_v dimensions.
    """
    return _projection(
        config.projection_seed, config.num_categories, config.num_colors, config.descriptor_dim
    )


def _validate(config: SceneConfig) -> None:
    if config.num_objects < 2 or config.num_objects > 64:
        raise ConfigurationError(f"num_objects must be in [2, 64], got {config.num_objects}")
    if config.num_categories < 2 or config.num_colors < 2:
        raise ConfigurationError("category and color vocabularies need at least 2 entries")
    if config.descriptor_dim < 8:
        raise ConfigurationError(f"descriptor_dim must be >= 8, got {config.descriptor_dim}")
    if config.distractor_count > config.num_objects - 1:
        raise ConfigurationError("distractor_count must be below num_objects")


def synthesize_descriptor(
    config: SceneConfig, category: int, color: int, box: np.ndarray, noise: np.ndarray
) -> np.ndarray:
    """Project (one-hot category, one-hot color, box) and add scaled noise."""
    features = np.concatenate(
        [np.eye(config.num_categories)[category], np.eye(config.num_colors)[color], box]
    )
    return descriptor_projection(config) @ features + config.descriptor_noise * noise


def generate_scene(config: SceneConfig, seed: int) -> Scene:
    """Generate K candidate objects with non-degenerate boxes.

    Args:
        config: Scene parameters
        seed: Generation seed

    Returns:
        Scene with a uniformly drawn target and `distractor_count` objects
        sharing the target's category

    Raises:
        ConfigurationError: If the config is out of range
    """
    _validate(config)
    rng = np.random.default_rng(seed)
    k = config.num_objects

    target = int(rng.integers(k))
    target_category = int(rng.integers(config.num_categories))
    others = [i for i in range(k) if i != target]
    distractors = set(rng.choice(others, size=config.distractor_count, replace=False).tolist())

    categories = np.empty(k, dtype=np.int64)
    # Non-distractors never share the target's category, so the count is exact.
    alternatives = [c for c in range(config.num_categories) if c != target_category]
    for i in range(k):
        if i == target or i in distractors:
            categories[i] = target_category
        else:
            categories[i] = alternatives[int(rng.integers(len(alternatives)))]
    colors = rng.integers(config.num_colors, size=k)

    sizes = rng.uniform(config.min_size, config.max_size, size=(k, 2))
    centers = rng.uniform(sizes / 2, 1.0 - sizes / 2)
    noise = rng.standard_normal((k, config.descriptor_dim))

    objects = []
    for i in range(k):
        box = np.concatenate([centers[i], sizes[i]])
        descriptor = synthesize_descriptor(
            config, int(categories[i]), int(colors[i]), box, noise[i]
        )
        objects.append(
            CandidateObject(
                id=i,
                box=box.tolist(),
                descriptor=descriptor.tolist(),
                category=int(categories[i]),
                color=int(colors[i]),
            )
        )
    return Scene(objects=objects, target_id=target, seed=seed)


def jitter_boxes(scene: Scene, noise: float, seed: int) -> Scene:
    """Perturb every box in proportion to its size.

    Centers move by `noise` times the box extent per axis (Gaussian) and
    extents are scaled by exp(noise * Gaussian), so small and large boxes
    lose a similar share of their overlap. Boxes are clipped to the
    [-0.25, 1.25] window. Descriptors are left untouched.

    Args:
        scene: Scene with the true geometry
        noise: Noise scale (0 returns an identical copy)
        seed: Noise seed

    Returns:
        New scene with perturbed boxes
    """
    if noise < 0:
        raise ConfigurationError(f"noise must be >= 0, got {noise}")
    if noise == 0:
        return scene.model_copy(deep=True)

    rng = np.random.default_rng(seed)
    boxes = scene.boxes()
    eps = rng.standard_normal((scene.num_objects, 4))
    boxes[:, :2] += noise * boxes[:, 2:] * eps[:, :2]
    boxes[:, 2:] *= np.exp(noise * eps[:, 2:])
    boxes[:, 2:] = np.clip(boxes[:, 2:], MIN_EXTENT, BOX_HIGH - BOX_LOW)
    half = boxes[:, 2:] / 2
    boxes[:, :2] = np.clip(boxes[:, :2], BOX_LOW + half, BOX_HIGH - half)

    objects = [
        obj.model_copy(update={"box": boxes[i].tolist()}) for i, obj in enumerate(scene.objects)
    ]
    return Scene(objects=objects, target_id=scene.target_id, seed=scene.seed)
