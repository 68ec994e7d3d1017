"""Tests for scene, expression and split generation."""

import numpy as np
import pytest

from gated_grounder.config import GrammarConfig, SceneConfig
from gated_grounder.errors import ConfigurationError, GenerationError
from gated_grounder.matching.boxes import iou
from gated_grounder.models import CandidateObject, Scene
from gated_grounder.synth.dataset import (
    SEED_MASK,
    derive_seed,
    find_example,
    generate_example,
    generate_split,
)
from gated_grounder.synth.expressions import (
    ChunkSpec,
    ClauseSpec,
    generate_expression,
    matching_objects,
    render,
    replay_expression,
    satisfies_clause,
)
from gated_grounder.synth.relations import relation_holds
from gated_grounder.synth.scenes import descriptor_projection, generate_scene, jitter_boxes


def _object(i, box, category=0, color=0, dim=8):
    return CandidateObject(id=i, box=box, descriptor=[0.0] * dim, category=category, color=color)


def _first_expression(scene_config, grammar, seeds=range(200)):
    """(scene, text, truth) for the first seed that yields a unique expression."""
    for seed in seeds:
        scene = generate_scene(scene_config, seed)
        try:
            text, truth = generate_expression(scene, grammar, seed)
        except GenerationError:
            continue
        return scene, text, truth
    raise AssertionError("no seed produced an expression")


def test_scene_has_exact_distractor_count_and_valid_boxes():
    config = SceneConfig()
    for seed in range(20):
        scene = generate_scene(config, seed)
        assert scene.num_objects == config.num_objects
        target_category = scene.objects[scene.target_id].category
        same = sum(obj.category == target_category for obj in scene.objects)
        assert same == config.distractor_count + 1
        boxes = scene.boxes()
        assert np.all(boxes[:, 2:] >= config.min_size) and np.all(boxes[:, 2:] <= config.max_size)
        assert np.all(boxes[:, :2] - boxes[:, 2:] / 2 >= -1e-12)
        assert np.all(boxes[:, :2] + boxes[:, 2:] / 2 <= 1.0 + 1e-12)
        assert scene.descriptors().shape == (config.num_objects, config.descriptor_dim)


def test_scene_generation_is_deterministic():
    config = SceneConfig()
    assert generate_scene(config, 42) == generate_scene(config, 42)
    assert generate_scene(config, 42) != generate_scene(config, 43)


def test_out_of_range_scene_config_is_rejected():
    config = SceneConfig().model_copy(update={"num_objects": 65})
    with pytest.raises(ConfigurationError):
        generate_scene(config, 0)


def test_noise_free_descriptor_is_the_exact_projection():
    config = SceneConfig(descriptor_noise=0.0)
    scene = generate_scene(config, 5)
    projection = descriptor_projection(config)
    for obj in scene.objects:
        features = np.concatenate(
            [
                np.eye(config.num_categories)[obj.category],
                np.eye(config.num_colors)[obj.color],
                obj.box,
            ]
        )
        np.testing.assert_array_equal(obj.descriptor, projection @ features)


def test_jitter_moves_boxes_but_not_descriptors():
    scene = generate_scene(SceneConfig(), 3)
    jittered = jitter_boxes(scene, 0.05, seed=9)
    assert not np.array_equal(jittered.boxes(), scene.boxes())
    np.testing.assert_array_equal(jittered.descriptors(), scene.descriptors())
    assert np.all(jittered.boxes()[:, 2:] > 0.0)
    assert jitter_boxes(scene, 0.0, seed=9) == scene


def test_jitter_overlap_over_a_thousand_boxes():
    def mean_overlap(noise):
        overlaps = []
        for seed in range(125):
            scene = generate_scene(SceneConfig(), seed)
            jittered = jitter_boxes(scene, noise, seed=seed)
            for before, after in zip(scene.boxes(), jittered.boxes()):
                overlaps.append(iou(before, after))
        return float(np.mean(overlaps))

    small, large = mean_overlap(0.02), mean_overlap(0.05)
    assert 0.5 < large < small < 1.0


def test_jitter_keeps_extents_positive_under_large_noise():
    scene = generate_scene(SceneConfig(), 4)
    jittered = jitter_boxes(scene, 2.0, seed=1)
    assert np.all(jittered.boxes()[:, 2:] > 0.0)


@pytest.mark.parametrize(
    "relation, subject, anchor, expected",
    [
        ("left of", [0.2, 0.5, 0.1, 0.1], [0.5, 0.5, 0.1, 0.1], True),
        ("left of", [0.48, 0.5, 0.1, 0.1], [0.5, 0.5, 0.1, 0.1], False),
        ("right of", [0.8, 0.5, 0.1, 0.1], [0.5, 0.5, 0.1, 0.1], True),
        ("above", [0.5, 0.1, 0.1, 0.1], [0.5, 0.5, 0.1, 0.1], True),
        ("below", [0.5, 0.1, 0.1, 0.1], [0.5, 0.5, 0.1, 0.1], False),
        ("holding", [0.5, 0.5, 0.2, 0.2], [0.55, 0.55, 0.2, 0.2], True),
        ("holding", [0.1, 0.1, 0.1, 0.1], [0.9, 0.9, 0.1, 0.1], False),
    ],
)
def test_relation_predicates(relation, subject, anchor, expected):
    assert relation_holds(relation, np.array(subject), np.array(anchor), margin=0.05) is expected


def test_unknown_relation_raises():
    with pytest.raises(ValueError):
        relation_holds("beside", np.zeros(4), np.zeros(4), 0.05)


def test_clause_checker_on_hand_built_scene():
    grammar = GrammarConfig()
    scene = Scene(
        objects=[
            _object(0, [0.2, 0.5, 0.1, 0.1], category=0, color=0),
            _object(1, [0.8, 0.5, 0.1, 0.1], category=0, color=1),
            _object(2, [0.5, 0.5, 0.1, 0.1], category=1, color=2),
        ],
        target_id=0,
        seed=0,
    )
    clause = ClauseSpec(ChunkSpec("box"), "left of", ChunkSpec("ball"))
    assert satisfies_clause(scene, 0, clause, grammar)
    assert not satisfies_clause(scene, 1, clause, grammar)
    assert matching_objects(scene, [clause], grammar) == [0]
    # the color narrows a bare chunk to one object
    assert matching_objects(scene, [ClauseSpec(ChunkSpec("box", "blue"))], grammar) == [1]
    assert render([clause, clause]) == "box left of ball and box left of ball"


def test_generated_expressions_replay_to_the_target():
    scene_config, grammar = SceneConfig(), GrammarConfig()
    found = 0
    for seed in range(60):
        scene = generate_scene(scene_config, seed)
        try:
            text, truth = generate_expression(scene, grammar, seed)
        except GenerationError:
            continue
        found += 1
        assert truth.target_id == scene.target_id
        assert truth.target_box == scene.objects[scene.target_id].box
        assert replay_expression(scene, text, grammar) == [scene.target_id]
        clauses = text.count(" and ") + 1
        assert grammar.min_clauses <= clauses <= grammar.max_clauses
    assert found > 0


def test_ambiguous_scene_raises_generation_error():
    grammar = GrammarConfig(max_retries=5)
    twin = [0.5, 0.5, 0.2, 0.2]
    scene = Scene(objects=[_object(0, twin), _object(1, twin)], target_id=0, seed=0)
    with pytest.raises(GenerationError):
        generate_expression(scene, grammar, seed=1)


def test_expression_uses_only_the_grammar_vocabulary():
    grammar = GrammarConfig()
    _, text, _ = _first_expression(SceneConfig(), grammar)
    words = set(grammar.nouns) | set(grammar.colors) | {"and"}
    words |= {w for phrase in grammar.relations for w in phrase.split()}
    assert set(text.split()) <= words


def test_derive_seed_is_deterministic_and_non_negative():
    assert derive_seed(1, 2) == derive_seed(1, 2)
    assert derive_seed(1, 2) != derive_seed(2, 1)
    assert all(0 <= derive_seed(7, i) <= SEED_MASK for i in range(50))


def test_generate_example_records_the_seed_used(tiny_config):
    example = generate_example(tiny_config.scene, tiny_config.grammar, 5)
    again = generate_example(tiny_config.scene, tiny_config.grammar, 5)
    assert example == again
    regenerated = generate_scene(tiny_config.scene, example.scene.seed)
    np.testing.assert_array_equal(regenerated.descriptors(), example.scene.descriptors())
    target_box = regenerated.objects[regenerated.target_id].box
    assert example.truth.target_box == target_box


def test_splits_are_reproducible_and_distinct(tiny_config):
    train = generate_split(tiny_config, "train")
    assert len(train) == tiny_config.data.train_size
    assert train == generate_split(tiny_config, "train")
    test = generate_split(tiny_config, "test")
    assert {e.scene.seed for e in train}.isdisjoint({e.scene.seed for e in test})
    assert len(generate_split(tiny_config, "val", size=2)) == 2


def test_find_example_honours_clause_count(small_config, small_example):
    assert small_example.truth.expression.count(" and ") == 1
    assert small_example.scene.num_objects == 3
    with pytest.raises(GenerationError):
        find_example(small_config.scene, small_config.grammar, 0, clauses=3, max_tries=3)
