"""Shared fixtures: tiny configs, a seeded model and small examples."""

from pathlib import Path

import pytest

from gated_grounder.config import RunConfig
from gated_grounder.model import GroundingModel
from gated_grounder.synth.dataset import find_example, generate_example

TINY = {
    "seed": 7,
    "scene": {
        "num_objects": 4,
        "num_categories": 3,
        "num_colors": 3,
        "descriptor_dim": 8,
        "distractor_count": 1,
    },
    "model": {
        "token_dim": 6,
        "hidden_dim": 5,
        "graph_dim": 6,
        "spatial_dim": 5,
        "attention_dim": 4,
        "category_dim": 3,
        "color_dim": 3,
        "match_dim": 4,
        "regression_hidden": 5,
        "max_steps": 2,
    },
    "optimizer": {"learning_rate": 1e-3, "batch_size": 4, "epochs": 2},
    "data": {"train_size": 8, "val_size": 4, "test_size": 4},
}

TINY_CFG = """\
# tiny run used by the CLI tests
seed=7
scene.num_objects=4
scene.num_categories=3
scene.num_colors=3
scene.descriptor_dim=8
scene.distractor_count=1
model.token_dim=6
model.hidden_dim=5
model.graph_dim=6
model.spatial_dim=5
model.attention_dim=4
model.category_dim=3
model.color_dim=3
model.match_dim=4
model.regression_hidden=5
model.max_steps=2
optimizer.learning_rate=1e-3
optimizer.batch_size=4
optimizer.epochs=1
data.train_size=6
data.val_size=2
data.test_size=3
"""


def tiny_run_config(output_dir: Path, **sections) -> RunConfig:
    """TINY settings with per-section updates merged in."""
    raw = {name: dict(value) if isinstance(value, dict) else value for name, value in TINY.items()}
    for name, update in sections.items():
        if isinstance(update, dict):
            raw.setdefault(name, {}).update(update)
        else:
            raw[name] = update
    raw["output_dir"] = str(output_dir)
    return RunConfig.model_validate(raw)


@pytest.fixture
def tiny_config(tmp_path) -> RunConfig:
    return tiny_run_config(tmp_path / "run")


@pytest.fixture
def model(tiny_config) -> GroundingModel:
    return GroundingModel(tiny_config)


@pytest.fixture
def store(model):
    return model.store


@pytest.fixture
def example(tiny_config):
    """A jittered 4-object example."""
    return generate_example(tiny_config.scene, tiny_config.grammar, 11)


@pytest.fixture
def small_config(tmp_path) -> RunConfig:
    """3 objects, exactly 2 clauses, no jitter."""
    return tiny_run_config(
        tmp_path / "small",
        scene={"num_objects": 3, "distractor_count": 1, "box_jitter": 0.0},
        grammar={"min_clauses": 2, "max_clauses": 2},
    )


@pytest.fixture
def small_example(small_config):
    return find_example(small_config.scene, small_config.grammar, small_config.seed, clauses=2)


@pytest.fixture
def config_file(tmp_path) -> Path:
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY_CFG, encoding="utf-8")
    return path


@pytest.fixture
def make_config(tmp_path):
    """Factory for TINY configs with section updates."""

    def make(**sections) -> RunConfig:
        return tiny_run_config(tmp_path / "run", **sections)

    return make
