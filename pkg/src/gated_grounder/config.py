"""Run configuration: pydantic models plus the flat key=value loader."""

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from gated_grounder.errors import ConfigurationError, UsageError

logger = logging.getLogger(__name__)

ENV_PREFIX = "GROUNDER_"

# Geometric predicates understood by the generator and the parser.
RELATION_NAMES = ("left of", "right of", "above", "below", "holding")

SPLIT_OFFSETS = {"train": 0, "val": 1_000_003, "test": 2_000_006}


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SceneConfig(_Section):
    """Synthetic scene generation parameters."""

    num_objects: int = Field(8, ge=2, le=64, description="Candidate objects per scene (K)")
    num_categories: int = Field(6, ge=2, description="Category vocabulary size")
    num_colors: int = Field(5, ge=2, description="Color vocabulary size")
    descriptor_dim: int = Field(64, ge=8, description="Visual descriptor dimension (D_v)")
    descriptor_noise: float = Field(0.1, ge=0.0, description="Gaussian sigma added to descriptors")
    projection_seed: int = Field(1234, description="Seed of the fixed descriptor projection")
    distractor_count: int = Field(
        3, ge=0, description="Objects forced to share the target's category"
    )
    box_jitter: float = Field(0.05, ge=0.0, description="Detector box noise scale")
    min_size: float = Field(0.1, gt=0.0, le=1.0, description="Minimum box width/height")
    max_size: float = Field(0.3, gt=0.0, le=1.0, description="Maximum box width/height")

    @model_validator(mode="after")
    def _check_sizes(self) -> "SceneConfig":
        if self.min_size > self.max_size:
            raise ValueError("min_size must not exceed max_size")
        if self.distractor_count > self.num_objects - 1:
            raise ValueError("distractor_count must be below num_objects")
        return self


class GrammarConfig(_Section):
    """Closed vocabulary and clause limits of the expression language."""

    nouns: List[str] = Field(
        default_factory=lambda: ["box", "ball", "cup", "book", "lamp", "chair", "vase", "plant"],
        description="Noun per category id",
    )
    colors: List[str] = Field(
        default_factory=lambda: ["red", "blue", "green", "yellow", "white", "black"],
        description="Color attribute per color id",
    )
    relations: List[str] = Field(
        default_factory=lambda: list(RELATION_NAMES), description="Enabled relation phrases"
    )
    min_clauses: int = Field(1, ge=1, le=3, description="Fewest clauses per expression")
    max_clauses: int = Field(3, ge=1, le=3, description="Most clauses per expression")
    color_probability: float = Field(
        0.7, ge=0.0, le=1.0, description="Chance a noun chunk carries its color"
    )
    relation_margin: float = Field(0.05, ge=0.0, description="Center offset for spatial relations")
    max_retries: int = Field(50, ge=1, description="Expression resamples per scene")
    max_scene_attempts: int = Field(20, ge=1, description="Scene resamples per example")

    @field_validator("nouns", "colors", "relations", mode="before")
    @classmethod
    def _split_csv(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [item.strip().lower() for item in value.split(",") if item.strip()]
        return value

    @field_validator("relations")
    @classmethod
    def _known_relations(cls, value: List[str]) -> List[str]:
        unknown = [name for name in value if name not in RELATION_NAMES]
        if unknown:
            raise ValueError(f"unknown relations {unknown}; expected a subset of {RELATION_NAMES}")
        if not value:
            raise ValueError("at least one relation is required")
        return value

    @field_validator("nouns", "colors")
    @classmethod
    def _single_words(cls, value: List[str]) -> List[str]:
        if any(" " in word for word in value):
            raise ValueError("nouns and colors must be single words")
        if len(set(value)) != len(value):
            raise ValueError("vocabulary entries must be unique")
        return value

    @model_validator(mode="after")
    def _check_clauses(self) -> "GrammarConfig":
        if self.min_clauses > self.max_clauses:
            raise ValueError("min_clauses must not exceed max_clauses")
        return self


class ModelConfig(_Section):
    """Dimensions of every learned component."""

    token_dim: int = Field(32, ge=1, description="Token embedding size (D_t)")
    hidden_dim: int = Field(32, ge=1, description="Recurrent encoder hidden size (H)")
    graph_dim: int = Field(64, ge=1, description="Graph node/edge feature size (D_g)")
    spatial_dim: int = Field(16, ge=5, description="Spatial feature size of mu_i")
    attention_dim: int = Field(32, ge=1, description="Chunk-matching attention size")
    category_dim: int = Field(16, ge=1, description="Category embedding size")
    color_dim: int = Field(16, ge=1, description="Color embedding size")
    match_dim: int = Field(64, ge=1, description="Projection size for cosine matching")
    regression_hidden: int = Field(64, ge=1, description="Hidden width of the box regressor")
    max_steps: int = Field(3, ge=1, description="Reasoning steps with dedicated parameters")
    param_seed: int = Field(0, description="Parameter initialization seed")


class AdamConfig(_Section):
    """Optimizer hyperparameters and training schedule."""

    learning_rate: float = Field(1e-4, gt=0.0, description="Adam step size")
    beta1: float = Field(0.8, ge=0.0, lt=1.0, description="First-moment decay")
    beta2: float = Field(0.9, ge=0.0, lt=1.0, description="Second-moment decay")
    epsilon: float = Field(1e-8, gt=0.0, description="Denominator stabilizer")
    batch_size: int = Field(32, ge=1, description="Examples per optimizer step")
    epochs: int = Field(30, ge=1, description="Passes over the training split")
    lr_schedule: Literal["constant", "cosine"] = Field(
        "constant", description="Per-epoch step size: constant, or cosine decay to lr_floor"
    )
    lr_floor: float = Field(
        0.1, gt=0.0, le=1.0, description="Final step size as a fraction of learning_rate"
    )
    gate_warmup_epochs: int = Field(
        0, ge=0, description="Leading epochs trained with every gate open (DGC runs only)"
    )


class DataConfig(_Section):
    """Split sizes and dataset location."""

    train_size: int = Field(2000, ge=1, description="Training examples")
    val_size: int = Field(500, ge=0, description="Validation examples")
    test_size: int = Field(500, ge=1, description="Test examples")
    data_dir: Optional[str] = Field(None, description="Dataset directory (default: <output>/data)")


class AblationConfig(_Section):
    """Independent switches for the ablation grid."""

    dgc: bool = Field(True, description="Dynamic gating on/off")
    egr: bool = Field(True, description="Expression-guided box regression on/off")
    graphs: Literal["a", "c", "both"] = Field("both", description="Graphs taking part")
    order: Literal["forward", "backward"] = Field("backward", description="Sub-expression order")


class RunConfig(_Section):
    """Everything one command needs, reproducible from file + seed."""

    seed: int = Field(0, ge=0, description="Master seed")
    output_dir: str = Field("runs/default", description="Directory for all artifacts")
    scene: SceneConfig = Field(default_factory=SceneConfig)
    grammar: GrammarConfig = Field(default_factory=GrammarConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    optimizer: AdamConfig = Field(default_factory=AdamConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    ablation: AblationConfig = Field(default_factory=AblationConfig)

    @model_validator(mode="after")
    def _check_vocabulary(self) -> "RunConfig":
        if len(self.grammar.nouns) < self.scene.num_categories:
            raise ValueError("grammar.nouns must name every category id")
        if len(self.grammar.colors) < self.scene.num_colors:
            raise ValueError("grammar.colors must name every color id")
        return self

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON dump, leaving out where artifacts live."""
        blob = self.model_dump_json(exclude={"output_dir": True, "data": {"data_dir"}})
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def model_hash(self) -> str:
        """Hash of the settings that fix parameter names and shapes."""
        shape_relevant = {
            "scene": {
                "num_categories": self.scene.num_categories,
                "num_colors": self.scene.num_colors,
                "descriptor_dim": self.scene.descriptor_dim,
            },
            "grammar": {
                "nouns": self.grammar.nouns,
                "colors": self.grammar.colors,
                "relations": self.grammar.relations,
            },
            "model": self.model.model_dump(),
        }
        blob = json.dumps(shape_relevant, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    def split_seed(self, split: str) -> int:
        """Seed of a dataset split, offset from the master seed."""
        if split not in SPLIT_OFFSETS:
            raise UsageError(f"Unknown split '{split}'. Expected one of {list(SPLIT_OFFSETS)}")
        return self.seed + SPLIT_OFFSETS[split]

    def split_size(self, split: str) -> int:
        return {
            "train": self.data.train_size,
            "val": self.data.val_size,
            "test": self.data.test_size,
        }[split]

    def dataset_path(self, split: str) -> Path:
        if self.data.data_dir:
            return Path(self.data.data_dir) / f"{split}.jsonl"
        return Path(self.output_dir) / "data" / f"{split}.jsonl"


def _nest(flat: Dict[str, Any]) -> Dict[str, Any]:
    nested: Dict[str, Any] = {}
    for key, value in flat.items():
        parts = key.split(".")
        node = nested
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigurationError(f"Key '{key}' conflicts with a scalar setting")
        node[parts[-1]] = value
    return nested


def _merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def env_overrides(environ: Optional[Dict[str, str]] = None) -> Dict[str, Any]:
    """Collect GROUNDER_* variables as dotted config keys.

    Args:
        environ: Mapping to read (defaults to os.environ)

    Returns:
        Flat dict of dotted keys to raw string values
    """
    environ = os.environ if environ is None else environ
    flat = {}
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX) or name == f"{ENV_PREFIX}CONFIG":
            continue
        key = name[len(ENV_PREFIX):].lower().replace("__", ".")
        flat[key] = value
    return flat


def load_run_config(
    path: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
    environ: Optional[Dict[str, str]] = None,
) -> RunConfig:
    """Load a flat key=value config document into a RunConfig.

    Args:
        path: Config file path (None uses defaults only)
        overrides: Dotted keys applied last (CLI flags)
        environ: Environment mapping for GROUNDER_* overrides

    Returns:
        Validated RunConfig

    Raises:
        UsageError: If the config file does not exist
        ConfigurationError: If any value fails validation
    """
    flat: Dict[str, Any] = {}
    if path is not None:
        if not Path(path).is_file():
            raise UsageError(f"Config file not found: {path}")
        flat.update({k: v for k, v in dotenv_values(path).items() if v is not None})
        logger.debug("Loaded %d keys from %s", len(flat), path)

    flat.update(env_overrides(environ))
    nested = _nest(flat)
    if overrides:
        nested = _merge(nested, _nest(overrides))

    try:
        return RunConfig.model_validate(nested)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid configuration: {e}") from e
