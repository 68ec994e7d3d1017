"""Data models for the grounding engine."""

import math
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator


class Split(str, Enum):
    """Dataset splits."""

    TRAIN = "train"
    VAL = "val"
    TEST = "test"


class CandidateObject(BaseModel):
    """A synthetic detector proposal."""

    id: int = Field(..., ge=0, description="Index within the scene")
    box: List[float] = Field(..., description="(center-x, center-y, width, height), normalized")
    descriptor: List[float] = Field(..., description="Visual descriptor o_i")
    category: int = Field(..., ge=0, description="Category id")
    color: int = Field(..., ge=0, description="Color id")

    @field_validator("box")
    @classmethod
    def _check_box(cls, value: List[float]) -> List[float]:
        if len(value) != 4 or not all(math.isfinite(v) for v in value):
            raise ValueError("box must hold 4 finite numbers")
        if value[2] <= 0.0 or value[3] <= 0.0:
            raise ValueError("box width and height must be positive")
        return value

    @field_validator("descriptor")
    @classmethod
    def _check_descriptor(cls, value: List[float]) -> List[float]:
        if not all(math.isfinite(v) for v in value):
            raise ValueError("descriptor entries must be finite")
        return value


class Scene(BaseModel):
    """K candidate objects with the annotated target."""

    objects: List[CandidateObject] = Field(..., min_length=1, description="Candidates")
    target_id: int = Field(..., description="Id of the referred object")
    seed: int = Field(..., description="Seed the scene was generated from")

    @model_validator(mode="after")
    def _check_ids(self) -> "Scene":
        ids = [obj.id for obj in self.objects]
        if ids != list(range(len(ids))):
            raise ValueError("object ids must be contiguous from 0")
        if not 0 <= self.target_id < len(ids):
            raise ValueError("target_id must index a member of objects")
        return self

    @property
    def num_objects(self) -> int:
        return len(self.objects)

    def boxes(self) -> np.ndarray:
        """Boxes as a (K, 4) float64 array."""
        return np.array([obj.box for obj in self.objects], dtype=np.float64)

    def descriptors(self) -> np.ndarray:
        """Descriptors as a (K, D_v) float64 array."""
        return np.array([obj.descriptor for obj in self.objects], dtype=np.float64)

    def categories(self) -> np.ndarray:
        return np.array([obj.category for obj in self.objects], dtype=np.int64)

    def colors(self) -> np.ndarray:
        return np.array([obj.color for obj in self.objects], dtype=np.int64)


class GroundTruth(BaseModel):
    """Annotation for one scene."""

    target_box: List[float] = Field(..., description="Un-jittered target box b_GT")
    target_id: int = Field(..., ge=0, description="Id of the referred object")
    expression: str = Field(..., min_length=1, description="Referring expression")

    @field_validator("target_box")
    @classmethod
    def _check_box(cls, value: List[float]) -> List[float]:
        if len(value) != 4 or not all(math.isfinite(v) for v in value):
            raise ValueError("target_box must hold 4 finite numbers")
        if value[2] <= 0.0 or value[3] <= 0.0:
            raise ValueError("target_box width and height must be positive")
        return value


class DatasetRecord(BaseModel):
    """One line of a dataset file."""

    seed: int
    objects: List[CandidateObject]
    target_id: int
    target_box: List[float]
    expression: str

    @classmethod
    def from_example(cls, scene: Scene, truth: GroundTruth) -> "DatasetRecord":
        return cls(
            seed=scene.seed,
            objects=scene.objects,
            target_id=scene.target_id,
            target_box=truth.target_box,
            expression=truth.expression,
        )

    def to_example(self) -> "Example":
        scene = Scene(objects=self.objects, target_id=self.target_id, seed=self.seed)
        truth = GroundTruth(
            target_box=self.target_box, target_id=self.target_id, expression=self.expression
        )
        return Example(scene=scene, truth=truth)


class Example(BaseModel):
    """A scene paired with its annotation."""

    scene: Scene
    truth: GroundTruth


class Prediction(BaseModel):
    """Model output for one example."""

    scores_visual: List[float] = Field(..., description="Cosine scores on the visual graph")
    scores_categorical: List[float] = Field(
        ..., description="Cosine scores on the categorical graph"
    )
    probabilities: List[float] = Field(..., description="Matching probabilities P")
    selected_id: int = Field(..., description="argmax of the combined scores")
    refined_box: List[float] = Field(..., description="Predicted box b_pred")
    raw_box: List[float] = Field(..., description="Detector box of the selected node")
    degenerate_nodes: List[int] = Field(
        default_factory=list, description="Nodes whose cosine score hit a zero-norm vector"
    )


class Metrics(BaseModel):
    """Aggregate evaluation results for one split."""

    epoch: int = Field(0, description="Epoch the metrics were taken after")
    split: str = Field(..., description="Split name")
    loss_ce: float = Field(0.0, description="Mean matching loss")
    loss_reg: float = Field(0.0, description="Mean regression loss")
    acc_at_0_5: float = Field(..., description="Fraction with IoU(b_pred, b_GT) > 0.5")
    acc_raw_box: float = Field(..., description="Same rule on the selected detector box")
    mean_iou: float = Field(..., description="Mean IoU of predicted boxes")
    mean_iou_raw: float = Field(..., description="Mean IoU of selected detector boxes")
    count: int = Field(..., ge=0, description="Examples evaluated")


class StepTrace(BaseModel):
    """What one reasoning step did on both graphs."""

    step: int
    sub_expression: str
    tau: Dict[str, List[float]] = Field(
        default_factory=dict, description="Correlation scores per graph"
    )
    gates: Dict[str, List[int]] = Field(default_factory=dict, description="Raw DGC gates per graph")
    active: List[int] = Field(default_factory=list, description="Active node indices")
    fallback: str = Field("none", description="Which sub-graph fallback fired")
    node_weights: Dict[str, List[float]] = Field(default_factory=dict)
    edge_weights: Dict[str, List[List[float]]] = Field(
        default_factory=dict, description="Rows of (src, dst, weight) per graph"
    )


class ReasoningTrace(BaseModel):
    """Full record of a reasoning run plus its outcome."""

    expression: str
    steps: List[StepTrace] = Field(default_factory=list)
    prediction: Optional[Prediction] = None


class StageMessage(BaseModel):
    """Message for stage-to-stage handoffs."""

    from_stage: str = Field(..., description="Source stage name")
    to_stage: str = Field(..., description="Target stage name")
    phase: str = Field(..., description="Current phase")
    data: Dict[str, Any] = Field(..., description="Message payload")
    metadata: Dict[str, Any] = Field(default_factory=dict, description="Additional metadata")


class CheckpointHeader(BaseModel):
    """First line of a checkpoint file."""

    format_version: int
    schema_version: int
    config_hash: str
    model_hash: str
    epoch: int = 0


class TensorRecord(BaseModel):
    """One named tensor in a checkpoint file."""

    name: str
    shape: List[int]
    values: List[float]


class AblationRow(BaseModel):
    """One row of the ablation comparison table."""

    label: str
    dgc: bool
    egr: bool
    graphs: str
    acc_at_0_5: float
    acc_raw_box: float
    mean_iou: float
