"""Pipeline stages for the grounding workflow."""

from gated_grounder.stages.dataset import DatasetStage
from gated_grounder.stages.evaluation import EvaluationStage
from gated_grounder.stages.report import ReportStage
from gated_grounder.stages.training import TrainingStage

__all__ = [
    "DatasetStage",
    "TrainingStage",
    "EvaluationStage",
    "ReportStage",
]
