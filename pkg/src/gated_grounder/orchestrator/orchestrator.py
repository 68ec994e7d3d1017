"""Main orchestrator for coordinating all stages per command."""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from gated_grounder.autodiff.gradcheck import GradCheckReport, grad_check
from gated_grounder.autodiff.params import ParameterStore
from gated_grounder.config import RunConfig
from gated_grounder.errors import UsageError
from gated_grounder.language.parser import describe, parse
from gated_grounder.language.vocabulary import Vocabulary, tokenize
from gated_grounder.model import GroundingModel
from gated_grounder.models import AblationRow, Example, Metrics, ReasoningTrace, StageMessage
from gated_grounder.stages.dataset import DatasetStage
from gated_grounder.stages.evaluation import EvaluationStage
from gated_grounder.stages.report import ReportStage
from gated_grounder.stages.training import TrainingStage
from gated_grounder.synth.dataset import find_example
from gated_grounder.tools.checkpoint_store import LATEST, CheckpointStoreTool
from gated_grounder.tools.dataset_store import DatasetStoreTool
from gated_grounder.tools.metrics_writer import MetricsWriterTool
from gated_grounder.tools.pdf_report import PDFReportTool

logger = logging.getLogger(__name__)

# (label, dgc, egr, graphs) in table order
ABLATION_GRID: List[Tuple[str, bool, bool, str]] = [
    ("baseline", False, False, "both"),
    ("dgc", True, False, "both"),
    ("egr", False, True, "both"),
    ("dgc+egr", True, True, "both"),
    ("visual-only", True, True, "a"),
    ("categorical", True, True, "c"),
]


class GroundingOrchestrator:
    """Orchestrator that coordinates the stages behind every CLI command."""

    def __init__(self, config: RunConfig, output_dir: Optional[str] = None):
        """Initialize the orchestrator.

        Args:
            config: Validated run configuration
            output_dir: Directory for artifacts (defaults to config.output_dir)
        """
        self.config = config
        self.output_dir = Path(output_dir or config.output_dir)

        self.dataset_store = DatasetStoreTool()
        self.checkpoint_store = CheckpointStoreTool(output_dir=str(self.output_dir / "checkpoints"))
        self.metrics_writer = MetricsWriterTool(output_dir=str(self.output_dir))

        self.dataset_stage = DatasetStage()
        self.dataset_stage.register_tool("dataset_store", self.dataset_store)

        self.training_stage = TrainingStage()
        self.training_stage.register_tool("checkpoint_store", self.checkpoint_store)
        self.training_stage.register_tool("metrics_writer", self.metrics_writer)

        self.evaluation_stage = EvaluationStage()
        self.evaluation_stage.register_tool("metrics_writer", self.metrics_writer)

        self.report_stage = ReportStage()
        self.report_stage.register_tool("metrics_writer", self.metrics_writer)

    def _message(self, to_stage: str, phase: str, data: Dict[str, Any]) -> StageMessage:
        return StageMessage(
            from_stage="Orchestrator",
            to_stage=to_stage,
            phase=phase,
            data=data,
            metadata={"config_hash": self.config.config_hash()},
        )

    def load_split(self, split: str) -> List[Example]:
        """Read a generated split (UsageError if it was never generated)."""
        return self.dataset_store.read_dataset(
            str(self.config.dataset_path(split)), scene=self.config.scene
        )

    def load_model(self, checkpoint: Optional[str] = None) -> GroundingModel:
        """Model with parameters from a checkpoint (default: latest of this run)."""
        path = checkpoint or str(self.output_dir / "checkpoints" / LATEST)
        header, store = self.checkpoint_store.load(path, model_hash=self.config.model_hash())
        logger.info("Loaded checkpoint %s (epoch %d)", path, header.epoch)
        return GroundingModel(self.config, store)

    def generate(self) -> Dict[str, Any]:
        """Write the train, val and test splits."""
        print("Phase 1: Dataset Generation...")
        return self.dataset_stage.handle(
            self._message("DatasetStage", "dataset", {"config": self.config})
        )

    def train(self) -> Dict[str, Any]:
        """Train from scratch on the generated splits.

        Raises:
            UsageError: If the splits have not been generated
            NumericError: If training diverges
        """
        print("Phase 2: Training...")
        train = self.load_split("train")
        val = self.load_split("val") if self.config.data.val_size > 0 else []
        model = GroundingModel(self.config)
        logger.info(
            "Model has %d parameters in %d tensors", model.store.num_parameters(), len(model.store)
        )
        result = self.training_stage.handle(
            self._message("TrainingStage", "training", {"model": model, "train": train, "val": val})
        )
        result["model"] = model
        return result

    def evaluate(
        self,
        checkpoint: Optional[str] = None,
        split: str = "test",
        trace: bool = False,
        model: Optional[GroundingModel] = None,
    ) -> Metrics:
        """Score a checkpoint on a split; optionally dump per-item traces."""
        print(f"Phase 3: Evaluation ({split})...")
        model = model or self.load_model(checkpoint)
        result = self.evaluation_stage.handle(
            self._message(
                "EvaluationStage",
                "evaluation",
                {
                    "model": model,
                    "examples": self.load_split(split),
                    "split": split,
                    "trace": trace,
                },
            )
        )
        metrics: Metrics = result["metrics"]
        path = self.metrics_writer.start_metrics(f"eval_{split}.csv", self.config.config_hash())
        self.metrics_writer.append_metrics(path, metrics)
        return metrics

    def ablate(self, pdf: bool = False) -> Dict[str, Any]:
        """Train and test every ablation variant on the same dataset files.

        Returns:
            Report stage result with the rows added under "rows"
        """
        if not self.config.dataset_path("train").is_file():
            self.generate()
        data_dir = str(self.config.dataset_path("train").parent)

        rows = []
        for label, dgc, egr, graphs in ABLATION_GRID:
            print(f"\n🔬 Variant '{label}' (DGC={dgc}, EGR={egr}, graphs={graphs})")
            variant = self.config.model_copy(
                update={
                    "output_dir": str(self.output_dir / "ablation" / label),
                    "ablation": self.config.ablation.model_copy(
                        update={"dgc": dgc, "egr": egr, "graphs": graphs}
                    ),
                    "data": self.config.data.model_copy(update={"data_dir": data_dir}),
                }
            )
            runner = GroundingOrchestrator(variant)
            trained = runner.train()
            metrics = runner.evaluate(split="test", model=trained["model"])
            rows.append(
                AblationRow(
                    label=label,
                    dgc=dgc,
                    egr=egr,
                    graphs=graphs,
                    acc_at_0_5=metrics.acc_at_0_5,
                    acc_raw_box=metrics.acc_raw_box,
                    mean_iou=metrics.mean_iou,
                )
            )

        print("\nPhase 4: Report...")
        if pdf:
            pdf_tool = PDFReportTool(output_dir=str(self.output_dir))
            self.report_stage.register_tool("pdf_report", pdf_tool)
        result = self.report_stage.handle(
            self._message(
                "ReportStage",
                "report",
                {"rows": rows, "config_hash": self.config.config_hash(), "pdf": pdf},
            )
        )
        result["rows"] = rows
        return result

    def trace(
        self,
        checkpoint: Optional[str] = None,
        split: str = "test",
        index: int = 0,
        expression: Optional[str] = None,
    ) -> Tuple[ReasoningTrace, Dict[str, str]]:
        """Per-step reasoning trace for one stored scene.

        Args:
            checkpoint: Checkpoint path (default: latest of this run)
            split: Split holding the scene
            index: Position of the scene in the split
            expression: Replaces the stored expression when given

        Returns:
            (trace, paths of the node and edge CSV tables)
        """
        model = self.load_model(checkpoint)
        examples = self.load_split(split)
        if not 0 <= index < len(examples):
            raise UsageError(f"Index {index} out of range for {split} ({len(examples)} examples)")
        example = examples[index]
        if expression is not None:
            truth = example.truth.model_copy(update={"expression": expression})
            example = Example(scene=example.scene, truth=truth)

        result = model.forward(example)
        trace = ReasoningTrace(
            expression=example.truth.expression,
            steps=result.reasoning.traces(),
            prediction=result.prediction,
        )
        paths = self.metrics_writer.write_trace(f"trace_{split}_{index:04d}", trace.steps)
        return trace, paths

    def parse_dump(self, expression: str) -> str:
        """Indented rendering of an expression's language graph."""
        vocab = Vocabulary(self.config.grammar)
        return describe(parse(tokenize(expression, vocab), vocab))

    def gradcheck(
        self, eps: float = 1e-5, coords_per_tensor: Optional[int] = None, seed: int = 0
    ) -> GradCheckReport:
        """Finite-difference check of the full model on a 3-object, 2-clause example."""
        small = self.config.model_copy(
            update={
                "scene": self.config.scene.model_copy(
                    update={"num_objects": 3, "distractor_count": 1, "box_jitter": 0.0}
                ),
                "grammar": self.config.grammar.model_copy(
                    update={"min_clauses": 2, "max_clauses": 2}
                ),
            }
        )
        example = find_example(small.scene, small.grammar, self.config.seed, clauses=2)
        model = GroundingModel(small)
        store: ParameterStore = model.store
        print(f"🧮 Checking {store.num_parameters()} parameters on: '{example.truth.expression}'")
        return grad_check(
            lambda tape: model.forward(example, tape).loss,
            store,
            eps=eps,
            coords_per_tensor=coords_per_tensor,
            seed=seed,
        )
