"""Tools for stages to use."""

from gated_grounder.tools.checkpoint_store import CheckpointStoreTool
from gated_grounder.tools.dataset_store import DatasetStoreTool
from gated_grounder.tools.metrics_writer import MetricsWriterTool, format_ablation_table
from gated_grounder.tools.pdf_report import PDFReportTool

__all__ = [
    "DatasetStoreTool",
    "CheckpointStoreTool",
    "MetricsWriterTool",
    "PDFReportTool",
    "format_ablation_table",
]
