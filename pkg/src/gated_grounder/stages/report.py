"""Report Stage - writes the ablation comparison table."""

from typing import Any, Dict

from gated_grounder.base_stage import BaseStage
from gated_grounder.models import StageMessage
from gated_grounder.tools.metrics_writer import format_ablation_table


class ReportStage(BaseStage):
    """Stage responsible for formatting ablation results."""

    def __init__(self):
        """Initialize the Report Stage."""
        super().__init__("ReportStage")

    def process(self, message: StageMessage) -> Dict[str, Any]:
        """Write the table as text and CSV, plus a PDF when requested.

        Args:
            message: Message with "rows" (AblationRow list), "config_hash"
                and optional "pdf"

        Returns:
            Dictionary with the text table and output paths
        """
        rows = message.data["rows"]
        config_hash = message.data.get("config_hash", "")
        writer = self.require_tool("metrics_writer")

        table = format_ablation_table(rows)
        text_path = writer.output_dir / "ablation.txt"
        text_path.parent.mkdir(parents=True, exist_ok=True)
        text_path.write_text(f"# config_hash={config_hash}\n{table}\n", encoding="utf-8")
        csv_path = writer.write_ablation("ablation.csv", rows)

        result = {
            "phase": "report",
            "status": "completed",
            "table": table,
            "text_path": str(text_path),
            "csv_path": str(csv_path),
        }

        if message.data.get("pdf"):
            pdf = self.require_tool("pdf_report").generate_pdf(
                rows,
                "ablation",
                title="Ablation: dynamic gating, box regression and graph choice",
                notes=f"config_hash={config_hash}",
            )
            result["pdf_path"] = pdf["file_path"]

        return result
