"""PDF report tool for ablation tables."""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

try:
    from reportlab.lib import colors
    from reportlab.lib.pagesizes import landscape, letter
    from reportlab.lib.styles import getSampleStyleSheet
    from reportlab.lib.units import inch
    from reportlab.platypus import Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

    REPORTLAB_AVAILABLE = True
except ImportError:
    REPORTLAB_AVAILABLE = False

from gated_grounder.models import AblationRow

logger = logging.getLogger(__name__)

HEADER = ["Variant", "DGC", "EGR", "Graphs", "Acc@0.5", "Raw-box acc", "Mean IoU"]


def table_rows(rows: Sequence[AblationRow]) -> List[List[str]]:
    """Header plus one formatted row per variant."""
    body = [
        [
            row.label,
            "on" if row.dgc else "off",
            "on" if row.egr else "off",
            row.graphs,
            f"{100 * row.acc_at_0_5:.2f}%",
            f"{100 * row.acc_raw_box:.2f}%",
            f"{row.mean_iou:.4f}",
        ]
        for row in rows
    ]
    return [HEADER, *body]


class PDFReportTool:
    """Tool for rendering ablation results as PDF."""

    def __init__(self, output_dir: Optional[str] = None):
        """Initialize the PDF report tool.

        Args:
            output_dir: Directory for reports (defaults to current directory)
        """
        if not REPORTLAB_AVAILABLE:
            raise ImportError("reportlab is required for --pdf. Install with: pip install reportlab")

        self.output_dir = Path(output_dir) if output_dir else Path.cwd()
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def generate_pdf(
        self,
        rows: Sequence[AblationRow],
        filename: str,
        title: Optional[str] = None,
        notes: Optional[str] = None,
    ) -> Dict[str, Any]:
        """Render an ablation table on a landscape page.

        Args:
            rows: Ablation rows in display order
            filename: Report name, with or without the .pdf suffix
            title: Heading above the table
            notes: Small print under the table (e.g. config hash)

        Returns:
            Dictionary with file path, file name and size in bytes
        """
        path = self.output_dir / (filename if filename.endswith(".pdf") else f"{filename}.pdf")
        styles = getSampleStyleSheet()
        margin = 0.75 * inch

        flowables = []
        if title:
            flowables += [Paragraph(title, styles["Title"]), Spacer(1, 0.25 * inch)]

        table = Table(table_rows(rows), hAlign="LEFT", repeatRows=1)
        table.setStyle(
            TableStyle(
                [
                    ("BACKGROUND", (0, 0), (-1, 0), colors.lightgrey),
                    ("FONTNAME", (0, 0), (-1, 0), "Helvetica-Bold"),
                    ("GRID", (0, 0), (-1, -1), 0.5, colors.grey),
                    ("ALIGN", (4, 1), (-1, -1), "RIGHT"),
                ]
            )
        )
        flowables.append(table)
        if notes:
            flowables += [Spacer(1, 0.25 * inch), Paragraph(notes, styles["Italic"])]

        SimpleDocTemplate(
            str(path),
            pagesize=landscape(letter),
            leftMargin=margin,
            rightMargin=margin,
            topMargin=margin,
            bottomMargin=margin,
            title=title or path.stem,
        ).build(flowables)
        logger.info("Wrote ablation PDF %s", path)

        return {"file_path": str(path), "filename": path.name, "size": path.stat().st_size}
