"""CSV writers for metrics, traces and ablation tables."""

import csv
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from gated_grounder.models import AblationRow, Metrics, StepTrace

METRIC_COLUMNS = [
    "epoch",
    "split",
    "loss_ce",
    "loss_reg",
    "acc_at_0.5",
    "acc_raw_box",
    "mean_iou",
    "mean_iou_raw",
]
NODE_COLUMNS = ["step", "graph", "node", "tau", "gate", "active", "node_weight"]
EDGE_COLUMNS = ["step", "graph", "src", "dst", "edge_weight"]
ABLATION_COLUMNS = ["label", "dgc", "egr", "graphs", "acc_at_0.5", "acc_raw_box", "mean_iou"]


def _fmt(value: float) -> str:
    return repr(float(value))


class MetricsWriterTool:
    """Tool for writing comma-separated result files."""

    def __init__(self, output_dir: Optional[str] = None):
        """Initialize the writer.

        Args:
            output_dir: Directory for result files (defaults to current directory)
        """
        self.output_dir = Path(output_dir) if output_dir else Path.cwd()

    def start_metrics(self, filename: str, config_hash: str) -> Path:
        """Create (or truncate) a metrics file with its config-hash comment and header."""
        path = self.output_dir / filename
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(f"# config_hash={config_hash}\n")
            csv.writer(f, lineterminator="\n").writerow(METRIC_COLUMNS)
        return path

    def append_metrics(self, path: Path, metrics: Metrics) -> None:
        with open(path, "a", encoding="utf-8", newline="") as f:
            csv.writer(f, lineterminator="\n").writerow(
                [
                    metrics.epoch,
                    metrics.split,
                    _fmt(metrics.loss_ce),
                    _fmt(metrics.loss_reg),
                    _fmt(metrics.acc_at_0_5),
                    _fmt(metrics.acc_raw_box),
                    _fmt(metrics.mean_iou),
                    _fmt(metrics.mean_iou_raw),
                ]
            )

    def read_metrics(self, path: Path) -> List[Dict[str, str]]:
        """Rows of a metrics file (comment line skipped)."""
        with open(path, "r", encoding="utf-8") as f:
            lines = [line for line in f if not line.startswith("#")]
        return list(csv.DictReader(lines))

    def write_trace(self, stem: str, steps: Sequence[StepTrace]) -> Dict[str, str]:
        """Write `<stem>_nodes.csv` and `<stem>_edges.csv`.

        Args:
            stem: File name prefix inside output_dir
            steps: Per-step traces

        Returns:
            Dictionary with both file paths
        """
        nodes_path = self.output_dir / f"{stem}_nodes.csv"
        edges_path = self.output_dir / f"{stem}_edges.csv"
        nodes_path.parent.mkdir(parents=True, exist_ok=True)

        with open(nodes_path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(NODE_COLUMNS)
            for step in steps:
                active = set(step.active)
                for graph, tau in step.tau.items():
                    weights = dict(zip(step.active, step.node_weights.get(graph, [])))
                    for node, score in enumerate(tau):
                        writer.writerow([
                            step.step, graph, node, _fmt(score), step.gates[graph][node],
                            int(node in active), _fmt(weights.get(node, 0.0)),
                        ])

        with open(edges_path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(EDGE_COLUMNS)
            for step in steps:
                for graph, rows in step.edge_weights.items():
                    for src, dst, weight in rows:
                        writer.writerow([step.step, graph, int(src), int(dst), _fmt(weight)])

        return {"nodes": str(nodes_path), "edges": str(edges_path)}

    def write_ablation(self, filename: str, rows: Sequence[AblationRow]) -> Path:
        path = self.output_dir / filename
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(ABLATION_COLUMNS)
            for row in rows:
                writer.writerow([
                    row.label, int(row.dgc), int(row.egr), row.graphs,
                    _fmt(row.acc_at_0_5), _fmt(row.acc_raw_box), _fmt(row.mean_iou),
                ])
        return path


def format_ablation_table(rows: Sequence[AblationRow]) -> str:
    """Fixed-width text table, one line per ablation variant."""
    header = f"{'variant':<14}{'DGC':<5}{'EGR':<5}{'graphs':<8}{'Acc@0.5':>9}{'raw':>9}{'mIoU':>9}"
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row.label:<14}{'x' if row.dgc else '-':<5}"
            f"{'x' if row.egr else '-':<5}{row.graphs:<8}"
            f"{100 * row.acc_at_0_5:>8.2f}%{100 * row.acc_raw_box:>8.2f}%{row.mean_iou:>9.4f}"
        )
    return "\n".join(lines)
