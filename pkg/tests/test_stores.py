"""Tests for the dataset, checkpoint, metrics and PDF tools."""

import numpy as np
import pytest

from gated_grounder.errors import ConfigurationError, DatasetParseError, UsageError
from gated_grounder.models import AblationRow, Metrics, StepTrace
from gated_grounder.synth.dataset import generate_split
from gated_grounder.tools.checkpoint_store import LATEST, CheckpointStoreTool
from gated_grounder.tools.dataset_store import DatasetStoreTool
from gated_grounder.tools.metrics_writer import (
    ABLATION_COLUMNS,
    METRIC_COLUMNS,
    MetricsWriterTool,
    format_ablation_table,
)
from gated_grounder.tools.pdf_report import PDFReportTool, table_rows


def _rows():
    return [
        AblationRow(
            label="baseline", dgc=False, egr=False, graphs="both",
            acc_at_0_5=0.5, acc_raw_box=0.45, mean_iou=0.41,
        ),
        AblationRow(
            label="dgc+egr", dgc=True, egr=True, graphs="both",
            acc_at_0_5=0.875, acc_raw_box=0.8, mean_iou=0.66,
        ),
    ]


def test_dataset_round_trip_is_exact(tmp_path, tiny_config):
    examples = generate_split(tiny_config, "val")
    tool = DatasetStoreTool(base_path=str(tmp_path))
    written = tool.write_dataset("data/val.jsonl", examples)
    assert written["records"] == len(examples)
    assert tool.read_dataset("data/val.jsonl") == examples


def test_missing_dataset_is_a_usage_error(tmp_path):
    with pytest.raises(UsageError):
        DatasetStoreTool(base_path=str(tmp_path)).read_dataset("nope.jsonl")


def test_malformed_record_reports_its_line(tmp_path, tiny_config):
    tool = DatasetStoreTool(base_path=str(tmp_path))
    tool.write_dataset("val.jsonl", generate_split(tiny_config, "val", size=2))
    path = tmp_path / "val.jsonl"
    lines = path.read_text(encoding="utf-8").splitlines()
    path.write_text(f"{lines[0]}\n{{\"seed\": 1}}\n{lines[1]}\n", encoding="utf-8")
    with pytest.raises(DatasetParseError) as info:
        tool.read_dataset("val.jsonl")
    assert info.value.line == 2
    assert str(info.value).startswith("line 2:")


def test_undecodable_record_reports_its_line(tmp_path, tiny_config):
    tool = DatasetStoreTool(base_path=str(tmp_path))
    tool.write_dataset("val.jsonl", generate_split(tiny_config, "val", size=3))
    path = tmp_path / "val.jsonl"
    lines = path.read_bytes().splitlines(keepends=True)
    lines[1] = b"\xff\xfe garbage\n"
    path.write_bytes(b"".join(lines))
    with pytest.raises(DatasetParseError) as info:
        tool.read_dataset("val.jsonl")
    assert info.value.line == 2


def test_out_of_vocabulary_ids_are_rejected_on_load(tmp_path, tiny_config):
    tool = DatasetStoreTool(base_path=str(tmp_path))
    examples = generate_split(tiny_config, "val", size=2)
    objects = list(examples[1].scene.objects)
    objects[0] = objects[0].model_copy(update={"category": 99})
    scene = examples[1].scene.model_copy(update={"objects": objects})
    examples[1] = examples[1].model_copy(update={"scene": scene})
    tool.write_dataset("val.jsonl", examples)

    assert tool.read_dataset("val.jsonl")[1].scene.objects[0].category == 99
    with pytest.raises(DatasetParseError) as info:
        tool.read_dataset("val.jsonl", scene=tiny_config.scene)
    assert info.value.line == 2
    assert "category 99" in str(info.value)


def test_undecodable_checkpoint_line(tmp_path, model, tiny_config):
    tool = CheckpointStoreTool(output_dir=str(tmp_path))
    saved = tool.save(model.store, tiny_config.config_hash(), tiny_config.model_hash(), epoch=1)
    path = tmp_path / "epoch_001.ckpt"
    lines = path.read_bytes().splitlines(keepends=True)
    lines[2] = b"\xff\n"
    path.write_bytes(b"".join(lines))
    with pytest.raises(DatasetParseError) as info:
        tool.load(saved["path"])
    assert info.value.line == 3


def test_checkpoint_round_trip_is_exact(tmp_path, model, tiny_config):
    tool = CheckpointStoreTool(output_dir=str(tmp_path))
    saved = tool.save(model.store, tiny_config.config_hash(), tiny_config.model_hash(), epoch=3)
    assert saved["path"].endswith("epoch_003.ckpt")
    assert (tmp_path / LATEST).read_bytes() == (tmp_path / "epoch_003.ckpt").read_bytes()

    header, store = tool.load(saved["latest"], model_hash=tiny_config.model_hash())
    assert header.epoch == 3
    assert header.config_hash == tiny_config.config_hash()
    assert list(store) == list(model.store)
    for name, value in model.store.items():
        assert np.array_equal(store[name], value)
        assert store[name].shape == value.shape


def test_checkpoint_for_other_dimensions_is_rejected(tmp_path, model, tiny_config):
    tool = CheckpointStoreTool(output_dir=str(tmp_path))
    saved = tool.save(model.store, "c", "m", epoch=1)
    with pytest.raises(ConfigurationError):
        tool.load(saved["path"], model_hash="other")


def test_checkpoint_errors(tmp_path):
    tool = CheckpointStoreTool(output_dir=str(tmp_path))
    with pytest.raises(UsageError):
        tool.load(str(tmp_path / "missing.ckpt"))
    bad = tmp_path / "bad.ckpt"
    bad.write_text("not json\n", encoding="utf-8")
    with pytest.raises(DatasetParseError):
        tool.load(str(bad))


def test_metrics_file_layout(tmp_path):
    writer = MetricsWriterTool(output_dir=str(tmp_path))
    path = writer.start_metrics("metrics.csv", "abc123")
    metrics = Metrics(
        epoch=1, split="train", loss_ce=0.1, loss_reg=0.2,
        acc_at_0_5=0.75, acc_raw_box=0.5, mean_iou=0.6, mean_iou_raw=0.55, count=4,
    )
    writer.append_metrics(path, metrics)
    writer.append_metrics(path, metrics.model_copy(update={"split": "val"}))

    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# config_hash=abc123"
    assert lines[1].split(",") == METRIC_COLUMNS
    rows = writer.read_metrics(path)
    assert [r["split"] for r in rows] == ["train", "val"]
    assert float(rows[0]["acc_at_0.5"]) == 0.75
    assert float(rows[0]["loss_ce"]) == 0.1


def test_trace_tables(tmp_path):
    writer = MetricsWriterTool(output_dir=str(tmp_path))
    step = StepTrace(
        step=1,
        sub_expression="box left of ball",
        tau={"visual": [0.3, 0.1, 0.2], "categorical": [0.0, 0.5, 0.4]},
        gates={"visual": [1, 0, 0], "categorical": [0, 1, 1]},
        active=[1, 2],
        fallback="categorical",
        node_weights={"visual": [0.4, 0.6], "categorical": [0.45, 0.55]},
        edge_weights={"visual": [[1, 2, 1.0]], "categorical": [[2, 1, 1.0]]},
    )
    paths = writer.write_trace("traces/test_0000", [step])
    nodes = (tmp_path / "traces" / "test_0000_nodes.csv").read_text(encoding="utf-8").splitlines()
    edges = (tmp_path / "traces" / "test_0000_edges.csv").read_text(encoding="utf-8").splitlines()
    assert paths["nodes"].endswith("test_0000_nodes.csv")
    assert nodes[0] == "step,graph,node,tau,gate,active,node_weight"
    assert len(nodes) == 1 + 6
    assert nodes[1] == "1,visual,0,0.3,1,0,0.0"
    assert nodes[2] == "1,visual,1,0.1,0,1,0.4"
    assert edges[1:] == ["1,visual,1,2,1.0", "1,categorical,2,1,1.0"]


def test_ablation_outputs(tmp_path):
    writer = MetricsWriterTool(output_dir=str(tmp_path))
    path = writer.write_ablation("ablation.csv", _rows())
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].split(",") == ABLATION_COLUMNS
    assert lines[2].startswith("dgc+egr,1,1,both,0.875")

    table = format_ablation_table(_rows()).splitlines()
    assert len(table) == 4
    assert table[3].startswith("dgc+egr")
    assert "87.50%" in table[3]


def test_pdf_report(tmp_path):
    pytest.importorskip("reportlab")
    result = PDFReportTool(output_dir=str(tmp_path)).generate_pdf(
        _rows(), "ablation", title="Ablation", notes="config_hash=abc"
    )
    assert result["filename"] == "ablation.pdf"
    assert result["size"] > 0


def test_pdf_table_rows():
    header, baseline, full = table_rows(_rows())
    assert header[0] == "Variant" and len(header) == 7
    assert baseline[:4] == ["baseline", "off", "off", "both"]
    assert full[4:] == ["87.50%", "80.00%", "0.6600"]


def test_same_seed_gives_identical_dataset_bytes(tmp_path, tiny_config):
    tool = DatasetStoreTool(base_path=str(tmp_path))
    tool.write_dataset("a.jsonl", generate_split(tiny_config, "test"))
    tool.write_dataset("b.jsonl", generate_split(tiny_config, "test"))
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
