"""Tests for the grounder command line."""

import os

import pytest

from gated_grounder.main import (
    EXIT_OK,
    EXIT_USAGE,
    build_parser,
    main,
    overrides_from_args,
)


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch, tmp_path):
    for name in list(os.environ):
        if name.startswith("GROUNDER_"):
            monkeypatch.delenv(name)
    monkeypatch.chdir(tmp_path)


def test_flags_become_dotted_overrides():
    args = build_parser().parse_args(
        ["train", "--seed", "3", "--output-dir", "out", "--no-dgc", "--graphs", "c",
         "--order", "backward"]
    )
    assert overrides_from_args(args) == {
        "seed": 3,
        "output_dir": "out",
        "ablation.dgc": False,
        "ablation.graphs": "c",
        "ablation.order": "backward",
    }
    assert overrides_from_args(build_parser().parse_args(["generate"])) == {}


def test_unknown_subcommand_exits_with_usage():
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args(["fly"])
    assert info.value.code == 2


def test_parse_dump(capsys):
    assert main(["parse", "box left of ball", "--dump"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "relations (1):" in out
    assert "--left of-->" in out
    assert "sub-expressions (T=1):" in out


def test_unparseable_expression_is_a_usage_error(capsys):
    assert main(["parse", "box sideways ball"]) == EXIT_USAGE
    assert "❌ Error:" in capsys.readouterr().err


def test_missing_config_file_is_a_usage_error(tmp_path):
    assert main(["generate", "--config", str(tmp_path / "missing.cfg")]) == EXIT_USAGE


def test_invalid_config_value_is_a_usage_error(tmp_path, monkeypatch):
    monkeypatch.setenv("GROUNDER_SEED", "-4")
    assert main(["generate", "--output-dir", str(tmp_path / "run")]) == EXIT_USAGE


def test_eval_without_checkpoint_is_a_usage_error(config_file, tmp_path):
    code = main(["eval", "--config", str(config_file), "--output-dir", str(tmp_path / "run")])
    assert code == EXIT_USAGE


def test_generate_train_eval(config_file, tmp_path, capsys):
    common = ["--config", str(config_file), "--output-dir", str(tmp_path / "run")]
    assert main(["generate", *common]) == EXIT_OK
    assert main(["train", *common]) == EXIT_OK
    assert (tmp_path / "run" / "checkpoints" / "latest.ckpt").is_file()
    assert main(["eval", *common, "--split", "val"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "✅ Evaluation completed!" in out
    assert "Examples:     2" in out


def test_gradcheck_passes(config_file, tmp_path, capsys):
    code = main(
        ["gradcheck", "--config", str(config_file), "--output-dir", str(tmp_path / "run"),
         "--coords", "3"]
    )
    assert code == EXIT_OK
    assert "✅ Gradient check passed!" in capsys.readouterr().out
