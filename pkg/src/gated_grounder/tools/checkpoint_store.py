"""Checkpoint tool: header line plus one record per tensor."""

import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from gated_grounder.autodiff.params import SCHEMA_VERSION, ParameterStore
from gated_grounder.errors import ConfigurationError, DatasetParseError, UsageError
from gated_grounder.models import CheckpointHeader, TensorRecord

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
LATEST = "latest.ckpt"


class CheckpointStoreTool:
    """Tool for saving and loading parameter stores."""

    def __init__(self, output_dir: Optional[str] = None):
        """Initialize the checkpoint store.

        Args:
            output_dir: Directory for checkpoints (defaults to current directory)
        """
        self.output_dir = Path(output_dir) if output_dir else Path.cwd()

    def save(
        self, store: ParameterStore, config_hash: str, model_hash: str, epoch: int
    ) -> Dict[str, Any]:
        """Write `epoch_XXX.ckpt` and refresh `latest.ckpt`.

        Args:
            store: Parameters to save
            config_hash: Hash of the full run config
            model_hash: Hash of the shape-relevant config
            epoch: Epoch just finished

        Returns:
            Dictionary with both file paths
        """
        self.output_dir.mkdir(parents=True, exist_ok=True)
        header = CheckpointHeader(
            format_version=FORMAT_VERSION,
            schema_version=SCHEMA_VERSION,
            config_hash=config_hash,
            model_hash=model_hash,
            epoch=epoch,
        )
        lines = [header.model_dump_json()]
        for name, value in store.items():
            record = TensorRecord(
                name=name, shape=list(value.shape), values=value.reshape(-1).tolist()
            )
            lines.append(record.model_dump_json())
        text = "\n".join(lines) + "\n"

        path = self.output_dir / f"epoch_{epoch:03d}.ckpt"
        path.write_text(text, encoding="utf-8")
        (self.output_dir / LATEST).write_text(text, encoding="utf-8")
        logger.debug("Saved %d tensors to %s", len(store), path)
        return {"path": str(path), "latest": str(self.output_dir / LATEST)}

    def load(
        self, file_path: str, model_hash: Optional[str] = None
    ) -> Tuple[CheckpointHeader, ParameterStore]:
        """Read a checkpoint.

        Args:
            file_path: Checkpoint path
            model_hash: If given, must equal the header's model hash

        Returns:
            (header, parameter store)

        Raises:
            UsageError: If the file doesn't exist
            DatasetParseError: If a line is malformed
            ConfigurationError: If the checkpoint was built for other dimensions
        """
        path = Path(file_path)
        if not path.is_file():
            raise UsageError(f"Checkpoint not found: {path}. Run 'grounder train' first.")

        with open(path, "rb") as f:
            lines = f.readlines()
        if not lines:
            raise DatasetParseError("empty checkpoint", line=1)
        try:
            header = CheckpointHeader.model_validate_json(lines[0].decode("utf-8"))
        except (UnicodeDecodeError, ValidationError) as e:
            raise DatasetParseError(f"invalid checkpoint header: {e}", line=1) from e
        if header.format_version != FORMAT_VERSION or header.schema_version != SCHEMA_VERSION:
            raise ConfigurationError(
                f"Unsupported checkpoint version {header.format_version}/{header.schema_version}"
            )
        if model_hash is not None and header.model_hash != model_hash:
            raise ConfigurationError(
                "Checkpoint was trained with different model dimensions or vocabulary. "
                "Use the config it was trained with."
            )

        tensors = {}
        for number, raw in enumerate(lines[1:], start=2):
            try:
                line = raw.decode("utf-8")
                if not line.strip():
                    continue
                record = TensorRecord.model_validate_json(line)
                values = np.array(record.values, dtype=np.float64)
                tensors[record.name] = values.reshape(record.shape)
            except (ValidationError, ValueError) as e:
                raise DatasetParseError(f"invalid tensor record: {e}", line=number) from e
        return header, ParameterStore(tensors, version=header.epoch)
