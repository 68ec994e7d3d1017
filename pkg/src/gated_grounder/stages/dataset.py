"""Dataset Stage - generates and persists the splits."""

import logging
from typing import Any, Dict

from gated_grounder.base_stage import BaseStage
from gated_grounder.config import RunConfig
from gated_grounder.models import Split, StageMessage
from gated_grounder.synth.dataset import generate_split

logger = logging.getLogger(__name__)


class DatasetStage(BaseStage):
    """Stage responsible for synthetic dataset generation."""

    def __init__(self):
        """Initialize the Dataset Stage."""
        super().__init__("DatasetStage")

    def process(self, message: StageMessage) -> Dict[str, Any]:
        """Generate every requested split and write it to disk.

        Args:
            message: Message with "config" (RunConfig) and optional "splits"

        Returns:
            Dictionary with per-split paths and record counts
        """
        config: RunConfig = message.data["config"]
        splits = message.data.get("splits", [split.value for split in Split])
        store = self.require_tool("dataset_store")

        paths, counts = {}, {}
        for split in splits:
            if config.split_size(split) == 0:
                continue
            examples = generate_split(config, split)
            written = store.write_dataset(str(config.dataset_path(split)), examples)
            paths[split] = written["path"]
            counts[split] = written["records"]
            logger.info("Wrote %d %s records to %s", written["records"], split, written["path"])

        return {
            "phase": "dataset",
            "status": "completed",
            "paths": paths,
            "counts": counts,
        }
