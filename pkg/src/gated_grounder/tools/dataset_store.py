"""Dataset file tool: JSON Lines of DatasetRecord."""

from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from gated_grounder.config import SceneConfig
from gated_grounder.errors import DatasetParseError, UsageError
from gated_grounder.models import DatasetRecord, Example


def _check_vocabulary(record: DatasetRecord, scene: SceneConfig) -> None:
    for obj in record.objects:
        if obj.category >= scene.num_categories:
            raise ValueError(f"object {obj.id} has unknown category {obj.category}")
        if obj.color >= scene.num_colors:
            raise ValueError(f"object {obj.id} has unknown color {obj.color}")


class DatasetStoreTool:
    """Tool for writing and reading dataset splits."""

    def __init__(self, base_path: Optional[str] = None):
        """Initialize the dataset store.

        Args:
            base_path: Base path for relative file names (defaults to current directory)
        """
        self.base_path = Path(base_path) if base_path else Path.cwd()

    def _resolve(self, file_path: str) -> Path:
        path = Path(file_path)
        return path if path.is_absolute() else self.base_path / path

    def write_dataset(self, file_path: str, examples: Sequence[Example]) -> Dict[str, Any]:
        """Write one record per line.

        Floats use the shortest repr that round-trips, so reading the file
        back reproduces every value exactly.

        Args:
            file_path: Output path (parent directories are created)
            examples: Examples to write

        Returns:
            Dictionary with file path and record count
        """
        path = self._resolve(file_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            for example in examples:
                record = DatasetRecord.from_example(example.scene, example.truth)
                f.write(record.model_dump_json())
                f.write("\n")
        return {"path": str(path), "records": len(examples)}

    def read_dataset(self, file_path: str, scene: Optional[SceneConfig] = None) -> List[Example]:
        """Read a dataset file.

        Args:
            file_path: Path written by write_dataset
            scene: If given, category and color ids must fit its vocabularies

        Returns:
            Examples in file order

        Raises:
            UsageError: If the file doesn't exist
            DatasetParseError: If a line is not a valid record
        """
        path = self._resolve(file_path)
        if not path.is_file():
            raise UsageError(f"Dataset not found: {path}. Run 'grounder generate' first.")

        examples = []
        with open(path, "rb") as f:
            for number, raw in enumerate(f, start=1):
                try:
                    line = raw.decode("utf-8")
                    if not line.strip():
                        continue
                    record = DatasetRecord.model_validate_json(line)
                    if scene is not None:
                        _check_vocabulary(record, scene)
                    examples.append(record.to_example())
                except (UnicodeDecodeError, ValueError) as e:
                    raise DatasetParseError(
                        f"invalid record in {path.name}: {e}", line=number
                    ) from e
        return examples
