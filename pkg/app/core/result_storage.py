# python
import csv
import json
from abc import ABC, abstractmethod
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence, TextIO

# project
from app.core.config import dump_config
from app.core.logging import get_logger
from app.schemas.experiment import ExperimentConfig

# 3rd party
from pydantic import BaseModel

logger = get_logger(__name__)


def format_cell(value: Any) -> str:
    """Floats with 17 significant digits, everything else as str."""
    if isinstance(value, float):
        return f"{value:.17g}"
    if hasattr(value, "item"):
        return format_cell(value.item())
    return str(value)


class IResultStorage(ABC):
    """Interface for experiment output storage"""

    @abstractmethod
    def save_document(self, name: str, document: BaseModel) -> Path:
        """Write a JSON document.

        Args:
            name (str): File name inside the output directory
            document (BaseModel): Result document

        Returns:
            Path: Written file
        """
        raise NotImplementedError

    @abstractmethod
    def save_table(
        self,
        name: str,
        config: ExperimentConfig,
        header: Sequence[str],
        rows: Iterable[Sequence[Any]],
    ) -> Path:
        """Write a CSV table preceded by the resolved config as '# key = value' lines.

        Returns:
            Path: Written file
        """
        raise NotImplementedError

    @abstractmethod
    def load_document(self, name: str) -> dict[str, Any]:
        raise NotImplementedError


class FileResultStorage(IResultStorage):
    """Result files in one output directory.

    Files appear under their final name only once completely written.
    """

    def __init__(self, output_dir: Path) -> None:
        self.output_dir = Path(output_dir)
        self._ensure_output_directory()

    def _ensure_output_directory(self) -> None:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        logger.debug("Output directory ensured", path=str(self.output_dir))

    @contextmanager
    def _staged(self, name: str) -> Iterator[tuple[Path, TextIO]]:
        path = self.output_dir / name
        staging = path.with_name(f".{name}.partial")
        try:
            with open(staging, "w", encoding="utf-8", newline="") as f:
                yield path, f
            staging.replace(path)
        except BaseException:
            staging.unlink(missing_ok=True)
            raise

    def save_document(self, name: str, document: BaseModel) -> Path:
        try:
            with self._staged(name) as (path, f):
                f.write(document.model_dump_json(indent=2))
                f.write("\n")
        except OSError as e:
            logger.error("Failed to save result document", name=name, error=str(e))
            raise
        logger.info("Result document saved", path=str(path))
        return path

    def save_table(
        self,
        name: str,
        config: ExperimentConfig,
        header: Sequence[str],
        rows: Iterable[Sequence[Any]],
    ) -> Path:
        count = 0
        try:
            with self._staged(name) as (path, f):
                for line in dump_config(config).splitlines():
                    f.write(f"# {line}\n")
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(header)
                for row in rows:
                    writer.writerow([format_cell(v) for v in row])
                    count += 1
        except OSError as e:
            logger.error("Failed to save result table", name=name, error=str(e))
            raise
        logger.info("Result table saved", path=str(path), rows=count)
        return path

    def load_document(self, name: str) -> dict[str, Any]:
        path = self.output_dir / name
        try:
            with open(path, "r", encoding="utf-8") as f:
                return json.load(f)
        except json.JSONDecodeError as e:
            logger.error("Failed to parse result document", path=str(path), error=str(e))
            raise


def read_table(path: Path) -> tuple[str, list[dict[str, str]]]:
    """Config preamble text and the CSV rows of a table written by FileResultStorage."""
    preamble: list[str] = []
    body: list[str] = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not body and line.startswith("# "):
                preamble.append(line[2:])
            else:
                body.append(line)
    return "".join(preamble), list(csv.DictReader(body))
