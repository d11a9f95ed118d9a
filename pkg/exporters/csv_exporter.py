import json
import subprocess
from pathlib import Path
from typing import Any, Dict, Iterable, List

import pandas as pd

from models.experiment_config import ExperimentConfig
from models.experiment_report import ExperimentReport
from models.path_sample import PathSample


def git_describe() -> str:
    try:
        result = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=5,
            cwd=Path(__file__).parent.parent,
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return result.stdout.strip() or "unknown"


class CsvExporter:
    """Writes result tables as CSV and one JSON metadata sidecar per run."""

    def __init__(self, output_dir):
        self.output_dir = Path(output_dir)

    def _ensure_dir(self) -> Path:
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ValueError(f"output path is not writable: {self.output_dir}") from exc
        return self.output_dir

    def write_table(self, run_id: str, name: str, frame: pd.DataFrame) -> Path:
        path = self._ensure_dir() / f"{run_id}_{name}.csv"
        frame.to_csv(path, index=False)
        return path

    @staticmethod
    def paths_frame(paths: Iterable[PathSample]) -> pd.DataFrame:
        """Event lists of several replicates in one table: replicate,time,kind,partition."""
        frames = []
        for replicate, path in enumerate(paths):
            frame = path.to_frame()
            frame.insert(0, "replicate", replicate)
            frames.append(frame)
        if not frames:
            return pd.DataFrame(columns=["replicate", "time", "kind", "partition"])
        return pd.concat(frames, ignore_index=True)

    def write_metadata(self, report: ExperimentReport, config: ExperimentConfig, tables: List[str]) -> Path:
        metadata: Dict[str, Any] = {
            "run_id": report.run_id,
            "experiment": report.experiment,
            "seed": report.seed,
            "replicates": report.replicates,
            "git_describe": git_describe(),
            "wall_time_seconds": report.processing_time,
            "config": config.model_dump(mode="json"),
            "tables": tables,
            "checks": [c.model_dump(mode="json") for c in report.comparisons],
            "all_passed": report.all_passed,
        }
        path = self._ensure_dir() / f"{report.run_id}.meta.json"
        with open(path, "w") as f:
            json.dump(metadata, f, indent=2, default=str)
        return path
