from abc import ABC, abstractmethod
from typing import Any, Dict, List, Tuple
import json
import logging
import time
from datetime import datetime
from pathlib import Path

import pandas as pd

from exporters.csv_exporter import CsvExporter
from models.comparison_report import ComparisonReport
from models.experiment_config import ExperimentConfig
from models.experiment_report import ExperimentReport


class BaseExperiment(ABC):
    """Abstract base class for CLI experiments."""

    def __init__(self, config: ExperimentConfig, settings: Dict[str, Any] = None):
        self.config = config
        self.settings = settings or {}
        self.name = self._get_experiment_name()
        self.logger = self._setup_logging()
        self.exporter = CsvExporter(config.output_path)

    def _setup_logging(self) -> logging.Logger:
        """Setup logging for this experiment."""
        logging_settings = self.settings.get("logging", {})
        level = getattr(logging, str(logging_settings.get("level", "INFO")).upper(), logging.INFO)

        logger = logging.getLogger(f"{self.name}_experiment")
        logger.setLevel(level)

        # Clear existing handlers to avoid duplicates
        logger.handlers.clear()

        logs_dir = Path(logging_settings.get("dir", "logs"))
        logs_dir.mkdir(parents=True, exist_ok=True)

        timestamp = datetime.now().strftime('%Y%m%d_%H%M%S')
        log_file = logs_dir / f"{self.name}_{timestamp}.log"

        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(level)
        formatter = logging.Formatter(
            logging_settings.get("format", '%(asctime)s - %(name)s - %(levelname)s - %(message)s')
        )
        file_handler.setFormatter(formatter)

        logger.addHandler(file_handler)
        return logger

    @abstractmethod
    def _get_experiment_name(self) -> str:
        """Return the subcommand name of this experiment."""
        pass

    @abstractmethod
    def validate_config(self) -> List[str]:
        """Return the reasons this configuration cannot run (empty when valid)."""
        pass

    @abstractmethod
    def execute(self) -> Tuple[Dict[str, pd.DataFrame], List[ComparisonReport]]:
        """Compute result tables and embedded checks."""
        pass

    def run(self) -> ExperimentReport:
        """Main experiment workflow with logging, export and statistics."""
        start_time = time.time()
        run_id = f"{self.name}_{datetime.now().strftime('%Y%m%d_%H%M%S')}_s{self.config.seed}"

        self.logger.info(f"Starting experiment run: {run_id}")
        self.logger.info(f"Process: {self.config.process}, n={self.config.n}, replicates={self.config.replicates}")
        self.logger.info(f"Seed: {self.config.seed}, jobs: {self.config.jobs}")

        try:
            self.logger.info("Validating configuration...")
            problems = self.validate_config()
            if problems:
                error_msg = f"Invalid configuration for {self.name}: " + "; ".join(problems)
                self.logger.error(error_msg)
                raise ValueError(error_msg)
            self.logger.info("Configuration validation successful")

            execution_start = time.time()
            tables, comparisons = self.execute()
            execution_time = time.time() - execution_start
            self.logger.info(f"Computed {len(tables)} tables and {len(comparisons)} checks in {execution_time:.2f}s")

            written = []
            for table_name, frame in tables.items():
                path = self.exporter.write_table(run_id, table_name, frame)
                written.append(str(path))
                self.logger.info(f"Wrote {len(frame)} rows to {path}")

            for comparison in comparisons:
                log = self.logger.info if comparison.passed else self.logger.warning
                log(
                    f"[{comparison.status}] {comparison.name}: estimate={comparison.estimate:.6g} "
                    f"reference={comparison.reference:.6g} se={comparison.standard_error:.3g} "
                    f"({comparison.provenance})"
                )

            report = ExperimentReport.from_comparisons(
                run_id=run_id,
                experiment=self.name,
                seed=self.config.seed,
                replicates=self.config.replicates,
                comparisons=comparisons,
                processing_time=time.time() - start_time,
                output_files=written,
            )
            meta_path = self.exporter.write_metadata(report, self.config, written)
            report.output_files.append(str(meta_path))

            self._log_statistics(report, execution_time)
            self.logger.info(f"Experiment completed: {run_id}")
            return report

        except Exception as e:
            self.logger.error(f"Experiment failed: {str(e)}", exc_info=True)
            raise

    def _log_statistics(self, report: ExperimentReport, execution_time: float):
        """Log detailed statistics about the run."""
        stats = {
            "run_id": report.run_id,
            "experiment": report.experiment,
            "run_date": report.run_date.isoformat(),
            "seed": report.seed,
            "replicates": report.replicates,
            "total_checks": report.total_checks,
            "passed_checks": report.passed_checks,
            "failed_checks": report.failed_checks,
            "kind_breakdown": report.kind_breakdown,
            "timing": {
                "total_processing_time": report.processing_time,
                "execution_time": execution_time,
                "replicates_per_second": report.replicates / execution_time if execution_time > 0 else 0,
            },
        }
        self.logger.info("STATISTICS: " + json.dumps(stats, indent=2))
