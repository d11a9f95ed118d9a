from datetime import datetime
from typing import Dict, List

from pydantic import BaseModel

from models.comparison_report import ComparisonReport


class ExperimentReport(BaseModel):
    """Outcome of one experiment run."""

    run_id: str
    experiment: str
    run_date: datetime
    seed: int
    replicates: int
    total_checks: int
    passed_checks: int
    failed_checks: int
    kind_breakdown: Dict[str, int]
    processing_time: float
    comparisons: List[ComparisonReport]
    output_files: List[str] = []

    @property
    def all_passed(self) -> bool:
        return self.failed_checks == 0

    @classmethod
    def from_comparisons(
        cls,
        run_id: str,
        experiment: str,
        seed: int,
        replicates: int,
        comparisons: List[ComparisonReport],
        processing_time: float,
        output_files: List[str] = None,
    ) -> "ExperimentReport":
        passed = sum(1 for c in comparisons if c.passed)
        breakdown: Dict[str, int] = {}
        for comparison in comparisons:
            breakdown[comparison.kind] = breakdown.get(comparison.kind, 0) + 1
        return cls(
            run_id=run_id,
            experiment=experiment,
            run_date=datetime.now(),
            seed=seed,
            replicates=replicates,
            total_checks=len(comparisons),
            passed_checks=passed,
            failed_checks=len(comparisons) - passed,
            kind_breakdown=breakdown,
            processing_time=processing_time,
            comparisons=comparisons,
            output_files=output_files or [],
        )
