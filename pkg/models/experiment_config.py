from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from models.measure import MeasureOnUnitInterval, XiMeasure
from models.params import FiniteDConfig, ModelParams
from models.partition import StructuredPartition

Process = Literal["fast", "slow", "finite-d", "lambda", "xi"]


class ExperimentConfig(BaseModel):
    """Everything one CLI run needs."""

    model: ModelParams
    process: Process = "slow"
    finite_d: Optional[FiniteDConfig] = None
    reference_lambda: Optional[MeasureOnUnitInterval] = None
    reference_xi: Optional[XiMeasure] = None
    n: int = Field(default=3, ge=1)
    initial: str = "scattered"  # partition text, "scattered" or "single-deme"
    replicates: int = Field(default=1000, ge=1)
    time_grid: List[float] = [0.5, 1.0]
    seed: int = Field(default=0, ge=0)
    output_path: str = "output"
    jobs: int = Field(default=1, ge=1)
    saved_paths: int = Field(default=0, ge=0)  # replicates whose full event list is written

    # experiment-specific knobs
    k_values: List[int] = [1, 2, 5, 20, 50]
    d_values: List[int] = [30, 100, 300, 1000]
    k_max: int = Field(default=5, ge=2, le=6)
    consistency_draws: int = Field(default=10, ge=1)
    max_total_check_n: int = Field(default=8, ge=2, le=10)
    island_cases: List[Tuple[int, float]] = [(1, 0.5), (10, 0.1), (100, 0.01)]

    @field_validator("time_grid")
    @classmethod
    def _check_grid(cls, grid):
        if not grid:
            raise ValueError("time grid must not be empty")
        if grid[0] < 0:
            raise ValueError(f"time grid starts at negative time {grid[0]}")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError(f"time grid {grid} is not strictly increasing")
        return grid

    @field_validator("k_values", "d_values")
    @classmethod
    def _check_ladder(cls, values):
        if not values or any(v < 1 for v in values):
            raise ValueError(f"ladder {values} must be non-empty and positive")
        return sorted(set(values))

    @model_validator(mode="after")
    def _check_process(self):
        if self.process == "finite-d" and self.finite_d is None:
            raise ValueError("process finite-d needs a finite_d section (D, time_rescale)")
        if self.process == "xi" and self.reference_xi is None:
            raise ValueError("process xi needs a reference xi measure")
        self.initial_state()
        return self

    @property
    def horizon(self) -> float:
        return self.time_grid[-1]

    @property
    def lambda_reference(self) -> MeasureOnUnitInterval:
        return self.reference_lambda or self.model.lambda_d

    def initial_state(self, n: Optional[int] = None) -> StructuredPartition:
        from core.partitions import parse_partition, scattered_singletons, single_deme

        size = n or self.n
        if self.initial == "scattered":
            return scattered_singletons(size)
        if self.initial == "single-deme":
            return single_deme(size)
        return parse_partition(self.initial, size)
