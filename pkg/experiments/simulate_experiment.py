import math
from collections import Counter
from typing import Dict, List, Tuple

import pandas as pd

from core.exact_solvers import MAX_TRANSIENT_N, transient_distribution_exact
from core.statistics import goodness_of_fit
from experiments.base_experiment import BaseExperiment
from experiments.runner import PathTask, run_replicates
from models.comparison_report import ComparisonReport
from models.path_sample import PathSample

EXACT_PROCESSES = ("fast", "slow", "lambda", "xi")


def marginal_outcomes(paths: List[PathSample], t: float, process: str) -> list:
    """State of every replicate at time t; reference coalescents are compared without deme structure."""
    if process in ("lambda", "xi", "finite-d"):
        return [path.unstructured_at(t) for path in paths]
    return [path.state_at(t) for path in paths]


def marginal_table(paths: List[PathSample], grid: List[float], process: str) -> pd.DataFrame:
    rows = []
    total = len(paths)
    for t in grid:
        counts = Counter(marginal_outcomes(paths, t, process))
        for outcome in sorted(counts, key=str):
            frequency = counts[outcome] / total
            rows.append({
                "time": t,
                "partition": outcome.to_text(),
                "blocks": outcome.block_count,
                "count": counts[outcome],
                "frequency": frequency,
                "standard_error": math.sqrt(frequency * (1 - frequency) / total),
            })
    return pd.DataFrame(rows, columns=["time", "partition", "blocks", "count", "frequency", "standard_error"])


class SimulateExperiment(BaseExperiment):
    """Monte Carlo marginals of any process on the time grid, checked against uniformization when small."""

    def _get_experiment_name(self) -> str:
        return "simulate"

    def validate_config(self) -> List[str]:
        problems = []
        if self.config.process == "finite-d" and self.config.finite_d.D < self.config.initial_state().deme_count:
            problems.append(f"D={self.config.finite_d.D} is smaller than the number of occupied demes")
        return problems

    def execute(self) -> Tuple[Dict[str, pd.DataFrame], List[ComparisonReport]]:
        config = self.config
        task = PathTask.from_config(config)
        self.logger.info(f"Simulating {config.replicates} {config.process} genealogies up to t={config.horizon}")
        paths = run_replicates(task, config.seed, config.replicates, config.jobs, description=config.process)

        tables = {"marginals": marginal_table(paths, config.time_grid, config.process)}
        if config.saved_paths:
            tables["paths"] = self.exporter.paths_frame(paths[: config.saved_paths])

        comparisons = []
        if config.process in EXACT_PROCESSES and config.n <= MAX_TRANSIENT_N:
            for t in config.time_grid:
                exact = transient_distribution_exact(
                    config.process,
                    config.initial_state(),
                    t,
                    params=config.model,
                    reference=task.reference,
                )
                comparisons.append(goodness_of_fit(
                    marginal_outcomes(paths, t, config.process),
                    exact,
                    name=f"{config.process} marginal at t={t} vs uniformization",
                ))
        else:
            self.logger.info("No exact oracle for this process and sample size; reporting marginals only")
        return tables, comparisons
