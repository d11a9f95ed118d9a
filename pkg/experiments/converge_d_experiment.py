from typing import Dict, List, Tuple

import pandas as pd

from core.exact_solvers import MAX_TRANSIENT_N, transient_distribution_exact
from core.partitions import unstructured
from core.seeding import replicate_rng
from core.statistics import tv_distance
from experiments.base_experiment import BaseExperiment
from experiments.runner import PathTask, run_replicates
from models.comparison_report import ComparisonReport
from models.params import FiniteDConfig

FINAL_TV_CEILING = 0.05
MONOTONE_SLACK_SE = 2.0


class ConvergeDExperiment(BaseExperiment):
    """TV distance between the finite-D marginal and the limit-process marginal over a ladder of D."""

    def _get_experiment_name(self) -> str:
        return "converge-d"

    def validate_config(self) -> List[str]:
        occupied = self.config.initial_state().deme_count
        return [f"D={D} is smaller than the {occupied} occupied demes" for D in self.config.d_values if D < occupied]

    def _limit_reference(self, t: float):
        config = self.config
        initial = config.initial_state()
        if config.n <= MAX_TRANSIENT_N:
            exact = transient_distribution_exact("slow", initial, t, params=config.model)
            return exact.marginal(unstructured)
        self.logger.info(f"n={config.n} is too large for uniformization; simulating the limit process instead")
        task = PathTask("slow", initial, params=config.model, horizon=t)
        paths = run_replicates(task, config.seed, config.replicates, config.jobs, description="limit")
        return [path.unstructured_at(t) for path in paths]

    def execute(self) -> Tuple[Dict[str, pd.DataFrame], List[ComparisonReport]]:
        config = self.config
        t = config.horizon
        time_rescale = config.finite_d.time_rescale if config.finite_d else True
        reference = self._limit_reference(t)

        rows = []
        reports = []
        for index, D in enumerate(config.d_values):
            task = PathTask(
                "finite-d", config.initial_state(), params=config.model, horizon=t,
                finite_d=FiniteDConfig(D=D, time_rescale=time_rescale),
            )
            paths = run_replicates(
                task, config.seed, config.replicates, config.jobs,
                description=f"D={D}", offset=(index + 1) * config.replicates,
            )
            report = tv_distance(
                [path.unstructured_at(t) for path in paths],
                reference,
                name=f"finite-D vs limit, D={D}, t={t}",
                provenance="PAPER",
                rng=replicate_rng(config.seed, (len(config.d_values) + 1) * config.replicates + index),
            )
            reports.append(report)
            rows.append({"D": D, "time": t, "tv": report.estimate, "standard_error": report.standard_error})

        monotone = all(
            later.estimate <= earlier.estimate + MONOTONE_SLACK_SE * max(earlier.standard_error, later.standard_error)
            for earlier, later in zip(reports, reports[1:])
        )
        for row in rows:
            row["monotone_non_increasing"] = monotone

        final = reports[-1]
        comparisons = [
            ComparisonReport(
                name="TV non-increasing over the D ladder (2 SE slack)",
                kind="total-variation",
                estimate=float(sum(1 for a, b in zip(reports, reports[1:]) if b.estimate > a.estimate)),
                reference=0.0,
                provenance="PAPER",
                passed=monotone,
                details={"tv": [r.estimate for r in reports], "se": [r.standard_error for r in reports]},
            ),
            ComparisonReport.evaluate(
                f"TV at D={config.d_values[-1]} below {FINAL_TV_CEILING}", "total-variation",
                final.estimate, 0.0, "PAPER", tolerance=FINAL_TV_CEILING,
            ),
        ]
        return {"converge_d": pd.DataFrame(rows)}, comparisons
