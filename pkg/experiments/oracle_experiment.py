from typing import Dict, List, Tuple

import numpy as np
import pandas as pd

from core.exact_solvers import absorption_distribution_exact, expected_absorption_time, slow_generator, transient_distribution_exact
from core.genealogy_sim import FastProcess, LimitProcess
from core.measures import moment
from core.partitions import parse_partition, scattered_singletons, single_deme
from core.sampling_distribution import p_allele_config
from core.statistics import exponential_rate_mle, goodness_of_fit
from experiments.base_experiment import BaseExperiment
from experiments.runner import PathTask, run_replicates
from experiments.simulate_experiment import marginal_outcomes
from models.comparison_report import ComparisonReport
from models.measure import MeasureOnUnitInterval
from models.params import ModelParams

EXACT_TOLERANCE = 1e-12
ORACLE_N = 3


def island_params(N: int, m: float) -> ModelParams:
    """Two-lineage island model: pair merge rate 2(1-m)/N and move rate m per lineage."""
    delta_one = MeasureOnUnitInterval.point_mass(1.0)
    return ModelParams(N=N, K=1, m1=m, e=0.0, lambda_d=delta_one, lambda_g=delta_one, deme_rate_scale=2 * (1 - m) / N)


class _AbsorbsMerged:
    """Replicate task: does a fast phase from two co-resident lineages end merged?"""

    def __init__(self, params: ModelParams):
        self.params = params

    def __call__(self, rng) -> bool:
        state = FastProcess(self.params).absorb(single_deme(2), rng)[0]
        return state.block_count == 1


class _PairCoalescenceTime:
    def __init__(self, params: ModelParams):
        self.params = params

    def __call__(self, rng) -> float:
        return LimitProcess(self.params).simulate(scattered_singletons(2), rng, until_mrca=True).terminal_time


class OracleExperiment(BaseExperiment):
    """Closed-form and uniformization oracles for the fast, slow and reference processes."""

    def _get_experiment_name(self) -> str:
        return "oracle"

    def validate_config(self) -> List[str]:
        problems = []
        for N, m in self.config.island_cases:
            if N < 1 or not 0 <= m <= 1:
                problems.append(f"island case (N={N}, m={m}) needs N >= 1 and m in [0,1]")
        return problems

    def execute(self) -> Tuple[Dict[str, pd.DataFrame], List[ComparisonReport]]:
        comparisons: List[ComparisonReport] = []
        island_rows = self._island_checks(comparisons)
        kingman_rows = self._kingman_part_checks(comparisons)
        transient_rows = self._transient_checks(comparisons)
        tables = {
            "island": pd.DataFrame(island_rows),
            "kingman_part": pd.DataFrame(kingman_rows),
            "transient": pd.DataFrame(transient_rows),
        }
        return tables, comparisons

    def _island_checks(self, comparisons: List[ComparisonReport]) -> List[dict]:
        config = self.config
        rows = []
        for case_index, (N, m) in enumerate(config.island_cases):
            params = island_params(N, m)
            start = single_deme(2)
            merged_state = parse_partition("1,2", 2)
            formula = (1 - m) / (1 - m + N * m)
            exact = absorption_distribution_exact(start, params).probability(merged_state)
            mean_formula = N / (2 * m * N + 2 * (1 - m))
            mean_exact = expected_absorption_time(start, params)

            outcomes = run_replicates(
                _AbsorbsMerged(params),
                config.seed,
                config.replicates,
                config.jobs,
                description=f"island N={N}",
                offset=case_index * config.replicates,
            )
            frequency = float(np.mean(outcomes))
            standard_error = float(np.sqrt(max(formula * (1 - formula), 1e-300) / len(outcomes)))

            comparisons.append(ComparisonReport.evaluate(
                f"island P(merge) exact N={N} m={m}", "exact", exact, formula, "PAPER", tolerance=EXACT_TOLERANCE
            ))
            comparisons.append(ComparisonReport.evaluate(
                f"island P(merge) Monte Carlo N={N} m={m}", "mean-with-CI", frequency, formula, "PAPER",
                standard_error=standard_error,
            ))
            comparisons.append(ComparisonReport.evaluate(
                f"island mean fast-phase duration N={N} m={m}", "exact", mean_exact, mean_formula, "PAPER",
                tolerance=EXACT_TOLERANCE,
            ))
            rows.append({
                "N": N, "m": m, "p_merge_formula": formula, "p_merge_exact": exact,
                "p_merge_monte_carlo": frequency, "monte_carlo_se": standard_error,
                "mean_time_formula": mean_formula, "mean_time_exact": mean_exact,
            })
        return rows

    def _kingman_part_checks(self, comparisons: List[ComparisonReport]) -> List[dict]:
        config = self.config
        params = config.model.with_updates(deme_rate_scale=1.0)
        N, m1 = params.N, params.m1
        lambda_2 = moment(params.lambda_d, 2, 0)
        p_two = p_allele_config((2,), params.lambda_d, m1)
        via_recursion = 2 * m1 / N + 2 * m1 * (N - 1) / N * p_two
        closed = (2 * m1 / N) * (1 + (N - 1) * lambda_2 / (lambda_2 + 2 * m1)) if m1 > 0 else 0.0

        without_extinction = params.with_updates(e=0.0)
        states, q = slow_generator(without_extinction, 2)
        apart = states.index(scattered_singletons(2))
        generator_rate = float(-q[apart, apart])

        comparisons.append(ComparisonReport.evaluate(
            "Kingman-part rate: recursion vs closed form", "exact", via_recursion, closed, "PAPER", tolerance=EXACT_TOLERANCE
        ))
        comparisons.append(ComparisonReport.evaluate(
            "Kingman-part rate: slow generator vs closed form", "exact", generator_rate, closed, "DERIVED", tolerance=1e-10
        ))
        row = {"N": N, "m1": m1, "lambda_2": lambda_2, "p_2": p_two, "rate_recursion": via_recursion,
               "rate_closed_form": closed, "rate_generator": generator_rate}

        if m1 > 0:
            times = run_replicates(
                _PairCoalescenceTime(without_extinction),
                config.seed,
                config.replicates,
                config.jobs,
                description="pair coalescence",
                offset=len(config.island_cases) * config.replicates,
            )
            estimate = exponential_rate_mle(len(times), float(np.sum(times)))
            comparisons.append(ComparisonReport.evaluate(
                "pair coalescence rate MLE (e=0)", "rate-MLE", estimate.estimate, closed, "PAPER",
                standard_error=estimate.standard_error,
            ))
            row.update({"rate_mle": estimate.estimate, "rate_mle_se": estimate.standard_error})
        else:
            self.logger.info("m1 = 0: lineages never meet without extinctions, skipping the pair-coalescence MLE")
        return [row]

    def _transient_checks(self, comparisons: List[ComparisonReport]) -> List[dict]:
        config = self.config
        grid = config.time_grid[:2]
        setups = [
            ("fast", single_deme(ORACLE_N), None),
            ("slow", scattered_singletons(ORACLE_N), None),
            ("lambda", scattered_singletons(ORACLE_N), config.lambda_reference),
        ]
        rows = []
        for setup_index, (process, initial, reference) in enumerate(setups):
            task = PathTask(process, initial, params=config.model, horizon=grid[-1], reference=reference)
            paths = run_replicates(
                task,
                config.seed,
                config.replicates,
                config.jobs,
                description=f"{process} oracle",
                offset=(len(config.island_cases) + 1 + setup_index) * config.replicates,
            )
            for t in grid:
                exact = transient_distribution_exact(process, initial, t, params=config.model, reference=reference)
                comparisons.append(goodness_of_fit(
                    marginal_outcomes(paths, t, process), exact, name=f"{process} n={ORACLE_N} t={t} vs uniformization"
                ))
                for state, p in exact.as_dict().items():
                    rows.append({
                        "process": process, "time": t, "partition": state.to_text(), "probability": p,
                        "truncation_error": exact.metadata.get("truncation_error", 0.0),
                    })
        return rows
