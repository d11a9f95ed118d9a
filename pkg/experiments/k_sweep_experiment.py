import math
from typing import Dict, List, Tuple

import pandas as pd

from core.exact_solvers import MAX_ABSORPTION_N, slow_generator
from core.measures import moment
from core.partitions import canonicalize, scattered_singletons
from core.statistics import merger_rate_mle
from experiments.base_experiment import BaseExperiment
from experiments.runner import PathTask, run_replicates
from models.comparison_report import ComparisonReport
from models.params import ModelParams

LIMIT_RELATIVE_TOLERANCE = 0.10
MULTIPLE_MERGER_CEILING = 0.01
LAMBDA_REGIME_RELATIVE_TOLERANCE = 0.05
MIN_EVENTS = 100


def exact_pair_rate(params: ModelParams, n: int) -> float:
    """Rate at which one given pair of n scattered lineages merges (and nothing else does)."""
    states, q = slow_generator(params, n)
    start = scattered_singletons(n)
    target = canonicalize([[[1, 2]]] + [[[i]] for i in range(3, n + 1)], n)
    return float(q[states.index(start), states.index(target)])


class KSweepExperiment(BaseExperiment):
    """Binary-merger rate times K and the multiple-merger frequency as the number of source demes grows."""

    def _get_experiment_name(self) -> str:
        return "k-sweep"

    def validate_config(self) -> List[str]:
        problems = []
        if self.config.n < 2:
            problems.append("k-sweep needs at least two lineages")
        if self.config.model.e <= 0 and self.config.model.m1 <= 0:
            problems.append("with e = 0 and m1 = 0 no lineages ever merge")
        return problems

    def execute(self) -> Tuple[Dict[str, pd.DataFrame], List[ComparisonReport]]:
        config = self.config
        n = config.n
        if config.model.m1 > 0:
            self.logger.warning(f"m1={config.model.m1} > 0: the K -> infinity Kingman limit is stated for m1 = 0")
        limit_rate = config.model.e * moment(config.model.lambda_g, 2, 0)
        pair_key = (n, (2,))

        rows, rate_rows = [], []
        comparisons: List[ComparisonReport] = []
        for k_index, K in enumerate(config.k_values):
            params = config.model.with_updates(K=K)
            task = PathTask("slow", scattered_singletons(n), params=params, until_mrca=True)
            paths = run_replicates(
                task, config.seed, config.replicates, config.jobs,
                description=f"K={K}", offset=k_index * config.replicates,
            )
            estimates = merger_rate_mle(paths, expected_keys=[pair_key])
            merging_events = sum(e.count for e in estimates.values())
            multiple = sum(e.count for key, e in estimates.items() if key[1] != (2,))
            frequency = multiple / merging_events if merging_events else 0.0

            pairs = math.comb(n, 2)
            pair = estimates[pair_key]
            pair_rate = pair.estimate / pairs if pair.defined else float("nan")
            pair_se = pair.standard_error / pairs if pair.defined else float("nan")
            row = {
                "K": K,
                "pair_rate": pair_rate,
                "pair_rate_se": pair_se,
                "pair_rate_times_K": pair_rate * K,
                "pair_rate_times_K_se": pair_se * K,
                "multiple_merger_frequency": frequency,
                "merging_events": merging_events,
                "regime": "lambda-coalescent" if K == 1 else "",
            }

            if n <= MAX_ABSORPTION_N and pair.defined:
                exact = exact_pair_rate(params, n)
                row["pair_rate_exact"] = exact
                comparisons.append(ComparisonReport.evaluate(
                    f"pair rate K={K} vs slow generator", "rate-MLE", pair_rate, exact, "DERIVED", standard_error=pair_se
                ))
            rows.append(row)

            for key, estimate in sorted(estimates.items(), key=lambda kv: str(kv[0])):
                rate_rows.append({
                    "K": K, "blocks": key[0], "groups": "+".join(str(g) for g in key[1]),
                    "count": estimate.count, "exposure": estimate.exposure,
                    "rate": estimate.estimate, "standard_error": estimate.standard_error,
                })

            if K == 1 and config.model.m1 == 0:
                comparisons.extend(self._lambda_regime_checks(params, estimates))

        largest = rows[-1]
        if not math.isnan(largest["pair_rate_times_K"]):
            comparisons.append(ComparisonReport.evaluate(
                f"pair rate x K at K={largest['K']} vs e*int y^2", "rate-MLE",
                largest["pair_rate_times_K"], limit_rate, "PAPER",
                standard_error=largest["pair_rate_times_K_se"],
                tolerance=LIMIT_RELATIVE_TOLERANCE * limit_rate,
            ))
        comparisons.append(ComparisonReport.evaluate(
            f"multiple-merger frequency at K={largest['K']}", "mean-with-CI",
            largest["multiple_merger_frequency"], 0.0, "PAPER", tolerance=MULTIPLE_MERGER_CEILING,
        ))

        frequencies = [r["multiple_merger_frequency"] for r in rows]
        decreasing = all(b < a for a, b in zip(frequencies, frequencies[1:]))
        self.logger.info(f"multiple-merger frequency strictly decreasing in K: {decreasing}")
        for r in rows:
            r["frequency_strictly_decreasing"] = decreasing

        return {"k_sweep": pd.DataFrame(rows), "merger_rates": pd.DataFrame(rate_rows)}, comparisons

    def _lambda_regime_checks(self, params: ModelParams, estimates) -> List[ComparisonReport]:
        """K = 1, m1 = 0: every k-of-m merger happens at rate C(m,k) e int y^k (1-y)^(m-k) Lambda^g(dy)."""
        checks = []
        for (m, groups), estimate in sorted(estimates.items(), key=lambda kv: str(kv[0])):
            if len(groups) != 1 or estimate.count < MIN_EVENTS:
                continue
            k = groups[0]
            reference = math.comb(m, k) * params.e * moment(params.lambda_g, k, m - k)
            se = estimate.standard_error
            # pass iff the gap is within the larger of 5% and 3 standard errors
            tolerance = max(LAMBDA_REGIME_RELATIVE_TOLERANCE * reference - 3 * se, 0.0)
            checks.append(ComparisonReport.evaluate(
                f"K=1 merger rate m={m} k={k}", "rate-MLE", estimate.estimate, reference, "PAPER",
                standard_error=se, tolerance=tolerance,
            ))
        return checks
