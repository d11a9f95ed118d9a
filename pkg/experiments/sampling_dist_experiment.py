from typing import Dict, List, Tuple

import pandas as pd

from core.exact_solvers import MAX_ABSORPTION_N, absorption_distribution_exact
from core.partitions import block_size_profile, single_deme
from core.sampling_distribution import (
    AlleleRecursion,
    enumerate_allele_configs,
    p_total_check,
    singleton_monotonicity_diagnostic,
)
from core.seeding import replicate_rng
from experiments.base_experiment import BaseExperiment
from experiments.verify_consistency_experiment import random_params
from models.allele_config import AlleleConfig
from models.comparison_report import ComparisonReport
from models.params import ModelParams

EXACT_TOLERANCE = 1e-10
CROSS_CHECK_MAX_N = 5
DRAW_SEED_OFFSET = 2_000_003
MONOTONICITY_M1 = (0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0)


def recursion_vs_absorption(params: ModelParams, n: int) -> float:
    """Largest gap between the recursion and the absorption solver from one deme, per partition and per profile."""
    recursion = AlleleRecursion(params.lambda_d, params.m1, params.deme_rate_scale)
    law = absorption_distribution_exact(single_deme(n), params)
    worst = 0.0
    for state, p in law.as_dict().items():
        config = AlleleConfig(counts=block_size_profile(state))
        worst = max(worst, abs(recursion.partition_probability(config) - p))
    profiles = law.marginal(block_size_profile).as_dict()
    for config in enumerate_allele_configs(n):
        worst = max(worst, abs(recursion.config_probability(config) - profiles.get(config.counts, 0.0)))
    return worst


class SamplingDistExperiment(BaseExperiment):
    """Allele-configuration probabilities of the fast phase from one deme, with normalization and cross-checks."""

    def _get_experiment_name(self) -> str:
        return "sampling-dist"

    def validate_config(self) -> List[str]:
        if self.config.model.m1 == 0 and self.config.model.deme_rate_scale == 0:
            return ["with m1 = 0 and no within-deme mergers the fast phase never ends"]
        return []

    def execute(self) -> Tuple[Dict[str, pd.DataFrame], List[ComparisonReport]]:
        config = self.config
        params = config.model
        recursion = AlleleRecursion(params.lambda_d, params.m1, params.deme_rate_scale)

        rows = []
        for allele_config in enumerate_allele_configs(config.n):
            rows.append({
                "config": allele_config.label(),
                "probability": recursion.probability(allele_config),
                "config_probability": recursion.config_probability(allele_config),
                "partition_probability": recursion.partition_probability(allele_config),
                "multiplicity": allele_config.set_partition_count,
            })

        comparisons: List[ComparisonReport] = []
        draws = [params] + [
            random_params(replicate_rng(config.seed + DRAW_SEED_OFFSET, i)) for i in range(config.consistency_draws)
        ]
        check_rows = []
        for draw, draw_params in enumerate(draws):
            for n in range(2, config.max_total_check_n + 1):
                defect = p_total_check(n, draw_params.lambda_d, draw_params.m1, draw_params.deme_rate_scale)
                check_rows.append({"draw": draw, "n": n, "check": "normalization", "defect": defect})
                comparisons.append(ComparisonReport.evaluate(
                    f"normalization draw {draw} n={n}", "exact", defect, 0.0, "DERIVED", tolerance=EXACT_TOLERANCE
                ))
            for n in range(2, min(CROSS_CHECK_MAX_N, MAX_ABSORPTION_N) + 1):
                gap = recursion_vs_absorption(draw_params, n)
                check_rows.append({"draw": draw, "n": n, "check": "absorption", "defect": gap})
                comparisons.append(ComparisonReport.evaluate(
                    f"recursion vs absorption solver draw {draw} n={n}", "exact", gap, 0.0, "PAPER",
                    tolerance=EXACT_TOLERANCE,
                ))

        monotone = singleton_monotonicity_diagnostic(config.n, params.lambda_d, MONOTONICITY_M1, params.deme_rate_scale)
        if not monotone:
            self.logger.warning("P(all singletons) is not monotone in m1 (heuristic diagnostic, not a failure)")

        return {"configurations": pd.DataFrame(rows), "checks": pd.DataFrame(check_rows)}, comparisons
