from typing import Dict, List, Tuple

import numpy as np
import pandas as pd

from core.coalescent_rates import (
    check_fast_consistency,
    check_lambda_g_consistency,
    fast_table_for,
    validate_fast_table,
)
from core.partitions import enumerate_structured, restrict, scattered_singletons, unstructured
from core.seeding import replicate_rng
from core.statistics import tv_distance
from experiments.base_experiment import BaseExperiment
from experiments.runner import PathTask, run_replicates
from models.comparison_report import ComparisonReport
from models.measure import MeasureOnUnitInterval
from models.params import ModelParams

CONSISTENCY_TOLERANCE = 1e-10
DRAW_SEED_OFFSET = 1_000_003


def random_measure(rng: np.random.Generator) -> MeasureOnUnitInterval:
    """A probability measure on (0,1]: one or two atoms, or a Beta law."""
    if rng.random() < 0.5:
        locations = rng.uniform(0.05, 1.0, size=int(rng.integers(1, 3)))
        weights = rng.dirichlet(np.ones(len(locations)))
        return MeasureOnUnitInterval(atoms=tuple((float(x), float(w)) for x, w in zip(locations, weights)))
    return MeasureOnUnitInterval.beta(float(rng.uniform(0.5, 3.0)), float(rng.uniform(0.5, 3.0)))


def random_params(rng: np.random.Generator) -> ModelParams:
    return ModelParams(
        N=int(rng.choice([1, 2, 5])),
        K=int(rng.choice([1, 2, 3])),
        m1=float(rng.uniform(0.0, 2.0)),
        e=float(rng.uniform(0.1, 2.0)),
        lambda_d=random_measure(rng),
        lambda_g=random_measure(rng),
    )


class VerifyConsistencyExperiment(BaseExperiment):
    """Projective consistency of the collision and fast rates, and sampling consistency of the limit process."""

    def _get_experiment_name(self) -> str:
        return "verify-consistency"

    def validate_config(self) -> List[str]:
        return []

    def execute(self) -> Tuple[Dict[str, pd.DataFrame], List[ComparisonReport]]:
        config = self.config
        comparisons: List[ComparisonReport] = []
        rows = []

        for draw in range(config.consistency_draws):
            rng = replicate_rng(config.seed + DRAW_SEED_OFFSET, draw)
            params = random_params(rng)
            collision_defect = check_lambda_g_consistency(params, config.k_max)
            fast_defect = check_fast_consistency(params, config.k_max)
            rows.append({
                "draw": draw, "N": params.N, "K": params.K, "m1": params.m1, "e": params.e,
                "lambda_d": str(params.lambda_d.to_config()), "lambda_g": str(params.lambda_g.to_config()),
                "collision_rate_defect": collision_defect, "fast_rate_defect": fast_defect,
            })
            comparisons.append(ComparisonReport.evaluate(
                f"collision-rate consistency draw {draw}", "exact", collision_defect, 0.0, "PAPER",
                tolerance=CONSISTENCY_TOLERANCE,
            ))
            comparisons.append(ComparisonReport.evaluate(
                f"fast-rate consistency draw {draw}", "exact", fast_defect, 0.0, "PAPER",
                tolerance=CONSISTENCY_TOLERANCE,
            ))

        table: Dict = {}
        for k in range(1, config.k_max + 1):
            for state in enumerate_structured(k):
                table.update(fast_table_for(config.model, state))
        diagnostics = validate_fast_table(table)
        comparisons.append(ComparisonReport(
            name="fast transitions respect the occupancy order",
            kind="exact",
            estimate=float(len(diagnostics.invalid_transitions) + len(diagnostics.absorbing_profiles)),
            reference=0.0,
            provenance="PAPER",
            passed=diagnostics.is_valid,
            details={"invalid": [str(x) for x in diagnostics.invalid_transitions],
                     "absorbing": [str(x) for x in diagnostics.absorbing_profiles]},
        ))

        comparisons.append(self._sampling_consistency())
        return {"consistency": pd.DataFrame(rows)}, comparisons

    def _sampling_consistency(self) -> ComparisonReport:
        """Limit process from n+1 singletons restricted to [n] vs a direct n-sample, at the last grid time."""
        config = self.config
        n, t = config.n, config.horizon
        larger = PathTask("slow", scattered_singletons(n + 1), params=config.model, horizon=t)
        direct = PathTask("slow", scattered_singletons(n), params=config.model, horizon=t)
        larger_paths = run_replicates(larger, config.seed, config.replicates, config.jobs, description=f"n={n + 1}")
        direct_paths = run_replicates(
            direct, config.seed, config.replicates, config.jobs, description=f"n={n}", offset=config.replicates
        )
        restricted = [unstructured(restrict(path.state_at(t), n)) for path in larger_paths]
        sampled = [path.unstructured_at(t) for path in direct_paths]
        return tv_distance(
            restricted,
            sampled,
            name=f"sampling consistency n={n + 1} -> {n} at t={t}",
            provenance="PAPER",
            rng=replicate_rng(config.seed, 2 * config.replicates),
        )
