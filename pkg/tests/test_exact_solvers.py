import math

import numpy as np
import pytest
from scipy.linalg import expm

from core.exact_solvers import (
    absorption_distribution_exact,
    expected_absorption_time,
    slow_generator,
    transient_distribution_exact,
    uniformize,
)
from core.measures import moment
from core.partitions import is_scattered, parse_partition, parse_unstructured, scattered_singletons, single_deme, unstructured
from core.sampling_distribution import AlleleRecursion, enumerate_allele_configs
from experiments.oracle_experiment import island_params
from models.measure import MeasureOnUnitInterval
from models.params import ModelParams


@pytest.mark.parametrize("N,m", [(1, 0.5), (10, 0.1), (100, 0.01)])
def test_island_escape_probability_and_duration(N, m):
    params = island_params(N, m)
    law = absorption_distribution_exact(single_deme(2), params)
    assert law.probability(parse_partition("1,2")) == pytest.approx((1 - m) / (1 - m + N * m), abs=1e-12)
    assert law.probability(scattered_singletons(2)) == pytest.approx(N * m / (1 - m + N * m), abs=1e-12)
    assert expected_absorption_time(single_deme(2), params) == pytest.approx(N / (2 * m * N + 2 * (1 - m)), abs=1e-12)


def test_scattered_start_is_absorbed_immediately(model_params):
    zeta = parse_partition("1,2|3")
    assert absorption_distribution_exact(zeta, model_params).as_dict() == {zeta: 1.0}
    assert expected_absorption_time(zeta, model_params) == 0.0


def test_absorption_law_is_normalized_on_scattered_states(beta_params):
    law = absorption_distribution_exact(parse_partition("1;2;3|4;5"), beta_params)
    assert sum(law.probabilities) == pytest.approx(1.0, abs=1e-12)
    assert all(is_scattered(state) for state in law.support)


def test_no_migration_merges_the_deme(half_atom):
    params = ModelParams(N=2, K=1, m1=0.0, e=1.0, lambda_d=half_atom, lambda_g=half_atom)
    law = absorption_distribution_exact(single_deme(4), params)
    assert law.support == [parse_partition("1,2,3,4")]
    assert law.probabilities == [pytest.approx(1.0, abs=1e-12)]


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_absorption_matches_the_allele_recursion(model_params, n):
    recursion = AlleleRecursion(model_params.lambda_d, model_params.m1, model_params.deme_rate_scale)
    profiles = absorption_distribution_exact(single_deme(n), model_params).marginal(
        lambda state: unstructured(state).size_profile
    )
    for config in enumerate_allele_configs(n):
        assert profiles.probability(config.counts) == pytest.approx(recursion.config_probability(config), abs=1e-10)


def test_size_guards(model_params):
    with pytest.raises(ValueError, match="Monte Carlo"):
        absorption_distribution_exact(single_deme(7), model_params)
    with pytest.raises(ValueError):
        transient_distribution_exact("slow", scattered_singletons(6), 1.0, params=model_params)


def test_slow_generator_rows_sum_to_zero(model_params):
    states, q = slow_generator(model_params, 3)
    assert len(states) == 5
    assert np.allclose(q.sum(axis=1), 0.0, atol=1e-12)
    assert (q - np.diag(np.diag(q)) >= 0).all()


def test_two_lineage_slow_law_is_exponential(model_params):
    M2d = moment(model_params.lambda_d, 2, 0)
    M2g = moment(model_params.lambda_g, 2, 0)
    N, K, m1, e = model_params.N, model_params.K, model_params.m1, model_params.e
    p_merge = M2d / (M2d + 2 * m1)
    q = e * M2g / K * (1 / N + (N - 1) / N * p_merge) + 2 * m1 / N + 2 * m1 * (N - 1) / N * p_merge

    states, generator = slow_generator(model_params, 2)
    apart = states.index(scattered_singletons(2))
    assert -generator[apart, apart] == pytest.approx(q, abs=1e-12)

    for t in (0.3, 1.0, 2.5):
        law = transient_distribution_exact("slow", scattered_singletons(2), t, params=model_params)
        assert law.probability(parse_partition("1,2")) == pytest.approx(1 - math.exp(-q * t), abs=1e-10)


def test_kingman_reference_law():
    kingman = MeasureOnUnitInterval.point_mass(0.0)
    law = transient_distribution_exact("lambda", scattered_singletons(2), 0.8, reference=kingman)
    assert law.probability(parse_unstructured("1,2")) == pytest.approx(1 - math.exp(-0.8), abs=1e-10)


def test_time_zero_is_the_initial_state(model_params):
    for process in ("fast", "slow"):
        start = scattered_singletons(3) if process == "slow" else single_deme(3)
        law = transient_distribution_exact(process, start, 0.0, params=model_params)
        assert law.as_dict() == {start: 1.0}


def test_fast_process_concentrates_on_scattered_states(model_params):
    law = transient_distribution_exact("fast", single_deme(3), 50.0, params=model_params)
    off = sum(p for state, p in law.as_dict().items() if not is_scattered(state))
    assert off < 1e-10
    assert law.metadata["truncation_error"] < 1e-10


def test_uniformization_matches_the_matrix_exponential(model_params):
    _, q = slow_generator(model_params, 3)
    start = np.zeros(len(q))
    start[0] = 1.0
    law, error = uniformize(q, start, 0.7)
    assert error < 1e-10
    assert np.allclose(law, start @ expm(0.7 * q), atol=1e-10)


def test_unknown_process_is_rejected(model_params):
    with pytest.raises(ValueError, match="unknown process"):
        transient_distribution_exact("brownian", scattered_singletons(2), 1.0, params=model_params)
