import numpy as np
import pytest

from core.measures import moment
from core.sampling_distribution import (
    AlleleRecursion,
    config_probability,
    enumerate_allele_configs,
    p_allele_config,
    p_total_check,
    partition_probability,
    singleton_monotonicity_diagnostic,
)
from experiments.verify_consistency_experiment import random_measure
from models.allele_config import AlleleConfig
from models.measure import MeasureOnUnitInterval


def test_single_allele():
    assert p_allele_config((1,), MeasureOnUnitInterval.uniform(), 0.4) == 1.0


def test_two_lineages(half_atom):
    m1 = 0.35
    lambda_2 = moment(half_atom, 2, 0)
    assert p_allele_config((2,), half_atom, m1) == pytest.approx(lambda_2 / (lambda_2 + 2 * m1))
    assert p_allele_config((1, 1), half_atom, m1) == pytest.approx(2 * m1 / (lambda_2 + 2 * m1))
    assert p_allele_config((2,), half_atom, m1) + p_allele_config((1, 1), half_atom, m1) == pytest.approx(1.0)


def test_scale_multiplies_the_within_deme_rates(half_atom):
    assert p_allele_config((2,), half_atom, 0.5, scale=4.0) == pytest.approx(1.0 / (1.0 + 1.0))


def test_ordering_and_partition_conversions(half_atom):
    recursion = AlleleRecursion(half_atom, 0.5)
    config = AlleleConfig(counts=(1, 2))
    assert recursion.config_probability(config) == pytest.approx(2 * recursion.probability(config))
    assert recursion.partition_probability(config) == pytest.approx(recursion.config_probability(config) / 3)
    assert config_probability(config, half_atom, 0.5) == pytest.approx(recursion.config_probability(config))
    assert partition_probability(config, half_atom, 0.5) == pytest.approx(recursion.partition_probability(config))


def test_normalization_over_random_draws():
    rng = np.random.default_rng(21)
    for _ in range(20):
        measure = random_measure(rng)
        m1 = float(rng.uniform(0.0, 3.0))
        for n in range(2, 9):
            assert p_total_check(n, measure, m1) < 1e-10


def test_fast_migration_leaves_all_singletons(half_atom):
    singletons = AlleleConfig(counts=(1, 1, 1, 1))
    assert config_probability(singletons, half_atom, 1e6) == pytest.approx(1.0, abs=1e-4)


def test_memo_is_per_instance(half_atom):
    slow = AlleleRecursion(half_atom, 0.1)
    fast = AlleleRecursion(half_atom, 2.0)
    assert slow.probability((3,)) > fast.probability((3,))
    assert slow.probability((3,)) == AlleleRecursion(half_atom, 0.1).probability((3,))


def test_guards(half_atom):
    with pytest.raises(ValueError):
        p_allele_config((31,), half_atom, 0.5)
    with pytest.raises(ValueError):
        p_total_check(11, half_atom, 0.5)
    with pytest.raises(ValueError):
        AlleleRecursion(half_atom, -0.1)


def test_no_exit_is_rejected(half_atom):
    with pytest.raises(ValueError, match="no transition"):
        p_allele_config((2,), half_atom, 0.0, scale=0.0)


def test_allele_config_counts():
    config = AlleleConfig(counts=(1, 2, 1))
    assert config.counts == (2, 1, 1)
    assert (config.n, config.k) == (4, 3)
    assert config.ordering_count == 3
    assert config.set_partition_count == 6
    assert config.label() == "2+1+1"
    with pytest.raises(ValueError):
        AlleleConfig(counts=(2, 0))


def test_enumerated_configs_cover_the_set_partitions():
    configs = enumerate_allele_configs(5)
    assert len(configs) == 7
    assert sum(c.set_partition_count for c in configs) == 52


def test_singleton_monotonicity(half_atom):
    assert singleton_monotonicity_diagnostic(4, half_atom, [0.0, 0.5, 1.0, 5.0])
