"""Infinitely-many-alleles sampling recursion for the fast phase started from one deme.

Lineages of one deme merge like a Lambda-coalescent with measure x^2 Lambda^d(dx)
and leave for empty demes at rate m1, which plays the part of mutation to a new
type. ``AlleleRecursion.probability`` evaluates the recursion exactly as it is
usually printed; that value is the probability of one ordering of the allele
counts, so ``config_probability`` and ``partition_probability`` turn it into the
law of the unordered configuration and of one specific partition of [n].
"""

import logging
from typing import Dict, Iterable, List, Sequence, Union

from sympy.utilities.iterables import partitions as integer_partitions

from core.coalescent_rates import GRates, g_rates
from models.allele_config import AlleleConfig
from models.measure import MeasureOnUnitInterval

logger = logging.getLogger(__name__)

MAX_RECURSION_N = 30
MAX_TOTAL_CHECK_N = 10

ConfigLike = Union[AlleleConfig, Sequence[int]]


def _as_config(config: ConfigLike) -> AlleleConfig:
    return config if isinstance(config, AlleleConfig) else AlleleConfig(counts=tuple(config))


def enumerate_allele_configs(n: int) -> List[AlleleConfig]:
    if n < 1:
        raise ValueError(f"sample size must be positive, got {n}")
    return [
        AlleleConfig(counts=tuple(part for part, mult in p.items() for _ in range(mult)))
        for p in integer_partitions(n)
    ]


class AlleleRecursion:
    """Memoized evaluation for one (Lambda^d, m1, scale); the memo lives with the instance."""

    def __init__(self, lambda_d: MeasureOnUnitInterval, m1: float, scale: float = 1.0):
        if m1 < 0:
            raise ValueError(f"m1 must be nonnegative, got {m1}")
        self.lambda_d = lambda_d
        self.m1 = m1
        self.scale = scale
        self._memo: Dict[tuple, float] = {(1,): 1.0}
        self._g: Dict[int, GRates] = {}

    def _rates(self, n: int) -> GRates:
        if n not in self._g:
            self._g[n] = g_rates(self.lambda_d, n, self.scale)
        return self._g[n]

    def probability(self, config: ConfigLike) -> float:
        counts = _as_config(config).counts
        if sum(counts) > MAX_RECURSION_N:
            raise ValueError(f"recursion refused for n={sum(counts)} > {MAX_RECURSION_N}")
        return self._evaluate(counts)

    def _evaluate(self, counts: tuple) -> float:
        if counts in self._memo:
            return self._memo[counts]
        n, k = sum(counts), len(counts)
        rates = self._rates(n)
        denominator = rates.g_n + n * self.m1
        if denominator <= 0:
            raise ValueError(f"no transition out of {n} lineages: g_n + n*m1 = 0")

        value = 0.0
        for j, nj in enumerate(counts):
            if nj == 1:
                rest = counts[:j] + counts[j + 1:]
                value += n * self.m1 / denominator / k * self._evaluate(rest)
        for i in range(1, n):
            rate = rates.g_nk[n - i]
            if rate == 0:
                continue
            for j, nj in enumerate(counts):
                if nj > i:
                    reduced = tuple(sorted(counts[:j] + (nj - i,) + counts[j + 1:], reverse=True))
                    value += rate / denominator * (nj - i) / (n - i) * self._evaluate(reduced)

        self._memo[counts] = value
        return value

    def config_probability(self, config: ConfigLike) -> float:
        config = _as_config(config)
        return self.probability(config) * config.ordering_count

    def partition_probability(self, config: ConfigLike) -> float:
        config = _as_config(config)
        return self.config_probability(config) / config.set_partition_count


def p_allele_config(config: ConfigLike, lambda_d: MeasureOnUnitInterval, m1: float, scale: float = 1.0) -> float:
    return AlleleRecursion(lambda_d, m1, scale).probability(config)


def config_probability(config: ConfigLike, lambda_d: MeasureOnUnitInterval, m1: float, scale: float = 1.0) -> float:
    """Probability that the fast phase from one deme ends with block sizes equal to config."""
    return AlleleRecursion(lambda_d, m1, scale).config_probability(config)


def partition_probability(config: ConfigLike, lambda_d: MeasureOnUnitInterval, m1: float, scale: float = 1.0) -> float:
    """Probability of one specific scattered partition of [n] with these block sizes."""
    return AlleleRecursion(lambda_d, m1, scale).partition_probability(config)


def p_total_check(n: int, lambda_d: MeasureOnUnitInterval, m1: float, scale: float = 1.0) -> float:
    """|sum over configurations of multiplicity * partition probability - 1|."""
    if n > MAX_TOTAL_CHECK_N:
        raise ValueError(f"normalization check refused for n={n} > {MAX_TOTAL_CHECK_N}")
    recursion = AlleleRecursion(lambda_d, m1, scale)
    total = sum(c.set_partition_count * recursion.partition_probability(c) for c in enumerate_allele_configs(n))
    return abs(total - 1.0)


def singleton_monotonicity_diagnostic(
    n: int, lambda_d: MeasureOnUnitInterval, m1_values: Iterable[float], scale: float = 1.0
) -> bool:
    """Check that P(all singletons) does not decrease as m1 grows; logs a warning otherwise."""
    singletons = AlleleConfig(counts=(1,) * n)
    values = sorted(m1_values)
    probabilities = [AlleleRecursion(lambda_d, m1, scale).config_probability(singletons) for m1 in values]
    monotone = all(b >= a - 1e-12 for a, b in zip(probabilities, probabilities[1:]))
    if not monotone:
        logger.warning(
            "P(all singletons) is not monotone in m1 for n=%d: %s",
            n,
            dict(zip(values, probabilities)),
        )
    return monotone
