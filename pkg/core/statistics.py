import logging
import math
from collections import Counter
from typing import Callable, Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import chi2

from core.coalescent_rates import merger_group_sizes
from core.partitions import unstructured
from models.comparison_report import ComparisonReport, RateEstimate
from models.distribution import DiscreteDistribution
from models.path_sample import PathSample
from models.partition import StructuredPartition

logger = logging.getLogger(__name__)

BOOTSTRAP_RESAMPLES = 200
GOF_PVALUE_THRESHOLD = 2.7e-3
MIN_EXPECTED_COUNT = 5.0

MergerKey = Tuple[int, Tuple[int, ...]]
Classifier = Callable[[StructuredPartition, StructuredPartition], Optional[Hashable]]


def empirical_distribution(outcomes: Iterable[Hashable]) -> Dict[Hashable, float]:
    counts = Counter(outcomes)
    total = sum(counts.values())
    if total == 0:
        raise ValueError("empirical distribution of an empty sample")
    return {outcome: c / total for outcome, c in counts.items()}


def total_variation(p: Mapping[Hashable, float], q: Mapping[Hashable, float]) -> float:
    """1/2 sum |p - q| over the union of supports."""
    return 0.5 * sum(abs(p.get(x, 0.0) - q.get(x, 0.0)) for x in set(p) | set(q))


def _encode(outcomes: Sequence[Hashable], support: List[Hashable]) -> np.ndarray:
    index = {x: i for i, x in enumerate(support)}
    return np.bincount([index[x] for x in outcomes], minlength=len(support))


def _tv_counts(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.abs(a / a.sum() - b / b.sum()).sum())


def tv_distance(
    sample: Sequence[Hashable],
    other: Union[Sequence[Hashable], DiscreteDistribution],
    name: str = "total variation",
    tolerance: float = 0.0,
    provenance: str = "DERIVED",
    resamples: int = BOOTSTRAP_RESAMPLES,
    rng: Optional[np.random.Generator] = None,
) -> ComparisonReport:
    """TV between an empirical sample and a second sample or an exact law.

    The standard error is the root mean square TV of bootstrap pairs drawn under
    equality: from the pooled sample in the two-sample case, from the exact law
    otherwise.
    """
    rng = rng or np.random.default_rng(0)
    if not len(sample):
        raise ValueError("tv_distance needs a non-empty sample")

    if isinstance(other, DiscreteDistribution):
        exact = other.as_dict()
        support = sorted(set(exact) | set(sample), key=str)
        observed = _encode(sample, support)
        probabilities = np.array([exact.get(x, 0.0) for x in support])
        probabilities = probabilities / probabilities.sum()
        estimate = 0.5 * float(np.abs(observed / observed.sum() - probabilities).sum())
        draws = rng.multinomial(len(sample), probabilities, size=resamples)
        null = [0.5 * float(np.abs(d / d.sum() - probabilities).sum()) for d in draws]
        details = {"sample_size": len(sample), "compared_with": "exact"}
    else:
        if not len(other):
            raise ValueError("tv_distance needs a non-empty second sample")
        support = sorted(set(sample) | set(other), key=str)
        a, b = _encode(sample, support), _encode(other, support)
        estimate = _tv_counts(a, b)
        pooled = (a + b) / (a.sum() + b.sum())
        null = [
            _tv_counts(rng.multinomial(a.sum(), pooled), rng.multinomial(b.sum(), pooled))
            for _ in range(resamples)
        ]
        details = {"sample_size": len(sample), "other_size": len(other), "compared_with": "sample"}

    standard_error = math.sqrt(float(np.mean(np.square(null))))
    return ComparisonReport.evaluate(
        name=name,
        kind="total-variation",
        estimate=estimate,
        reference=0.0,
        provenance=provenance,
        standard_error=standard_error,
        tolerance=tolerance,
        **details,
    )


def goodness_of_fit(
    sample: Sequence[Hashable],
    exact: DiscreteDistribution,
    name: str = "goodness of fit",
    provenance: str = "DERIVED",
) -> ComparisonReport:
    """Pearson chi-square against an exact law; cells with expected count < 5 are pooled."""
    n = len(sample)
    if n == 0:
        raise ValueError("goodness_of_fit needs a non-empty sample")
    observed_counts = Counter(sample)
    expected = {x: p * n for x, p in exact.as_dict().items()}

    cells_observed, cells_expected = [], []
    pooled_observed, pooled_expected = 0, 0.0
    for outcome, e in expected.items():
        if e >= MIN_EXPECTED_COUNT:
            cells_observed.append(observed_counts.get(outcome, 0))
            cells_expected.append(e)
        else:
            pooled_observed += observed_counts.get(outcome, 0)
            pooled_expected += e
    outside = sum(c for x, c in observed_counts.items() if x not in expected)
    pooled_observed += outside
    if pooled_expected > 0 or pooled_observed > 0:
        cells_observed.append(pooled_observed)
        cells_expected.append(max(pooled_expected, 1e-12))

    observed_arr = np.array(cells_observed, dtype=float)
    expected_arr = np.array(cells_expected, dtype=float)
    statistic = float(np.sum((observed_arr - expected_arr) ** 2 / expected_arr))
    dof = len(cells_expected) - 1
    p_value = float(chi2.sf(statistic, dof)) if dof > 0 else (1.0 if statistic < 1e-9 else 0.0)
    return ComparisonReport(
        name=name,
        kind="chi-square",
        estimate=statistic,
        reference=float(dof),
        provenance=provenance,
        passed=p_value >= GOF_PVALUE_THRESHOLD,
        details={"p_value": p_value, "degrees_of_freedom": dof, "sample_size": n, "outside_support": outside},
    )


def mean_with_ci(
    values: Sequence[float],
    reference: float,
    name: str = "mean",
    tolerance: float = 0.0,
    provenance: str = "DERIVED",
) -> ComparisonReport:
    array = np.asarray(values, dtype=float)
    if array.size < 2:
        raise ValueError("mean_with_ci needs at least two values")
    standard_error = float(array.std(ddof=1) / math.sqrt(array.size))
    return ComparisonReport.evaluate(
        name=name,
        kind="mean-with-CI",
        estimate=float(array.mean()),
        reference=reference,
        provenance=provenance,
        standard_error=standard_error,
        tolerance=tolerance,
        sample_size=int(array.size),
    )


def exponential_rate_mle(count: int, exposure: float) -> RateEstimate:
    if exposure <= 0:
        return RateEstimate(count=count, exposure=0.0)
    return RateEstimate(
        count=count,
        exposure=exposure,
        estimate=count / exposure,
        standard_error=math.sqrt(count) / exposure,
    )


def merger_type(before: StructuredPartition, after: StructuredPartition) -> Optional[MergerKey]:
    """(blocks before, sizes of the merging groups), or None when no blocks merged."""
    groups = merger_group_sizes(unstructured(before), unstructured(after))
    if not groups:
        return None
    return (before.block_count, tuple(groups))


def _composite_steps(path: PathSample):
    """(time, state before, state after) per group of events sharing a time stamp."""
    state = path.initial
    steps = []
    events = path.events
    i = 0
    while i < len(events):
        t = events[i].time
        j = i
        while j < len(events) and events[j].time == t:
            j += 1
        after = events[j - 1].state
        steps.append((t, state, after, events[i].kind))
        state = after
        i = j
    return steps


def merger_rate_mle(
    paths: Iterable[PathSample],
    classifier: Classifier = merger_type,
    expected_keys: Iterable[Hashable] = (),
) -> Dict[Hashable, RateEstimate]:
    """Rate MLE per merger type: event count over exposure at the type's block count.

    Keys must be (block count, ...) tuples. A scatter at time zero from a
    non-scattered start is not an event.
    """
    counts: Counter = Counter()
    exposure: Dict[int, float] = {}
    for path in paths:
        steps = _composite_steps(path)
        if steps and steps[0][0] == 0.0 and steps[0][3] == "instantaneous-scatter":
            current, clock = steps[0][2], 0.0
            steps = steps[1:]
        else:
            current, clock = path.initial, 0.0
        for t, before, after, _ in steps:
            exposure[current.block_count] = exposure.get(current.block_count, 0.0) + (t - clock)
            key = classifier(before, after)
            if key is not None:
                counts[key] += 1
            current, clock = after, t
        exposure[current.block_count] = exposure.get(current.block_count, 0.0) + (path.terminal_time - clock)

    keys = set(counts) | set(expected_keys)
    estimates = {key: exponential_rate_mle(counts.get(key, 0), exposure.get(key[0], 0.0)) for key in keys}
    undefined = [key for key, estimate in estimates.items() if not estimate.defined]
    if undefined:
        logger.warning("zero exposure for merger types %s", sorted(undefined, key=str))
    return estimates
