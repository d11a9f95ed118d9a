"""Exact laws on small state spaces: fast-phase absorption, slow generator, transient laws.

All solvers enumerate states, so they carry explicit size guards and point the
caller to the simulators beyond them.
"""

import logging
from collections import deque
from itertools import combinations
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import linalg
from scipy.stats import poisson

from core.coalescent_rates import apply_collision, fast_rates, lambda_rate, slow_rates, xi_merger_specs, xi_rate
from core.partitions import enumerate_scattered, is_scattered, unstructured
from models.distribution import DiscreteDistribution
from models.measure import MeasureOnUnitInterval, XiMeasure
from models.params import ModelParams
from models.partition import StructuredPartition, UnstructuredPartition

logger = logging.getLogger(__name__)

MAX_ABSORPTION_N = 6
MAX_TRANSIENT_N = 5
TRUNCATION_TOLERANCE = 1e-12

AbsorptionCache = Dict[StructuredPartition, Dict[StructuredPartition, float]]


def _check_size(n: int, limit: int, what: str) -> None:
    if n > limit:
        raise ValueError(
            f"{what} refused for n={n} > {limit}: the state space is too large to enumerate, "
            "use the Monte Carlo simulators instead"
        )


def _fast_chain(zeta: StructuredPartition, params: ModelParams):
    """Reachable states of the fast process, split into transient and absorbing, with Q blocks."""
    order: List[StructuredPartition] = []
    rows = {}
    seen = {zeta}
    queue = deque([zeta])
    while queue:
        state = queue.popleft()
        order.append(state)
        if is_scattered(state):
            continue
        row = fast_rates(params, state).as_dict()
        row.pop(state, None)
        if not row:
            raise RuntimeError(f"fast process is stuck at the non-scattered state {state}")
        rows[state] = row
        for target in row:
            if target not in seen:
                seen.add(target)
                queue.append(target)

    transient = [s for s in order if not is_scattered(s)]
    absorbing = [s for s in order if is_scattered(s)]
    t_index = {s: i for i, s in enumerate(transient)}
    a_index = {s: i for i, s in enumerate(absorbing)}

    q_tt = np.zeros((len(transient), len(transient)))
    q_ta = np.zeros((len(transient), len(absorbing)))
    for state, row in rows.items():
        i = t_index[state]
        for target, rate in row.items():
            if target in t_index:
                q_tt[i, t_index[target]] += rate
            else:
                q_ta[i, a_index[target]] += rate
            q_tt[i, i] -= rate
    return transient, absorbing, q_tt, q_ta


def _absorption_weights(zeta: StructuredPartition, params: ModelParams) -> Dict[StructuredPartition, float]:
    if is_scattered(zeta):
        return {zeta: 1.0}
    transient, absorbing, q_tt, q_ta = _fast_chain(zeta, params)
    solution = linalg.solve(-q_tt, q_ta)
    row = solution[transient.index(zeta)]
    return {state: float(p) for state, p in zip(absorbing, row) if p > 0}


def absorption_distribution_exact(zeta: StructuredPartition, params: ModelParams) -> DiscreteDistribution:
    """Law of the scattered state in which the fast process started at zeta is absorbed."""
    _check_size(zeta.n, MAX_ABSORPTION_N, "exact absorption")
    weights = _absorption_weights(zeta, params)
    return DiscreteDistribution.from_dict(weights, drop_below=0.0)


def expected_absorption_time(zeta: StructuredPartition, params: ModelParams) -> float:
    """Mean duration of the fast phase started at zeta."""
    _check_size(zeta.n, MAX_ABSORPTION_N, "exact absorption time")
    if is_scattered(zeta):
        return 0.0
    transient, _, q_tt, _ = _fast_chain(zeta, params)
    times = linalg.solve(-q_tt, np.ones(len(transient)))
    return float(times[transient.index(zeta)])


def _cached_absorption(state: StructuredPartition, params: ModelParams, cache: AbsorptionCache):
    if state not in cache:
        cache[state] = _absorption_weights(state, params)
    return cache[state]


def slow_generator(params: ModelParams, n: int) -> Tuple[List[StructuredPartition], np.ndarray]:
    """Generator of the limit process on Pi_n: collision rate times absorption law of the gathered state."""
    _check_size(n, MAX_ABSORPTION_N, "slow generator")
    states = enumerate_scattered(n)
    index = {s: i for i, s in enumerate(states)}
    q = np.zeros((len(states), len(states)))
    cache: AbsorptionCache = {}
    for chi in states:
        i = index[chi]
        for entry in slow_rates(params, chi).entries:
            gathered = apply_collision(chi, entry.target)
            for eta, p in _cached_absorption(gathered, params, cache).items():
                if eta != chi:
                    q[i, index[eta]] += entry.rate * p
        q[i, i] = -q[i].sum()
    logger.debug("slow generator for n=%d: %d states, %d absorption solves", n, len(states), len(cache))
    return states, q


def _merge_unstructured(partition: UnstructuredPartition, groups) -> UnstructuredPartition:
    merged_indices = {i for group in groups for i in group}
    blocks = [b for i, b in enumerate(partition.blocks) if i not in merged_indices]
    blocks += [tuple(sorted(e for i in group for e in partition.blocks[i])) for group in groups]
    return UnstructuredPartition.model_construct(n=partition.n, blocks=tuple(sorted(blocks, key=lambda b: b[0])))


def reference_rates(
    reference: Union[MeasureOnUnitInterval, XiMeasure], partition: UnstructuredPartition
) -> Dict[UnstructuredPartition, float]:
    """Outgoing merger rates of a Lambda- or Xi-coalescent."""
    b = partition.block_count
    rates: Dict[UnstructuredPartition, float] = {}
    if b < 2:
        return rates
    if isinstance(reference, XiMeasure):
        for groups in xi_merger_specs(b):
            rate = xi_rate(reference, b, [len(g) for g in groups])
            if rate > 0:
                rates[_merge_unstructured(partition, groups)] = rate
        return rates
    for k in range(2, b + 1):
        rate = lambda_rate(reference, b, k)
        if rate <= 0:
            continue
        for subset in combinations(range(b), k):
            rates[_merge_unstructured(partition, [subset])] = rate
    return rates


def _reachable_generator(initial, row_fn):
    states = [initial]
    index = {initial: 0}
    rows = {}
    queue = deque([initial])
    while queue:
        state = queue.popleft()
        rows[state] = {t: r for t, r in row_fn(state).items() if t != state}
        for target in rows[state]:
            if target not in index:
                index[target] = len(states)
                states.append(target)
                queue.append(target)
    q = np.zeros((len(states), len(states)))
    for state, row in rows.items():
        for target, rate in row.items():
            q[index[state], index[target]] += rate
            q[index[state], index[state]] -= rate
    return states, q


def uniformize(q: np.ndarray, start: np.ndarray, t: float, tolerance: float = TRUNCATION_TOLERANCE):
    """exp(tQ) applied to a row vector via Poisson-weighted powers; returns (law, truncation error)."""
    rate = float(np.max(-np.diag(q))) if q.size else 0.0
    if t == 0 or rate <= 0:
        return start.copy(), 0.0
    step = np.eye(len(q)) + q / rate
    mean = rate * t
    terms = int(poisson.isf(tolerance, mean)) + 1
    weights = poisson.pmf(np.arange(terms + 1), mean)
    law = np.zeros_like(start)
    vector = start.copy()
    for weight in weights:
        law += weight * vector
        vector = vector @ step
    return np.clip(law, 0.0, None), float(poisson.sf(terms, mean))


def transient_distribution_exact(
    process: str,
    initial: Union[StructuredPartition, UnstructuredPartition],
    t: float,
    params: Optional[ModelParams] = None,
    reference: Optional[Union[MeasureOnUnitInterval, XiMeasure]] = None,
) -> DiscreteDistribution:
    """Exact law at time t of the fast, slow (limit) or reference (lambda / xi) process."""
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    _check_size(initial.n, MAX_TRANSIENT_N, "uniformization")

    if process in ("lambda", "xi"):
        if reference is None:
            raise ValueError(f"process {process!r} needs a reference measure")
        start_state = initial if isinstance(initial, UnstructuredPartition) else unstructured(initial)
        states, q = _reachable_generator(start_state, lambda s: reference_rates(reference, s))
        start = np.zeros(len(states))
        start[0] = 1.0
    elif process == "fast":
        if params is None:
            raise ValueError("the fast process needs model parameters")
        states, q = _reachable_generator(initial, lambda s: fast_rates(params, s).as_dict())
        start = np.zeros(len(states))
        start[0] = 1.0
    elif process == "slow":
        if params is None:
            raise ValueError("the slow process needs model parameters")
        if t == 0:
            return DiscreteDistribution.point_mass(initial, truncation_error=0.0)
        states, q = slow_generator(params, initial.n)
        index = {s: i for i, s in enumerate(states)}
        start = np.zeros(len(states))
        for state, p in _absorption_weights(initial, params).items():
            start[index[state]] += p
    else:
        raise ValueError(f"unknown process {process!r}; expected fast, slow, lambda or xi")

    law, error = uniformize(q, start, t)
    logger.debug("uniformization of %s at t=%g over %d states, truncation error %.3g", process, t, len(states), error)
    return DiscreteDistribution.from_dict(dict(zip(states, law)), drop_below=0.0, truncation_error=error)

