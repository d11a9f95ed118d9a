import logging
import math
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, combinations_with_replacement, permutations, product
from typing import Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from pydantic import BaseModel
from sympy.utilities.iterables import partitions as integer_partitions

from core.measures import moment
from core.partitions import (
    enumerate_structured,
    extensions,
    is_scattered,
    merge_blocks,
    move_block,
    occupancy_profile,
    restrict,
    set_partitions,
    _build,
)
from models.collision import CollisionEvent, RateEntry, RateRow
from models.measure import MeasureOnUnitInterval, XiMeasure
from models.params import ModelParams
from models.partition import StructuredPartition, UnstructuredPartition

logger = logging.getLogger(__name__)

MAX_CONSISTENCY_K = 6

Profile = Tuple[int, ...]


# ---------------------------------------------------------------------------
# Reference coalescents (Kingman, Lambda, Xi)
# ---------------------------------------------------------------------------

def merger_group_sizes(zeta: UnstructuredPartition, eta: UnstructuredPartition) -> Optional[List[int]]:
    """Sizes k_i >= 2 of the groups of zeta-blocks merged to form eta, or None if eta does not coarsen zeta."""
    if zeta.n != eta.n:
        return None
    owner = {}
    for index, block in enumerate(eta.blocks):
        for element in block:
            owner[element] = index
    counts: Dict[int, int] = {}
    for block in zeta.blocks:
        targets = {owner[element] for element in block}
        if len(targets) != 1:
            return None
        target = targets.pop()
        counts[target] = counts.get(target, 0) + 1
    return sorted((c for c in counts.values() if c >= 2), reverse=True)


def kingman_rate(zeta: UnstructuredPartition, eta: UnstructuredPartition) -> float:
    """Q-matrix entry of Kingman's coalescent."""
    if zeta == eta:
        return -float(math.comb(zeta.block_count, 2))
    groups = merger_group_sizes(zeta, eta)
    return 1.0 if groups == [2] else 0.0


def lambda_rate(measure: MeasureOnUnitInterval, b: int, k: int) -> float:
    """Rate at which one given k-tuple out of b blocks merges in a Lambda-coalescent."""
    if k < 2:
        raise ValueError(f"a merger involves at least two blocks, got k={k}")
    if k > b:
        raise ValueError(f"cannot merge k={k} out of b={b} blocks")
    return moment(measure, k - 2, b - k)


def lambda_total_rate(measure: MeasureOnUnitInterval, b: int) -> float:
    return sum(math.comb(b, k) * lambda_rate(measure, b, k) for k in range(2, b + 1))


def xi_rate(xi: XiMeasure, b: int, group_sizes: Sequence[int]) -> float:
    """Rate of one given simultaneous merger of groups of sizes k_1,...,k_r out of b blocks."""
    sizes = list(group_sizes)
    if not sizes or any(k < 2 for k in sizes):
        raise ValueError(f"every merging group needs at least two blocks, got {sizes}")
    if sum(sizes) > b:
        raise ValueError(f"groups {sizes} need more than b={b} blocks")

    r = len(sizes)
    s = b - sum(sizes)
    rate = xi.kingman_mass if (r == 1 and sizes[0] == 2) else 0.0

    for coords, weight in xi.atoms:
        squares = sum(x * x for x in coords)
        if squares == 0:
            raise ValueError(f"Xi atom {coords} sits at zero")
        remainder = max(0.0, 1.0 - sum(coords))
        p = len(coords)
        acc = 0.0
        for l in range(s + 1):
            if r + l > p:
                break
            inner = 0.0
            for idx in permutations(range(p), r + l):
                term = 1.0
                for i in range(r):
                    term *= coords[idx[i]] ** sizes[i]
                for t in range(l):
                    term *= coords[idx[r + t]]
                inner += term
            acc += math.comb(s, l) * inner * remainder ** (s - l)
        rate += weight * acc / squares
    return rate


def xi_merger_specs(b: int) -> List[Tuple[Tuple[int, ...], ...]]:
    """Every simultaneous merger of b labelled blocks as a tuple of merging index groups."""
    specs = []
    for groups in set_partitions(range(b)):
        merging = tuple(g for g in groups if len(g) >= 2)
        if merging:
            specs.append(merging)
    return specs


# ---------------------------------------------------------------------------
# Within-deme dynamics
# ---------------------------------------------------------------------------

class GRates(BaseModel):
    """Block-counting rates of the within-deme Lambda-coalescent with measure x^2 Lambda^d(dx)."""

    n: int
    g_nk: Dict[int, float]  # k -> rate of going from n to k lineages
    g_n: float  # sum over k
    g_n_closed: float  # closed form int (1 - (1-x)^(n-1) (1 - x + n x)) Lambda^d(dx)

    @property
    def discrepancy(self) -> float:
        return abs(self.g_n - self.g_n_closed)


def g_rates(lambda_d: MeasureOnUnitInterval, n: int, scale: float = 1.0) -> GRates:
    if n < 2:
        raise ValueError(f"g-rates need n >= 2, got {n}")
    g_nk = {k: scale * math.comb(n, k - 1) * moment(lambda_d, n - k + 1, k - 1) for k in range(1, n)}
    closed = scale * (lambda_d.total_mass - moment(lambda_d, 0, n) - n * moment(lambda_d, 1, n - 1))
    return GRates(n=n, g_nk=g_nk, g_n=sum(g_nk.values()), g_n_closed=closed)


def fast_rates(params: ModelParams, zeta: StructuredPartition) -> RateRow:
    """Fast-time-scale transitions: within-deme k-mergers and moves to empty demes.

    A block alone in its deme moving to another empty deme leaves the canonical
    state unchanged and is not listed, so the row is empty exactly on Pi_n.
    """
    entries = []
    for d, deme in enumerate(zeta.demes):
        b = len(deme)
        if b < 2:
            continue
        for k in range(2, b + 1):
            rate = params.deme_rate_scale * moment(params.lambda_d, k, b - k)
            if rate <= 0:
                continue
            for subset in combinations(range(b), k):
                entries.append(RateEntry.model_construct(target=merge_blocks(zeta, d, subset), rate=rate, kind="fast-merge"))
        if params.m1 > 0:
            for i in range(b):
                entries.append(RateEntry.model_construct(target=move_block(zeta, d, i), rate=params.m1, kind="fast-move"))
    return RateRow.model_construct(entries=tuple(entries))


def dominates(k_hat: Sequence[int], k_hat_prime: Sequence[int]) -> bool:
    """The relation k_hat |> k_hat_prime between block-count profiles."""
    source, target = list(k_hat), list(k_hat_prime)
    p, q = len(source), len(target)
    if q < p or sum(target) > sum(source):
        return False
    for chosen in permutations(range(q), p):
        picked = [target[c] for c in chosen]
        if all(1 <= kp <= k for kp, k in zip(picked, source)) and any(kp < k for kp, k in zip(picked, source)):
            return True
    return False


class FastTableDiagnostics(BaseModel):
    invalid_transitions: List[Tuple[Profile, Profile, float]] = []
    absorbing_profiles: List[Profile] = []

    @property
    def is_valid(self) -> bool:
        return not self.invalid_transitions and not self.absorbing_profiles


def validate_fast_table(
    table: Mapping[Tuple[Sequence[int], Sequence[int]], float],
    profiles: Optional[Sequence[Sequence[int]]] = None,
) -> FastTableDiagnostics:
    """Check a vartheta table: positive entries need k |> k', and no non-scattered profile may be absorbing."""
    invalid = []
    outgoing: Dict[Profile, float] = {}
    seen = set()
    for (source, target), rate in table.items():
        source_key = tuple(sorted(source, reverse=True))
        target_key = tuple(sorted(target, reverse=True))
        seen.update((source_key, target_key))
        if rate > 0:
            outgoing[source_key] = outgoing.get(source_key, 0.0) + rate
            if not dominates(source_key, target_key):
                invalid.append((source_key, target_key, rate))

    for profile in profiles or []:
        seen.add(tuple(sorted(profile, reverse=True)))
    absorbing = sorted(p for p in seen if any(c >= 2 for c in p) and outgoing.get(p, 0.0) <= 0)
    return FastTableDiagnostics(invalid_transitions=invalid, absorbing_profiles=absorbing)


def fast_table_for(params: ModelParams, zeta: StructuredPartition) -> Dict[Tuple[Profile, Profile], float]:
    """Profile-level view of one fast row, for structural validation."""
    table: Dict[Tuple[Profile, Profile], float] = {}
    source = occupancy_profile(zeta).counts
    for entry in fast_rates(params, zeta).entries:
        key = (source, occupancy_profile(entry.target).counts)
        table[key] = table.get(key, 0.0) + entry.rate
    return table


def check_fast_consistency(
    params: ModelParams,
    k_max: int,
    rates_fn: Optional[Callable[[ModelParams, StructuredPartition], RateRow]] = None,
) -> float:
    """Worst violation of the projective consistency of fast rows up to sample size k_max."""
    if k_max > MAX_CONSISTENCY_K:
        raise ValueError(f"k_max={k_max} exceeds the guard {MAX_CONSISTENCY_K}")
    rates_fn = rates_fn or fast_rates
    worst = 0.0
    for k in range(1, k_max):
        for zeta in enumerate_structured(k):
            base = {t: r for t, r in rates_fn(params, zeta).as_dict().items() if t != zeta}
            for extended in extensions(zeta):
                projected: Dict[StructuredPartition, float] = {}
                for target, rate in rates_fn(params, extended).as_dict().items():
                    image = restrict(target, k)
                    if image != zeta:
                        projected[image] = projected.get(image, 0.0) + rate
                for key in set(base) | set(projected):
                    worst = max(worst, abs(base.get(key, 0.0) - projected.get(key, 0.0)))
    return worst


# ---------------------------------------------------------------------------
# Geographical collisions on the slow time scale
# ---------------------------------------------------------------------------

def geo_collision_count(k: int, group_sizes: Sequence[int]) -> int:
    """A(k; k_1,...,k_r): ways to split k labelled blocks into unordered groups of the given sizes."""
    if sum(group_sizes) != k:
        raise ValueError(f"group sizes {list(group_sizes)} do not sum to {k}")
    count = math.factorial(k)
    for size in group_sizes:
        count //= math.factorial(size)
    for size in set(group_sizes):
        count //= math.factorial(list(group_sizes).count(size))
    return count


def collision_multiplicity(event: CollisionEvent) -> int:
    """Number of concrete block assignments realizing a collision type."""
    denominator = 1
    for size, pattern in zip(event.group_sizes, event.merge_patterns):
        for part in pattern:
            denominator *= math.factorial(part)
        for part in set(pattern):
            denominator *= math.factorial(pattern.count(part))
    groups = list(zip(event.group_sizes, event.merge_patterns))
    for group in set(groups):
        denominator *= math.factorial(groups.count(group))
    return math.factorial(event.k) // denominator


def _integer_partitions(n: int) -> List[Tuple[int, ...]]:
    return [
        tuple(sorted((part for part, mult in p.items() for _ in range(mult)), reverse=True))
        for p in integer_partitions(n)
    ]


def enumerate_collisions(m: int, K: int) -> List[Tuple[CollisionEvent, int]]:
    """Every collision type on m scattered lineages with at most K gathered groups, with its multiplicity."""
    if m < 2:
        raise ValueError(f"a collision needs at least two lineages, got m={m}")
    results = []
    for sizes in _integer_partitions(m):
        gathered = [s for s in sizes if s >= 2]
        if not gathered or len(gathered) > K:
            continue
        pattern_choices = []
        for size in sorted(set(gathered), reverse=True):
            copies = gathered.count(size)
            options = _integer_partitions(size)
            pattern_choices.append(
                [[(size, pattern) for pattern in combo] for combo in combinations_with_replacement(options, copies)]
            )
        for choice in product(*pattern_choices):
            groups = [group for block in choice for group in block]
            event = CollisionEvent.from_groups(m, groups)
            results.append((event, collision_multiplicity(event)))
    return results


def _pad_to(event: CollisionEvent, m: int) -> CollisionEvent:
    if event.k > m:
        raise ValueError(f"event {event.label()} involves more lineages than the {m} present")
    if event.k == m:
        return event
    return CollisionEvent.from_groups(m, event.gathered_groups, assignment=event.assignment, mechanism=event.mechanism)


def geo_collision_rate(params: ModelParams, m: int, event: CollisionEvent) -> float:
    """Limit (D -> infinity) rate of one concrete extinction-driven collision among m scattered lineages."""
    event = _pad_to(event, m)
    groups = event.gathered_groups
    r = len(groups)
    k = sum(size for size, _ in groups)
    singles = m - k
    if r > params.K:
        return 0.0

    parents = 1
    for size, pattern in groups:
        parents *= math.perm(params.N, len(pattern))
    if parents == 0:
        return 0.0
    parent_denominator = params.N ** k

    total = 0.0
    for s in range(0, min(singles, params.K - r) + 1):
        coefficient = Fraction(
            math.comb(singles, s) * math.perm(params.K, r + s) * parents,
            params.K ** (k + s) * parent_denominator,
        )
        total += float(coefficient) * moment(params.lambda_g, k + s, singles - s)
    return params.e * total


def migration_collision_rate(params: ModelParams, m: int, event: CollisionEvent) -> float:
    """Simple-collision rate: one lineage migrating onto another, with or without coalescence."""
    event = _pad_to(event, m)
    if event.gathered_groups == ((2, (2,)),):
        return 2.0 * params.m1 / params.N
    if event.gathered_groups == ((2, (1, 1)),):
        return 2.0 * params.m1 * (params.N - 1) / params.N
    return 0.0


def collision_rate(params: ModelParams, m: int, event: CollisionEvent) -> float:
    """lambda^g: extinction part plus simple-collision part."""
    return geo_collision_rate(params, m, event) + migration_collision_rate(params, m, event)


@lru_cache(maxsize=32)
def _concrete_extinction_collisions(m: int, K: int) -> Tuple[CollisionEvent, ...]:
    events = []
    for groups in set_partitions(range(m)):
        gathered = [g for g in groups if len(g) >= 2]
        if not gathered or len(gathered) > K:
            continue
        for classes in product(*(list(set_partitions(g)) for g in gathered)):
            assignment = tuple(sorted(tuple(sorted(c)) for c in classes))
            pairs = [(len(g), [len(c) for c in cls]) for g, cls in zip(gathered, classes)]
            events.append(CollisionEvent.from_groups(m, pairs, assignment=assignment))
    return tuple(events)


@lru_cache(maxsize=64)
def slow_rates_for_block_count(params: ModelParams, m: int) -> RateRow:
    """Slow row of any scattered state with m blocks; assignments index its blocks."""
    entries = []
    type_rates: Dict[tuple, float] = {}
    for event in _concrete_extinction_collisions(m, params.K):
        key = event.type_key
        if key not in type_rates:
            type_rates[key] = geo_collision_rate(params, m, event)
        if type_rates[key] > 0:
            entries.append(RateEntry.model_construct(target=event, rate=type_rates[key], kind="extinction-collision"))

    if params.m1 > 0:
        coalescing = 2.0 * params.m1 / params.N
        distinct = 2.0 * params.m1 * (params.N - 1) / params.N
        for i, j in combinations(range(m), 2):
            merged = CollisionEvent.from_groups(m, [(2, (2,))], assignment=(((i, j),),), mechanism="migration")
            entries.append(RateEntry.model_construct(target=merged, rate=coalescing, kind="simple-collision"))
            if distinct > 0:
                together = CollisionEvent.from_groups(m, [(2, (1, 1))], assignment=(((i,), (j,)),), mechanism="migration")
                entries.append(RateEntry.model_construct(target=together, rate=distinct, kind="simple-collision"))
    logger.debug("slow row for m=%d: %d events, total rate %.6g", m, len(entries), sum(e.rate for e in entries))
    return RateRow.model_construct(entries=tuple(entries))


def slow_rates(params: ModelParams, zeta: StructuredPartition) -> RateRow:
    """Geographical collisions out of a scattered state, with concrete block assignments."""
    if not is_scattered(zeta):
        raise ValueError(f"slow rates are defined on scattered states only, got {zeta}")
    if zeta.block_count < 2:
        return RateRow()
    return slow_rates_for_block_count(params, zeta.block_count)


def apply_collision(chi: StructuredPartition, event: CollisionEvent) -> StructuredPartition:
    """Gather and merge the blocks of a scattered state as the event's assignment prescribes."""
    if event.assignment is None:
        raise ValueError(f"collision type {event.label()} has no concrete assignment")
    blocks = chi.blocks
    if event.k != len(blocks):
        raise ValueError(f"event for {event.k} lineages applied to a state with {len(blocks)} blocks")
    used = set()
    demes = []
    for group in event.assignment:
        deme = []
        for merge_class in group:
            deme.append(tuple(element for index in merge_class for element in blocks[index]))
            used.update(merge_class)
        demes.append(deme)
    demes.extend([[block] for index, block in enumerate(blocks) if index not in used])
    return _build(chi.n, demes)


def _children(event: CollisionEvent) -> Iterator[CollisionEvent]:
    """Types on k+1 lineages whose restriction to the first k lineages is the given type."""
    groups = list(zip(event.group_sizes, event.merge_patterns))
    for u, (size, pattern) in enumerate(groups):
        for j in range(len(pattern) + 1):
            if j < len(pattern):
                new_pattern = pattern[:j] + (pattern[j] + 1,) + pattern[j + 1:]
            else:
                new_pattern = pattern + (1,)
            new_groups = groups[:u] + [(size + 1, new_pattern)] + groups[u + 1:]
            yield CollisionEvent.from_groups(event.k + 1, new_groups)
    yield CollisionEvent.from_groups(event.k + 1, groups + [(1, (1,))])


def check_lambda_g_consistency(
    params: ModelParams,
    k_max: int,
    rate_fn: Optional[Callable[[ModelParams, int, CollisionEvent], float]] = None,
) -> float:
    """Worst violation of lambda_k = sum over ways to add lineage k+1 of lambda_{k+1}."""
    if k_max > MAX_CONSISTENCY_K:
        raise ValueError(f"k_max={k_max} exceeds the guard {MAX_CONSISTENCY_K}")
    rate_fn = rate_fn or collision_rate
    worst = 0.0
    for k in range(2, k_max):
        for event, _ in enumerate_collisions(k, k):
            lhs = rate_fn(params, k, event)
            rhs = sum(rate_fn(params, k + 1, child) for child in _children(event))
            worst = max(worst, abs(lhs - rhs))
    return worst
