from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

from sympy.utilities.iterables import multiset_partitions

from models.partition import Block, Deme, OccupancyProfile, StructuredPartition, UnstructuredPartition

MAX_ENUMERATION_N = 8


def _canonical_demes(raw: Iterable[Iterable[Iterable[int]]]) -> Tuple[Deme, ...]:
    """Sort blocks, blocks within demes and demes; drop empty demes. No validation."""
    demes = []
    for deme in raw:
        blocks = sorted((tuple(sorted(block)) for block in deme), key=lambda b: b[0])
        if blocks:
            demes.append(tuple(blocks))
    demes.sort(key=lambda d: d[0][0])
    return tuple(demes)


def _build(n: int, raw: Iterable[Iterable[Iterable[int]]]) -> StructuredPartition:
    return StructuredPartition.model_construct(n=n, demes=_canonical_demes(raw))


def canonicalize(raw: Iterable[Iterable[Iterable[int]]], n: Optional[int] = None) -> StructuredPartition:
    """Validate a raw list of demes (each a list of blocks) and return its canonical form.

    Raw inputs differing only by the order of demes, blocks or elements map to
    the same value. When n is omitted it is taken to be the largest element.
    """
    demes = [[list(block) for block in deme] for deme in raw]
    seen = set()
    for deme in demes:
        for block in deme:
            if not block:
                raise ValueError(f"empty block in deme {deme}")
            for element in block:
                if not isinstance(element, int) or isinstance(element, bool):
                    raise ValueError(f"block {block} contains non-integer element {element!r}")
                if element < 1 or (n is not None and element > n):
                    raise ValueError(f"block {block} has element {element} outside [1, {n}]")
                if element in seen:
                    raise ValueError(f"block {block} overlaps another block on element {element}")
                seen.add(element)
            if len(set(block)) != len(block):
                raise ValueError(f"block {block} repeats an element")

    if not seen:
        raise ValueError("partition has no elements")
    size = n if n is not None else max(seen)
    missing = sorted(set(range(1, size + 1)) - seen)
    if missing:
        raise ValueError(f"elements {missing} of [1, {size}] are not covered by any block")
    return _build(size, demes)


def parse_partition(text: str, n: Optional[int] = None) -> StructuredPartition:
    """Parse the text encoding: demes separated by '|', blocks by ';', elements by ','."""
    text = text.strip()
    if not text:
        raise ValueError("empty partition text")
    raw = []
    for deme_text in text.split("|"):
        deme = []
        for block_text in deme_text.split(";"):
            try:
                deme.append([int(token) for token in block_text.split(",") if token.strip()])
            except ValueError as exc:
                raise ValueError(f"invalid block text {block_text!r} in {text!r}") from exc
        raw.append(deme)
    return canonicalize(raw, n)


def format_partition(zeta: StructuredPartition) -> str:
    return zeta.to_text()


def parse_unstructured(text: str) -> UnstructuredPartition:
    """Parse an unstructured partition encoded as blocks separated by ';'."""
    return unstructured(parse_partition(text.replace("|", ";")))


def occupancy_profile(zeta: StructuredPartition) -> OccupancyProfile:
    return OccupancyProfile(counts=tuple(sorted((len(d) for d in zeta.demes), reverse=True)))


def is_scattered(zeta: StructuredPartition) -> bool:
    """True iff every non-empty deme holds exactly one block (membership in Pi_n)."""
    return all(len(deme) == 1 for deme in zeta.demes)


def merge_blocks(zeta: StructuredPartition, deme_index: int, block_indices: Sequence[int]) -> StructuredPartition:
    """Merge the given blocks of one deme into a single block in that deme."""
    indices = sorted(set(block_indices))
    if len(indices) < 2:
        raise ValueError(f"a merger needs at least two distinct blocks, got {list(block_indices)}")
    if not 0 <= deme_index < len(zeta.demes):
        raise ValueError(f"deme index {deme_index} out of range for {zeta}")
    deme = zeta.demes[deme_index]
    if indices[-1] >= len(deme) or indices[0] < 0:
        raise ValueError(
            f"block indices {indices} are not all in deme {deme_index} of {zeta}; "
            "blocks can only merge within a deme"
        )

    merged = tuple(i for idx in indices for i in deme[idx])
    kept = [b for idx, b in enumerate(deme) if idx not in indices]
    demes = list(zeta.demes)
    demes[deme_index] = tuple(kept) + (merged,)
    return _build(zeta.n, demes)


def move_block(
    zeta: StructuredPartition,
    source_deme: int,
    block_index: int,
    target_deme: Optional[int] = None,
) -> StructuredPartition:
    """Move one block to another existing deme, or to a fresh empty deme when target is None."""
    if not 0 <= source_deme < len(zeta.demes):
        raise ValueError(f"source deme {source_deme} out of range for {zeta}")
    if not 0 <= block_index < len(zeta.demes[source_deme]):
        raise ValueError(f"block index {block_index} out of range in deme {source_deme} of {zeta}")
    if target_deme is not None:
        if target_deme == source_deme:
            raise ValueError("move target must differ from the source deme")
        if not 0 <= target_deme < len(zeta.demes):
            raise ValueError(f"target deme {target_deme} out of range for {zeta}")

    demes: List[List[Block]] = [list(deme) for deme in zeta.demes]
    block = demes[source_deme].pop(block_index)
    if target_deme is None:
        demes.append([block])
    else:
        demes[target_deme].append(block)
    return _build(zeta.n, demes)


def unstructured(zeta: StructuredPartition) -> UnstructuredPartition:
    return UnstructuredPartition.model_construct(n=zeta.n, blocks=zeta.blocks)


def block_size_profile(zeta: StructuredPartition) -> Tuple[int, ...]:
    """Block sizes sorted descending, ignoring demes."""
    return unstructured(zeta).size_profile


def scattered_from_unstructured(partition: UnstructuredPartition) -> StructuredPartition:
    """The unique element of Pi_n whose unstructured partition is the given one."""
    return _build(partition.n, [[block] for block in partition.blocks])


def restrict(zeta: StructuredPartition, m: int) -> StructuredPartition:
    """Drop elements larger than m, then any emptied blocks and demes."""
    if not 1 <= m <= zeta.n:
        raise ValueError(f"restriction size {m} must lie in [1, {zeta.n}]")
    if m == zeta.n:
        return zeta
    raw = [[[i for i in block if i <= m] for block in deme] for deme in zeta.demes]
    raw = [[block for block in deme if block] for deme in raw]
    return _build(m, raw)


def scattered_singletons(n: int) -> StructuredPartition:
    return _build(n, [[[i]] for i in range(1, n + 1)])


def single_deme(n: int) -> StructuredPartition:
    """All n singleton blocks in one deme."""
    return _build(n, [[[i] for i in range(1, n + 1)]])


def set_partitions(items: Sequence) -> Iterator[Tuple[Tuple, ...]]:
    """All set partitions of a sequence of distinct items."""
    items = list(items)
    if not items:
        yield ()
        return
    for partition in multiset_partitions(items):
        yield tuple(tuple(part) for part in partition)


def _check_enumeration_size(n: int) -> None:
    if n < 1:
        raise ValueError(f"sample size must be positive, got {n}")
    if n > MAX_ENUMERATION_N:
        raise ValueError(
            f"exact enumeration refused for n={n} > {MAX_ENUMERATION_N}; the state space grows "
            "super-exponentially, use the simulators instead"
        )


def enumerate_unstructured(n: int) -> List[UnstructuredPartition]:
    _check_enumeration_size(n)
    return [
        UnstructuredPartition.model_construct(n=n, blocks=tuple(sorted(p, key=lambda b: b[0])))
        for p in set_partitions(range(1, n + 1))
    ]


def enumerate_structured(n: int) -> List[StructuredPartition]:
    """Every structured partition of [n]: a set partition, then its blocks grouped into demes."""
    _check_enumeration_size(n)
    states = []
    for blocks in set_partitions(range(1, n + 1)):
        for grouping in set_partitions(blocks):
            states.append(_build(n, grouping))
    return states


def enumerate_scattered(n: int) -> List[StructuredPartition]:
    """Pi_n: one block per deme, in bijection with the set partitions of [n]."""
    return [scattered_from_unstructured(p) for p in enumerate_unstructured(n)]


def extensions(zeta: StructuredPartition) -> List[StructuredPartition]:
    """Every structured partition of [n+1] whose restriction to [n] is zeta."""
    new = zeta.n + 1
    results = []
    for d, deme in enumerate(zeta.demes):
        for b in range(len(deme)):
            demes = [list(x) for x in zeta.demes]
            demes[d][b] = deme[b] + (new,)
            results.append(_build(new, demes))
        demes = [list(x) for x in zeta.demes]
        demes[d].append((new,))
        results.append(_build(new, demes))
    results.append(_build(new, list(zeta.demes) + [[(new,)]]))
    return results
