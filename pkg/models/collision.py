from typing import List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, model_validator

from models.partition import StructuredPartition

# groups -> merge classes -> indices of the blocks of the scattered state
Assignment = Tuple[Tuple[Tuple[int, ...], ...], ...]


class CollisionEvent(BaseModel):
    """A (k; k_1,...,k_r; L_1,...,L_r) geographical collision.

    ``k`` is the number of lineages present (one per deme), ``group_sizes`` lists
    every destination group including singleton groups, and ``merge_patterns[i]``
    is the multiset of class sizes into which group i merges. Types are stored
    with groups sorted by (size, pattern) descending. ``assignment``, when present,
    names the concrete blocks: for each group, its merge classes as block indices.
    """

    model_config = ConfigDict(frozen=True)

    k: int
    group_sizes: Tuple[int, ...]
    merge_patterns: Tuple[Tuple[int, ...], ...]
    assignment: Optional[Assignment] = None
    mechanism: str = "extinction"  # "extinction" or "migration"

    @model_validator(mode="after")
    def _check_shape(self):
        if len(self.group_sizes) != len(self.merge_patterns):
            raise ValueError("group_sizes and merge_patterns must have the same length")
        if sum(self.group_sizes) != self.k:
            raise ValueError(f"group sizes {self.group_sizes} do not sum to k={self.k}")
        for size, pattern in zip(self.group_sizes, self.merge_patterns):
            if size < 1 or sum(pattern) != size or any(part < 1 for part in pattern):
                raise ValueError(f"merge pattern {pattern} does not split a group of size {size}")
        if not any(size >= 2 for size in self.group_sizes):
            raise ValueError("a geographical collision needs at least one group of two or more lineages")
        return self

    @classmethod
    def from_groups(cls, k: int, groups, assignment: Optional[Assignment] = None, mechanism: str = "extinction"):
        """Build from (size, pattern) pairs in any order; singleton groups are padded to reach k."""
        pairs = [(int(size), tuple(sorted(pattern, reverse=True))) for size, pattern in groups]
        pairs += [(1, (1,))] * (k - sum(size for size, _ in pairs))
        pairs.sort(reverse=True)
        return cls.model_construct(
            k=k,
            group_sizes=tuple(size for size, _ in pairs),
            merge_patterns=tuple(pattern for _, pattern in pairs),
            assignment=assignment,
            mechanism=mechanism,
        )

    @property
    def gathered_groups(self) -> Tuple[Tuple[int, Tuple[int, ...]], ...]:
        """(size, pattern) for the groups holding at least two lineages."""
        return tuple((s, p) for s, p in zip(self.group_sizes, self.merge_patterns) if s >= 2)

    @property
    def gathered_count(self) -> int:
        """Number of lineages that end up sharing a deme with another lineage."""
        return sum(s for s, _ in self.gathered_groups)

    @property
    def r(self) -> int:
        return len(self.gathered_groups)

    @property
    def type_key(self) -> Tuple[int, Tuple[Tuple[int, Tuple[int, ...]], ...]]:
        return (self.k, tuple(zip(self.group_sizes, self.merge_patterns)))

    def label(self) -> str:
        groups = ",".join(str(s) for s in self.group_sizes if s >= 2)
        patterns = ",".join("{" + ",".join(str(x) for x in p) + "}" for s, p in self.gathered_groups)
        return f"({self.k};{groups};{patterns})"


class RateEntry(BaseModel):
    """One off-diagonal generator entry."""

    model_config = ConfigDict(frozen=True)

    target: Union[StructuredPartition, CollisionEvent]
    rate: float
    kind: str  # fast-merge, fast-move, extinction-collision, simple-collision


class RateRow(BaseModel):
    """Outgoing transitions of one state."""

    model_config = ConfigDict(frozen=True)

    entries: Tuple[RateEntry, ...] = ()

    @property
    def total_rate(self) -> float:
        return sum(entry.rate for entry in self.entries)

    @property
    def is_empty(self) -> bool:
        return not self.entries

    def as_dict(self) -> dict:
        """target -> summed rate."""
        rates: dict = {}
        for entry in self.entries:
            rates[entry.target] = rates.get(entry.target, 0.0) + entry.rate
        return rates

    def targets(self) -> List:
        return [entry.target for entry in self.entries]
