from typing import Tuple

from pydantic import BaseModel, ConfigDict

Block = Tuple[int, ...]
Deme = Tuple[Block, ...]


class StructuredPartition(BaseModel):
    """Unordered structured partition of [n]: blocks grouped into exchangeable demes.

    Always held in canonical form: blocks sorted, blocks within a deme ordered by
    their minimum element, demes ordered by the minimum element they contain and
    no empty demes. Build instances through ``core.partitions.canonicalize``.
    """

    model_config = ConfigDict(frozen=True)

    n: int
    demes: Tuple[Deme, ...]

    @property
    def block_count(self) -> int:
        """Total number of blocks |zeta|."""
        return sum(len(deme) for deme in self.demes)

    @property
    def deme_count(self) -> int:
        return len(self.demes)

    @property
    def blocks(self) -> Tuple[Block, ...]:
        """All blocks, ordered by minimum element."""
        return tuple(sorted((block for deme in self.demes for block in deme), key=lambda b: b[0]))

    def to_text(self) -> str:
        return "|".join(";".join(",".join(str(i) for i in block) for block in deme) for deme in self.demes)

    def __str__(self) -> str:
        return self.to_text()


class UnstructuredPartition(BaseModel):
    """Partition of [n] with blocks ordered by minimum element."""

    model_config = ConfigDict(frozen=True)

    n: int
    blocks: Tuple[Block, ...]

    @property
    def block_count(self) -> int:
        return len(self.blocks)

    @property
    def size_profile(self) -> Tuple[int, ...]:
        """Block sizes sorted descending (the allele configuration of the partition)."""
        return tuple(sorted((len(b) for b in self.blocks), reverse=True))

    def to_text(self) -> str:
        return ";".join(",".join(str(i) for i in block) for block in self.blocks)

    def __str__(self) -> str:
        return self.to_text()


class OccupancyProfile(BaseModel):
    """Number of blocks per non-empty deme, sorted descending."""

    model_config = ConfigDict(frozen=True)

    counts: Tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def is_scattered(self) -> bool:
        return all(c == 1 for c in self.counts)
