import math
from collections import Counter
from typing import Tuple

from pydantic import BaseModel, ConfigDict, field_validator


class AlleleConfig(BaseModel):
    """Unordered allele configuration {n_1,...,n_k}, stored sorted descending."""

    model_config = ConfigDict(frozen=True)

    counts: Tuple[int, ...]

    @field_validator("counts")
    @classmethod
    def _check_counts(cls, counts):
        if not counts:
            raise ValueError("an allele configuration needs at least one allele")
        if any(c < 1 for c in counts):
            raise ValueError(f"allele counts must be positive, got {counts}")
        return tuple(sorted(counts, reverse=True))

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def k(self) -> int:
        return len(self.counts)

    @property
    def ordering_count(self) -> int:
        """Distinct orderings of the counts: k! / prod b_j! over repeated values."""
        count = math.factorial(self.k)
        for repeats in Counter(self.counts).values():
            count //= math.factorial(repeats)
        return count

    @property
    def set_partition_count(self) -> int:
        """Set partitions of [n] whose block sizes are these counts."""
        count = math.factorial(self.n)
        for c in self.counts:
            count //= math.factorial(c)
        for repeats in Counter(self.counts).values():
            count //= math.factorial(repeats)
        return count

    def label(self) -> str:
        return "+".join(str(c) for c in self.counts)
