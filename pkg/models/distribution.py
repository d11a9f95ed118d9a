from typing import Any, Callable, Dict, Hashable, List

from pydantic import BaseModel, ConfigDict, model_validator

PROBABILITY_TOLERANCE = 1e-10


class DiscreteDistribution(BaseModel):
    """Finite law over partitions (or any hashable outcome such as a size profile)."""

    model_config = ConfigDict(frozen=True)

    support: List[Any]
    probabilities: List[float]
    metadata: Dict[str, Any] = {}  # e.g. truncation error of a uniformization

    @model_validator(mode="after")
    def _check_probabilities(self):
        if len(self.support) != len(self.probabilities):
            raise ValueError("support and probabilities must have the same length")
        for outcome, p in zip(self.support, self.probabilities):
            if p < -PROBABILITY_TOLERANCE or p > 1 + PROBABILITY_TOLERANCE:
                raise ValueError(f"probability {p} of {outcome} is outside [0,1]")
        total = sum(self.probabilities)
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise ValueError(f"probabilities sum to {total}, not 1")
        return self

    @classmethod
    def point_mass(cls, outcome: Hashable, **metadata) -> "DiscreteDistribution":
        return cls(support=[outcome], probabilities=[1.0], metadata=metadata)

    @classmethod
    def from_dict(cls, weights: Dict[Hashable, float], drop_below: float = 0.0, **metadata) -> "DiscreteDistribution":
        """Build from outcome -> probability, dropping entries at or below ``drop_below``."""
        items = [(k, max(0.0, float(v))) for k, v in weights.items() if v > drop_below]
        items.sort(key=lambda kv: str(kv[0]))
        return cls(support=[k for k, _ in items], probabilities=[v for _, v in items], metadata=metadata)

    def as_dict(self) -> Dict[Hashable, float]:
        return dict(zip(self.support, self.probabilities))

    def probability(self, outcome: Hashable) -> float:
        return self.as_dict().get(outcome, 0.0)

    def marginal(self, project: Callable[[Any], Hashable]) -> "DiscreteDistribution":
        """Image law under a projection, e.g. a partition to its block-size profile."""
        weights: Dict[Hashable, float] = {}
        for outcome, p in zip(self.support, self.probabilities):
            key = project(outcome)
            weights[key] = weights.get(key, 0.0) + p
        return DiscreteDistribution.from_dict(weights, drop_below=-1.0, **self.metadata)
