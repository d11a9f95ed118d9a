from typing import Any, Dict, Optional

from pydantic import BaseModel, Field

PROVENANCE_TAGS = ("PAPER", "DERIVED", "TRIVIAL")


class ComparisonReport(BaseModel):
    """One statistical or exact check against a reference value."""

    name: str
    kind: str  # "total-variation", "rate-MLE", "mean-with-CI", "chi-square", "exact"
    estimate: float
    standard_error: float = Field(default=0.0, ge=0.0)
    reference: float
    provenance: str  # PAPER, DERIVED or TRIVIAL
    tolerance: float = 0.0
    passed: bool
    details: Dict[str, Any] = {}

    @classmethod
    def evaluate(
        cls,
        name: str,
        kind: str,
        estimate: float,
        reference: float,
        provenance: str,
        standard_error: float = 0.0,
        tolerance: float = 0.0,
        **details,
    ) -> "ComparisonReport":
        """Pass iff |estimate - reference| <= tolerance + 3 * standard_error."""
        if provenance not in PROVENANCE_TAGS:
            raise ValueError(f"unknown provenance tag {provenance!r}")
        passed = abs(estimate - reference) <= tolerance + 3.0 * standard_error
        return cls(
            name=name,
            kind=kind,
            estimate=estimate,
            standard_error=standard_error,
            reference=reference,
            provenance=provenance,
            tolerance=tolerance,
            passed=bool(passed),
            details=details,
        )

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"

    @property
    def deviation(self) -> float:
        return abs(self.estimate - self.reference)


class RateEstimate(BaseModel):
    """Exponential-rate MLE count / exposure with a Wald interval."""

    count: int
    exposure: float
    estimate: Optional[float] = None  # None when exposure is zero
    standard_error: Optional[float] = None

    @property
    def defined(self) -> bool:
        return self.estimate is not None

    @property
    def ci(self):
        if not self.defined:
            return None
        return (self.estimate - 1.96 * self.standard_error, self.estimate + 1.96 * self.standard_error)
