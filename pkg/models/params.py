from pydantic import BaseModel, ConfigDict, Field, model_validator

from models.measure import MeasureOnUnitInterval


class ModelParams(BaseModel):
    """Parameters of the island model with mass extinctions.

    ``deme_rate_scale`` multiplies every within-deme merger rate: the value N gives
    the per-deme rate D*N*int x^k (1-x)^(b-k) Lambda^d(dx), the value 1 matches the
    allele sampling recursion and the Kingman-part formula.
    """

    model_config = ConfigDict(frozen=True)

    N: int = Field(ge=1)  # individuals per deme
    K: int = Field(ge=1)  # source demes recolonizing after an extinction
    m1: float = Field(ge=0.0)  # migration rate per lineage
    e: float = Field(ge=0.0)  # mass extinction rate
    lambda_d: MeasureOnUnitInterval
    lambda_g: MeasureOnUnitInterval
    deme_rate_scale: float = Field(default=1.0, ge=0.0)

    @model_validator(mode="after")
    def _check_measures(self):
        from core.measures import validate

        for name in ("lambda_d", "lambda_g"):
            diagnostics = validate(getattr(self, name), role="model")
            if not diagnostics.is_valid:
                raise ValueError(f"{name}: " + "; ".join(diagnostics.violations))
        return self

    def with_updates(self, **changes) -> "ModelParams":
        """Copy with some fields replaced, re-validated."""
        return ModelParams(**{**self.model_dump(), **changes})


class FiniteDConfig(BaseModel):
    """Number of demes for the finite-D process and the reported time scale."""

    model_config = ConfigDict(frozen=True)

    D: int = Field(ge=2)
    time_rescale: bool = True  # report times divided by r_D = D
