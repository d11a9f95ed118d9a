from typing import Any, Dict, List, Tuple

from pydantic import BaseModel, ConfigDict, field_validator, model_validator


class MeasureOnUnitInterval(BaseModel):
    """Finite measure on [0,1]: a mixture of point masses and Beta laws.

    Used as the within-deme measure Lambda^d, the extinction-intensity measure
    Lambda^g (both probability measures) and as the finite, possibly unnormalized,
    measure of a plain Lambda-coalescent.
    """

    model_config = ConfigDict(frozen=True)

    atoms: Tuple[Tuple[float, float], ...] = ()  # (location, weight)
    beta_components: Tuple[Tuple[float, float, float], ...] = ()  # (alpha, beta, weight)

    @field_validator("atoms")
    @classmethod
    def _check_atoms(cls, atoms):
        for location, weight in atoms:
            if weight <= 0:
                raise ValueError(f"atom at {location} has non-positive weight {weight}")
        return atoms

    @field_validator("beta_components")
    @classmethod
    def _check_beta(cls, components):
        for alpha, beta, weight in components:
            if alpha <= 0 or beta <= 0:
                raise ValueError(f"Beta({alpha}, {beta}) needs positive shape parameters")
            if weight <= 0:
                raise ValueError(f"Beta({alpha}, {beta}) has non-positive weight {weight}")
        return components

    @model_validator(mode="after")
    def _check_not_empty(self):
        if not self.atoms and not self.beta_components:
            raise ValueError("measure has neither atoms nor Beta components")
        return self

    @property
    def total_mass(self) -> float:
        return sum(w for _, w in self.atoms) + sum(w for _, _, w in self.beta_components)

    @classmethod
    def point_mass(cls, x: float, weight: float = 1.0) -> "MeasureOnUnitInterval":
        return cls(atoms=((x, weight),))

    @classmethod
    def uniform(cls, weight: float = 1.0) -> "MeasureOnUnitInterval":
        return cls(beta_components=((1.0, 1.0, weight),))

    @classmethod
    def beta(cls, alpha: float, beta: float, weight: float = 1.0) -> "MeasureOnUnitInterval":
        return cls(beta_components=((alpha, beta, weight),))

    @classmethod
    def from_config(cls, data: Dict[str, Any]) -> "MeasureOnUnitInterval":
        """Build from the config schema {"atoms": [[x, w], ...], "beta": [[a, b, w], ...]}."""
        atoms = tuple((float(x), float(w)) for x, w in data.get("atoms", []))
        beta = tuple((float(a), float(b), float(w)) for a, b, w in data.get("beta", []))
        return cls(atoms=atoms, beta_components=beta)

    def to_config(self) -> Dict[str, List[List[float]]]:
        return {
            "atoms": [list(a) for a in self.atoms],
            "beta": [list(c) for c in self.beta_components],
        }


class XiMeasure(BaseModel):
    """Finite representation of Xi = Xi_0 + a * delta_0 on the ordered simplex."""

    model_config = ConfigDict(frozen=True)

    kingman_mass: float = 0.0
    atoms: Tuple[Tuple[Tuple[float, ...], float], ...] = ()  # (x1 >= x2 >= ..., weight)

    @field_validator("kingman_mass")
    @classmethod
    def _check_kingman(cls, a):
        if a < 0:
            raise ValueError(f"kingman_mass must be >= 0, got {a}")
        return a

    @field_validator("atoms")
    @classmethod
    def _check_atoms(cls, atoms):
        cleaned = []
        for vector, weight in atoms:
            coords = tuple(float(x) for x in vector if x != 0)
            if weight <= 0:
                raise ValueError(f"Xi atom {vector} has non-positive weight {weight}")
            if any(x < 0 for x in coords):
                raise ValueError(f"Xi atom {vector} has a negative coordinate")
            if any(a < b for a, b in zip(coords, coords[1:])):
                raise ValueError(f"Xi atom {vector} is not sorted in decreasing order")
            if sum(coords) > 1 + 1e-12:
                raise ValueError(f"Xi atom {vector} has coordinates summing above 1")
            if sum(x * x for x in coords) == 0:
                raise ValueError(f"Xi atom {vector} sits at zero; put that mass in kingman_mass")
            cleaned.append((coords, float(weight)))
        return tuple(cleaned)

    @property
    def total_mass(self) -> float:
        return self.kingman_mass + sum(w for _, w in self.atoms)

    @classmethod
    def from_config(cls, data: Dict[str, Any]) -> "XiMeasure":
        atoms = tuple((tuple(float(x) for x in vec), float(w)) for vec, w in data.get("atoms", []))
        return cls(kingman_mass=float(data.get("kingman_mass", 0.0)), atoms=atoms)


class MeasureDiagnostics(BaseModel):
    """Outcome of validating a measure for a given role."""

    role: str  # "model" (probability, no atom at 0) or "finite"
    total_mass: float
    atom_at_zero: bool
    out_of_range: List[float] = []
    violations: List[str] = []

    @property
    def is_valid(self) -> bool:
        return not self.violations
