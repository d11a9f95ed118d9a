import math

import numpy as np
from scipy.special import betaln

from models.measure import MeasureDiagnostics, MeasureOnUnitInterval

MAX_MOMENT_ORDER = 64
MASS_TOLERANCE = 1e-9


def _beta_moment_ratio(alpha: float, beta: float, j: int, l: int) -> float:
    """B(alpha + j, beta + l) / B(alpha, beta)."""
    return float(np.exp(betaln(alpha + j, beta + l) - betaln(alpha, beta)))


def moment(measure: MeasureOnUnitInterval, j: int, l: int) -> float:
    """Integral of x^j (1-x)^l against the measure, in closed form."""
    if j < 0 or l < 0:
        raise ValueError(f"moment orders must be nonnegative, got j={j}, l={l}")
    if j + l > MAX_MOMENT_ORDER:
        raise ValueError(f"moment order j+l={j + l} exceeds the guard {MAX_MOMENT_ORDER}")

    total = 0.0
    for x, weight in measure.atoms:
        # 0.0 ** 0 == 1.0, which is the convention the rate formulas need
        total += weight * (x ** j) * ((1.0 - x) ** l)
    for alpha, beta, weight in measure.beta_components:
        total += weight * _beta_moment_ratio(alpha, beta, j, l)
    return total


def validate(measure: MeasureOnUnitInterval, role: str = "model") -> MeasureDiagnostics:
    """Report total mass, atoms at zero and out-of-range atom locations.

    role "model": a probability measure with no atom at 0 (Lambda^d, Lambda^g).
    role "finite": any finite measure, atoms at 0 allowed (plain Lambda-coalescent).
    """
    if role not in ("model", "finite"):
        raise ValueError(f"unknown measure role: {role}")

    total_mass = measure.total_mass
    out_of_range = [x for x, _ in measure.atoms if x < 0.0 or x > 1.0]
    atom_at_zero = any(x == 0.0 for x, _ in measure.atoms)

    violations = []
    if out_of_range:
        violations.append(f"atom locations outside [0,1]: {out_of_range}")
    if role == "model":
        if abs(total_mass - 1.0) > MASS_TOLERANCE:
            violations.append(f"total mass {total_mass} is not 1")
        if atom_at_zero:
            violations.append("atom at 0 is not allowed for a model measure")

    return MeasureDiagnostics(
        role=role,
        total_mass=total_mass,
        atom_at_zero=atom_at_zero,
        out_of_range=out_of_range,
        violations=violations,
    )


def sample(measure: MeasureOnUnitInterval, rng: np.random.Generator) -> float:
    """Draw one point from a probability measure."""
    if abs(measure.total_mass - 1.0) > MASS_TOLERANCE:
        raise ValueError(f"cannot sample from a measure of total mass {measure.total_mass}")

    u = rng.random()
    cumulative = 0.0
    for x, weight in measure.atoms:
        cumulative += weight
        if u < cumulative:
            return x
    for alpha, beta, weight in measure.beta_components:
        cumulative += weight
        if u < cumulative:
            return float(rng.beta(alpha, beta))

    # rounding left u just above the cumulative total: use the last component
    if measure.beta_components:
        alpha, beta, _ = measure.beta_components[-1]
        return float(rng.beta(alpha, beta))
    return measure.atoms[-1][0]


def binomial_identity_defect(measure: MeasureOnUnitInterval, b: int) -> float:
    """|sum_k C(b,k) moment(k, b-k) - total mass|; zero up to rounding."""
    total = sum(math.comb(b, k) * moment(measure, k, b - k) for k in range(b + 1))
    return abs(total - measure.total_mass)
