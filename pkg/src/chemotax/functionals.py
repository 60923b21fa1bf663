"""Energy functionals of the multi-species model and their inner minimizers.

All functionals are evaluated with the same discrete building blocks used by
the time steppers: the entropy integrand ``f(t) = t*(log t - 1)`` with
``f(0) = 0``, the Dirichlet energy computed by summation by parts against
the mesh's Dirichlet stencil, and the Green operator for the quadratic
interaction.  Using one stencil everywhere makes the duality identities

    mean_field_energy(v)  == lyapunov(gibbs_density(v), v)
    free_energy(rho)      == lyapunov(rho, induced_potential(rho))

exact at the discrete level (to solver rounding), not merely up to
discretization error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, density_stack, field_inner, integrate_field, laplacian_dirichlet
from .greens import GreenOperator, solve_poisson, species_potential
from .measure import SpeciesMeasure

# exp() overflows at ~709; refuse exponents beyond this instead of clamping,
# since clamped values would silently corrupt the bubble asymptotics
EXP_GUARD = 700.0

MASS_RTOL = 1e-10


class ExponentOverflowError(ValueError):
    """Raised when exp(alpha * v) would overflow double precision."""


@dataclass(frozen=True)
class FunctionalReport:
    """Value of a functional together with its named addends."""

    value: float
    breakdown: dict[str, float]

    @staticmethod
    def from_breakdown(**addends: float) -> "FunctionalReport":
        return FunctionalReport(value=float(sum(addends.values())),
                                breakdown={k: float(v) for k, v in addends.items()})

    def as_record(self, name: str) -> dict:
        """JSON-ready record for the diagnostics stream."""
        return {"name": name, "value": self.value, "breakdown": dict(self.breakdown)}


@dataclass(frozen=True)
class AdmissibleCheck:
    nonneg: bool
    total_mass: float
    per_species_mass: tuple[float, ...]
    membership: str  # "individual" | "average" | "neither"
    target_mass: float


def entropy_integrand(t: np.ndarray) -> np.ndarray:
    """f(t) = t*(log t - 1), continuously extended by f(0) = 0."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("entropy integrand requires nonnegative values")
    out = np.zeros_like(t)
    pos = t > 0.0
    out[pos] = t[pos] * (np.log(t[pos]) - 1.0)
    return out


def entropy(rho, measure: SpeciesMeasure, grid: Grid) -> float:
    """Measure-weighted entropy: integral of f(rho_a) dx dP(a)."""
    stack = density_stack(rho)
    per_atom = entropy_integrand(stack).sum(axis=1) * grid.h**2
    return float(np.dot(measure.weights_array, per_atom))


def dirichlet_energy(v: np.ndarray, grid: Grid) -> float:
    """0.5 * integral |grad v|^2 via summation by parts on the stencil."""
    return -0.5 * field_inner(laplacian_dirichlet(v, grid), v, grid)


def coupling_term(rho, v: np.ndarray, measure: SpeciesMeasure, grid: Grid) -> float:
    """Integral of alpha * rho_a * v dx dP(a)."""
    stack = density_stack(rho)
    signed = (measure.weights_array * measure.alphas_array) @ stack
    return field_inner(signed, v, grid)


def lyapunov(rho, v: np.ndarray, measure: SpeciesMeasure,
             grid: Grid) -> FunctionalReport:
    """Lyapunov functional of the fully parabolic system.

    entropy + Dirichlet energy of v - coupling of the signed densities to v.
    """
    return FunctionalReport.from_breakdown(
        entropy=entropy(rho, measure, grid),
        dirichlet=dirichlet_energy(v, grid),
        coupling=-coupling_term(rho, v, measure, grid),
    )


def free_energy(rho, measure: SpeciesMeasure, grid: Grid,
                green: GreenOperator) -> FunctionalReport:
    """Free energy: entropy minus half the Green self-interaction.

    The interaction uses the aggregated signed source s = sum w_j a_j rho_j
    and a single Poisson solve: -0.5 * <s, G s>.
    """
    stack = density_stack(rho)
    signed = (measure.weights_array * measure.alphas_array) @ stack
    pot = solve_poisson(signed, green)
    return FunctionalReport.from_breakdown(
        entropy=entropy(rho, measure, grid),
        interaction=-0.5 * field_inner(signed, pot, grid),
    )


def _guarded_exponentials(v: np.ndarray, measure: SpeciesMeasure) -> np.ndarray:
    """exp(a_j * v) stacked per atom; errors out instead of overflowing."""
    worst = float(np.max(np.abs(measure.alphas_array))) * float(np.max(np.abs(v)))
    if worst > EXP_GUARD:
        raise ExponentOverflowError(
            f"max |alpha * v| = {worst:.3g} exceeds {EXP_GUARD}; exp would overflow"
        )
    return np.exp(np.outer(measure.alphas_array, v))


def partition_terms(v: np.ndarray, measure: SpeciesMeasure,
                    grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Per-atom exponentials exp(a_j v) and their integrals Z_j."""
    expo = _guarded_exponentials(v, measure)
    return expo, grid.h**2 * expo.sum(axis=1)


def mean_field_energy(v: np.ndarray, measure: SpeciesMeasure, grid: Grid,
                      lam: float) -> FunctionalReport:
    """Mean-field energy under the average-mass constraint.

    Dirichlet energy - lam * log(double integral of exp(a v)) + lam*(log lam - 1).
    """
    if lam <= 0.0:
        raise ValueError("mass parameter must be positive")
    _, z = partition_terms(v, measure, grid)
    z_total = float(np.dot(measure.weights_array, z))
    return FunctionalReport.from_breakdown(
        dirichlet=dirichlet_energy(v, grid),
        log_term=-lam * np.log(z_total),
        constant=lam * (np.log(lam) - 1.0),
    )


def individual_mean_field_energy(v: np.ndarray, measure: SpeciesMeasure,
                                 grid: Grid, lam: float) -> FunctionalReport:
    """Mean-field energy under the individual-mass constraint.

    Same as the average variant except the log sits inside the atom average:
    - lam * sum_j w_j log(Z_j).  By Jensen this always dominates the average
    variant.
    """
    if lam <= 0.0:
        raise ValueError("mass parameter must be positive")
    _, z = partition_terms(v, measure, grid)
    return FunctionalReport.from_breakdown(
        dirichlet=dirichlet_energy(v, grid),
        log_term=-lam * float(np.dot(measure.weights_array, np.log(z))),
        constant=lam * (np.log(lam) - 1.0),
    )


def single_species_free_energy(psi: np.ndarray, grid: Grid,
                               green: GreenOperator) -> float:
    """Free energy of one species: integral f(psi) - 0.5 <psi, G psi>.

    This is the functional of the logarithmic HLS inequality; it equals
    free_energy for a single-atom measure at alpha = 1.
    """
    psi = np.asarray(psi, dtype=float)
    ent = integrate_field(entropy_integrand(psi), grid)
    return ent - 0.5 * field_inner(psi, solve_poisson(psi, green), grid)


def gibbs_density(v: np.ndarray, measure: SpeciesMeasure, grid: Grid,
                  lam: float) -> np.ndarray:
    """Density stack minimizing the Lyapunov functional at fixed potential.

    rho_j = lam * exp(a_j v) / Z with the joint normalization
    Z = h^2 sum_cells sum_j w_j exp(a_j v); the measure-weighted total mass
    is lam by construction.
    """
    if lam <= 0.0:
        raise ValueError("mass parameter must be positive")
    expo, z = partition_terms(v, measure, grid)
    z_total = float(np.dot(measure.weights_array, z))
    return lam * expo / z_total


def induced_potential(rho, measure: SpeciesMeasure, grid: Grid,
                      green: GreenOperator) -> np.ndarray:
    """Potential minimizing the Lyapunov functional at fixed densities."""
    return species_potential(rho, measure, green)


def species_masses(rho, measure: SpeciesMeasure, grid: Grid) -> np.ndarray:
    """Per-atom masses h^2 * sum(rho_j)."""
    return grid.h**2 * density_stack(rho).sum(axis=1)


def average_mass(rho, measure: SpeciesMeasure, grid: Grid) -> float:
    """Measure-weighted total mass: integral of rho dx dP."""
    return float(np.dot(measure.weights_array, species_masses(rho, measure, grid)))


def admissible_check(rho, measure: SpeciesMeasure, grid: Grid,
                     lam: float) -> AdmissibleCheck:
    """Classify a density stack against the two admissible sets.

    "individual": every per-species mass equals lam (within 1e-10 * lam);
    this implies "average" (measure-weighted total mass equals lam), which
    is reported when only the weaker constraint holds.
    """
    stack = density_stack(rho)
    nonneg = bool(np.all(stack >= 0.0))
    per = species_masses(stack, measure, grid)
    total = float(np.dot(measure.weights_array, per))
    tol = MASS_RTOL * lam
    if nonneg and np.all(np.abs(per - lam) <= tol):
        membership = "individual"
    elif nonneg and abs(total - lam) <= tol:
        membership = "average"
    else:
        membership = "neither"
    return AdmissibleCheck(nonneg=nonneg, total_mass=total,
                           per_species_mass=tuple(float(m) for m in per),
                           membership=membership, target_mass=lam)
