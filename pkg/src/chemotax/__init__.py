"""Numerical laboratory for a multi-species chemotaxis model.

Species indexed by a sensitivity in [-1, 1] (attracted or repelled by one
chemical) interact through drift-diffusion dynamics coupled to a Poisson or
heat equation for the chemical.  The package provides structure-preserving
finite-volume solvers for the model's dynamical regimes, exact evaluation of
its energy functionals and their duality identities, and concentration
experiments locating the 8*pi critical mass.
"""

from .measure import (
    SpeciesMeasure,
    critical_mass_average,
    critical_mass_individual,
    integrate_alpha,
    make_measure,
)
from .grid import (
    Disk,
    Grid,
    Rectangle,
    SpeciesDensity,
    integrate_field,
    laplacian_dirichlet,
    make_disk_grid,
    make_grid,
    make_rectangle_grid,
    sg_flux_divergence,
)
from .greens import GreenOperator, green_convolve, robin_self, solve_poisson, species_potential
from .functionals import (
    AdmissibleCheck,
    FunctionalReport,
    admissible_check,
    entropy,
    free_energy,
    gibbs_density,
    individual_mean_field_energy,
    induced_potential,
    lyapunov,
    mean_field_energy,
    single_species_free_energy,
)
from .dynamics import (
    SimConfig,
    SimState,
    Trajectory,
    run,
    steady_state_residual,
    step_full,
    step_meanfield_average,
    step_meanfield_individual,
    step_smoluchowski,
)
from .bubbles import (
    BubbleScan,
    bubble_density,
    bubble_species_density,
    collapse_experiment,
    expansion_report,
    liouville_bubble,
)

__version__ = "0.1.0"
