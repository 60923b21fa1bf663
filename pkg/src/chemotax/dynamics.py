"""Time integrators for the four dynamical regimes, with diagnostics.

Regimes
-------
full                 coupled parabolic system: per-species drift-diffusion
                     plus a damped heat equation for the chemical.
smoluchowski         parabolic-elliptic limit: the chemical potential is
                     slaved to the densities through the Green operator.
meanfield_average    nonlocal parabolic equation for the chemical when the
                     species relax instantly and only the measure-averaged
                     total mass is conserved.
meanfield_individual same, but each species' mass is conserved separately
                     (per-atom normalization inside the source).

Every step treats diffusion implicitly (backward Euler, one sparse solve per
field with factorizations cached per time-step size) and drift/source terms
explicitly.  Density updates use the Scharfetter-Gummel divergence, whose
face fluxes telescope: per-species masses are conserved to solver rounding.
The adaptive step policy quantizes dt to a power-of-two ladder under
``dt_max`` so the implicit factorizations are reused across steps.

Monotonicity of the regime's energy (Lyapunov functional, free energy,
mean-field energy) is a property of the continuous flow; the splitting is
not provably entropy-dissipative, so tests assert decay up to a small
per-step tolerance at resolved step sizes.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .functionals import (
    ExponentOverflowError,
    average_mass,
    free_energy,
    gibbs_density,
    individual_mean_field_energy,
    lyapunov,
    mean_field_energy,
    partition_terms,
    species_masses,
)
from .grid import (
    Grid,
    max_face_gradient,
    sg_flux_divergence,
    sg_loss_rates,
)
from .greens import GreenOperator, species_potential
from .measure import SpeciesMeasure

REGIMES = ("full", "smoluchowski", "meanfield_average", "meanfield_individual")

# runaway-density threshold: max rho beyond this terminates with a collapse flag
COLLAPSE_DENSITY_FACTOR = 1e12

# mesh-concentration threshold: one cell carrying this fraction of the average
# mass is the discrete signature of a Dirac (chemotactic collapse); conserved
# masses keep rho <= lam/h^2, so the runaway cap alone cannot fire at desk scale
COLLAPSE_CELL_MASS_FRACTION = 0.5

STEADY_STATE_RTOL = 1e-12

# rounding-level negatives produced by the explicit drift stage are clipped;
# anything larger indicates the step size is too big
NEGATIVE_CLIP_RTOL = 1e-12


class StepRefusedError(RuntimeError):
    """A step could not be taken (CFL violation or macroscopic negativity)."""


@dataclass(frozen=True)
class SimConfig:
    regime: str
    horizon: float
    delta: tuple[float, ...] = (1.0,)   # per-atom relaxation times, broadcastable
    epsilon: float = 1.0
    lam: float | None = None
    dt_policy: str = "cfl"              # "cfl" | "fixed"
    dt: float | None = None             # fixed step size
    dt_max: float | None = None         # adaptive ladder top (default h/4)
    dt_safety: float = 0.5
    diag_every: int = 1
    max_steps: int | None = None
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if any(d <= 0.0 for d in self.delta):
            raise ValueError("per-species relaxation times must be positive")
        if self.epsilon <= 0.0:
            raise ValueError("chemical relaxation time must be positive")
        if self.regime.startswith("meanfield") and (self.lam is None or self.lam <= 0.0):
            raise ValueError("mean-field regimes need a positive mass parameter")
        if self.dt_policy not in ("cfl", "fixed"):
            raise ValueError("dt policy must be 'cfl' or 'fixed'")
        if self.dt_policy == "fixed" and (self.dt is None or self.dt <= 0.0):
            raise ValueError("fixed dt policy needs a positive dt")
        if self.horizon < 0.0:
            raise ValueError("horizon must be nonnegative")

    def deltas_for(self, measure: SpeciesMeasure) -> np.ndarray:
        d = np.asarray(self.delta, dtype=float).reshape(-1)
        if d.size == 1:
            return np.full(measure.natoms, d[0])
        if d.size != measure.natoms:
            raise ValueError("delta list length must match the atom count")
        return d


@dataclass(frozen=True)
class SimState:
    time: float
    v: np.ndarray
    rho: np.ndarray | None = None  # (natoms, ncells); absent in mean-field regimes


TRAJ_COLUMNS_FIXED = ("time", "L", "F", "J_or_I", "min_rho", "max_abs_v")


@dataclass
class Trajectory:
    columns: list[str]
    rows: list[list[float]] = field(default_factory=list)
    snapshots: list[SimState] = field(default_factory=list)
    termination: str = "horizon"
    steps: int = 0
    final_state: SimState | None = None

    def column(self, name: str) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([row[k] for row in self.rows])

    @property
    def times(self) -> np.ndarray:
        return self.column("time")

    def mass_columns(self) -> np.ndarray:
        ks = [k for k, c in enumerate(self.columns) if c.startswith("mass_")]
        return np.array([[row[k] for k in ks] for row in self.rows])


# --- implicit diffusion solves ----------------------------------------------

_factor_cache: "weakref.WeakKeyDictionary[Grid, dict]" = weakref.WeakKeyDictionary()


def _implicit_solve(grid: Grid, kind: str, tau: float, rhs: np.ndarray) -> np.ndarray:
    """Solve (I - tau * Lap) x = rhs; factorizations cached per (kind, tau)."""
    per_grid = _factor_cache.setdefault(grid, {})
    key = (kind, float(tau))
    lu = per_grid.get(key)
    if lu is None:
        lap = (grid.laplacian_neumann_matrix if kind == "neumann"
               else grid.laplacian_dirichlet_matrix)
        lu = spla.splu((sp.identity(grid.ncells, format="csr") - tau * lap).tocsc())
        per_grid[key] = lu
    return lu.solve(rhs)


# --- step-size control -------------------------------------------------------

def cfl_dt_bound(v: np.ndarray, config: SimConfig, measure: SpeciesMeasure,
                 grid: Grid) -> float:
    """Drift CFL bound min(delta0, eps) * h / (2 max|alpha| max|grad v|).

    Infinite when the potential is flat.  Diffusion is implicit, so this only
    limits the explicitly treated drift/source terms.
    """
    gradmax = max_face_gradient(v, grid)
    alphamax = float(np.max(np.abs(measure.alphas_array)))
    if gradmax == 0.0 or alphamax == 0.0:
        return math.inf
    scale = min(float(np.min(config.deltas_for(measure))), config.epsilon)
    return scale * grid.h / (2.0 * alphamax * gradmax)


def explicit_positivity_dt(v: np.ndarray, measure: SpeciesMeasure, grid: Grid,
                           deltas: np.ndarray | None = None) -> float:
    """Largest dt for which one explicit Euler step of the SG divergence
    keeps every species nonnegative (M-matrix diagonal bound)."""
    if deltas is None:
        deltas = np.ones(measure.natoms)
    bound = math.inf
    for alpha, delta in zip(measure.alphas_array, np.broadcast_to(deltas, (measure.natoms,))):
        rate = float(np.max(sg_loss_rates(v, float(alpha), grid)))
        if rate > 0.0:
            bound = min(bound, delta / rate)
    return bound


def _choose_dt(state: SimState, config: SimConfig, measure: SpeciesMeasure,
               grid: Grid, remaining: float) -> float:
    dt_max = config.dt_max if config.dt_max is not None else grid.h / 4.0
    if config.dt_policy == "fixed":
        bound = cfl_dt_bound(state.v, config, measure, grid)
        if config.dt > bound:
            raise StepRefusedError(
                f"fixed dt {config.dt:.3e} above the CFL bound {bound:.3e}"
            )
        return min(config.dt, remaining)
    bound = config.dt_safety * cfl_dt_bound(state.v, config, measure, grid)
    target = min(dt_max, bound)
    # quantize to dt_max * 2^-k so implicit factorizations are reused
    k = max(0, math.ceil(math.log2(dt_max / target))) if target < dt_max else 0
    return min(dt_max * 0.5**k, remaining)


# --- steppers ----------------------------------------------------------------

def _advance_density(rho: np.ndarray, v: np.ndarray, dt: float,
                     measure: SpeciesMeasure, deltas: np.ndarray,
                     grid: Grid) -> np.ndarray:
    """IMEX update of every species: implicit Neumann diffusion, explicit
    SG drift correction, frozen potential.  Preserves each species' mass."""
    lap_n = grid.laplacian_neumann_matrix
    out = np.empty_like(rho)
    for j, (alpha, delta) in enumerate(zip(measure.alphas_array, deltas)):
        tau = dt / float(delta)
        drift = sg_flux_divergence(rho[j], v, float(alpha), grid) - lap_n @ rho[j]
        rhs = rho[j] + tau * drift
        new = _implicit_solve(grid, "neumann", tau, rhs)
        lowest = float(new.min())
        if lowest < 0.0:
            scale = float(np.max(np.abs(new)))
            if lowest < -NEGATIVE_CLIP_RTOL * max(scale, 1e-300):
                raise StepRefusedError(
                    f"species {j} went negative (min {lowest:.3e}); dt too large"
                )
            mass_before = new.sum()
            new = np.maximum(new, 0.0)
            if new.sum() > 0.0:
                new *= mass_before / new.sum()
        out[j] = new
    return out


def step_full(state: SimState, config: SimConfig, measure: SpeciesMeasure,
              grid: Grid, green: GreenOperator | None = None,
              dt: float | None = None) -> SimState:
    """One IMEX step of the fully parabolic system."""
    if state.rho is None:
        raise ValueError("full regime needs species densities")
    dt = _resolve_dt(state, config, measure, grid, dt)
    deltas = config.deltas_for(measure)
    rho_new = _advance_density(state.rho, state.v, dt, measure, deltas, grid)
    source = (measure.weights_array * measure.alphas_array) @ state.rho
    tau = dt / config.epsilon
    v_new = _implicit_solve(grid, "dirichlet", tau, state.v + tau * source)
    return SimState(time=state.time + dt, v=v_new, rho=rho_new)


def step_smoluchowski(state: SimState, config: SimConfig, measure: SpeciesMeasure,
                      grid: Grid, green: GreenOperator | None = None,
                      dt: float | None = None) -> SimState:
    """One IMEX step of the parabolic-elliptic system: the potential is
    recomputed from the densities before and after the density update."""
    if state.rho is None:
        raise ValueError("smoluchowski regime needs species densities")
    if green is None:
        raise ValueError("smoluchowski regime needs the Green operator")
    dt = _resolve_dt(state, config, measure, grid, dt)
    deltas = config.deltas_for(measure)
    v_now = species_potential(state.rho, measure, green)
    rho_new = _advance_density(state.rho, v_now, dt, measure, deltas, grid)
    v_new = species_potential(rho_new, measure, green)
    return SimState(time=state.time + dt, v=v_new, rho=rho_new)


def meanfield_source(v: np.ndarray, measure: SpeciesMeasure, grid: Grid,
                     lam: float, variant: str) -> np.ndarray:
    """Nonlocal source of the mean-field flows (also minus their gradient
    part beyond the Laplacian): lam * sum_j w_j a_j exp(a_j v) normalized
    jointly ("average") or per atom ("individual")."""
    expo, z = partition_terms(v, measure, grid)
    w, a = measure.weights_array, measure.alphas_array
    if variant == "average":
        z_total = float(np.dot(w, z))
        return lam * ((w * a) @ expo) / z_total
    return lam * ((w * a / z) @ expo)


def step_meanfield_average(state: SimState, config: SimConfig,
                           measure: SpeciesMeasure, grid: Grid,
                           dt: float | None = None) -> SimState:
    """One IMEX step of the average-mass mean-field flow for the chemical."""
    dt = _resolve_dt(state, config, measure, grid, dt)
    source = meanfield_source(state.v, measure, grid, config.lam, "average")
    v_new = _implicit_solve(grid, "dirichlet", dt, state.v + dt * source)
    return SimState(time=state.time + dt, v=v_new, rho=None)


def step_meanfield_individual(state: SimState, config: SimConfig,
                              measure: SpeciesMeasure, grid: Grid,
                              dt: float | None = None) -> SimState:
    """Same flow with per-species normalization inside the source."""
    dt = _resolve_dt(state, config, measure, grid, dt)
    source = meanfield_source(state.v, measure, grid, config.lam, "individual")
    v_new = _implicit_solve(grid, "dirichlet", dt, state.v + dt * source)
    return SimState(time=state.time + dt, v=v_new, rho=None)


def _resolve_dt(state, config, measure, grid, dt):
    if dt is not None:
        return dt
    return _choose_dt(state, config, measure, grid, remaining=math.inf)


_STEPPERS = {
    "full": step_full,
    "smoluchowski": step_smoluchowski,
    "meanfield_average": step_meanfield_average,
    "meanfield_individual": step_meanfield_individual,
}


def steady_state_residual(v: np.ndarray, measure: SpeciesMeasure, grid: Grid,
                          lam: float, variant: str = "average") -> float:
    """Discrete L2 norm of Lap(v) + source(v) for the mean-field equations."""
    if lam <= 0.0:
        raise ValueError("mass parameter must be positive")
    if variant not in ("average", "individual"):
        raise ValueError("variant must be 'average' or 'individual'")
    res = grid.laplacian_dirichlet_matrix @ v
    res = res + meanfield_source(v, measure, grid, lam, variant)
    return float(np.sqrt(grid.h**2 * np.dot(res, res)))


# --- trajectories -------------------------------------------------------------

def _implied_density(v: np.ndarray, measure: SpeciesMeasure, grid: Grid,
                     lam: float, variant: str) -> np.ndarray:
    if variant == "average":
        return gibbs_density(v, measure, grid, lam)
    expo, z = partition_terms(v, measure, grid)
    return lam * expo / z[:, None]


def _collapsed(state: SimState, config: SimConfig, measure: SpeciesMeasure,
               grid: Grid, lam: float) -> bool:
    """Blow-up signal: runaway density, or one cell holding most of a species.

    On a fixed mesh a supercritical flow concentrates into a grid-scale spike
    instead of overflowing, so concentration is the operative signature.
    """
    if state.rho is not None:
        stack = state.rho
        if float(stack.max()) > COLLAPSE_DENSITY_FACTOR / grid.h**2:
            return True
    else:
        variant = "individual" if config.regime == "meanfield_individual" else "average"
        stack = _implied_density(state.v, measure, grid, lam, variant)
    masses = stack.sum(axis=1)
    peaks = stack.max(axis=1)
    live = masses > 0.0
    if not live.any():
        return False
    return bool(np.max(peaks[live] / masses[live]) > COLLAPSE_CELL_MASS_FRACTION)


def _diagnostics(state: SimState, config: SimConfig, measure: SpeciesMeasure,
                 grid: Grid, green: GreenOperator, lam: float) -> list[float]:
    if state.rho is not None:
        rho = state.rho
        j_or_i = mean_field_energy(state.v, measure, grid, lam).value
    elif config.regime == "meanfield_individual":
        rho = _implied_density(state.v, measure, grid, lam, "individual")
        j_or_i = individual_mean_field_energy(state.v, measure, grid, lam).value
    else:
        rho = _implied_density(state.v, measure, grid, lam, "average")
        j_or_i = mean_field_energy(state.v, measure, grid, lam).value
    ell = lyapunov(rho, state.v, measure, grid).value
    eff = free_energy(rho, measure, grid, green).value
    masses = species_masses(rho, measure, grid)
    row = [state.time, ell, eff, j_or_i]
    row.extend(float(m) for m in masses)
    row.append(float(rho.min()))
    row.append(float(np.max(np.abs(state.v))))
    return row


def trajectory_columns(measure: SpeciesMeasure) -> list[str]:
    cols = ["time", "L", "F", "J_or_I"]
    cols.extend(f"mass_{k}" for k in range(measure.natoms))
    cols.extend(["min_rho", "max_abs_v"])
    return cols


def run(initial: SimState, config: SimConfig, measure: SpeciesMeasure,
        grid: Grid, green: GreenOperator) -> Trajectory:
    """Advance a regime to its horizon, collecting diagnostics.

    Terminates at the horizon, on a blow-up signal (exponent overflow in the
    mean-field source or runaway density; flagged ``collapse``), or when the
    state stops changing (``steady``).  Step errors are re-raised annotated
    with the simulation time.
    """
    stepper = _STEPPERS[config.regime]
    lam = config.lam
    if lam is None:
        if initial.rho is None:
            raise ValueError("mass parameter required without densities")
        lam = average_mass(initial.rho, measure, grid)

    if config.regime == "smoluchowski" and initial.rho is not None:
        initial = replace(initial, v=species_potential(initial.rho, measure, green))

    traj = Trajectory(columns=trajectory_columns(measure))
    snap_due = sorted(config.snapshot_times)

    def record(state) -> bool:
        """Append diagnostics; a blow-up while evaluating them counts as collapse."""
        try:
            traj.rows.append(_diagnostics(state, config, measure, grid, green, lam))
            return True
        except ExponentOverflowError:
            traj.termination = "collapse"
            return False

    state = initial
    traj.final_state = state
    while snap_due and state.time >= snap_due[0] - 1e-14:
        traj.snapshots.append(state)
        snap_due.pop(0)
    if not record(state):
        return traj
    try:
        if _collapsed(state, config, measure, grid, lam):
            traj.termination = "collapse"
            return traj
    except ExponentOverflowError:
        traj.termination = "collapse"
        return traj

    t_end = config.horizon
    recorded_last = True
    while t_end > 0.0 and state.time < t_end * (1.0 - 1e-14):
        if config.max_steps is not None and traj.steps >= config.max_steps:
            traj.termination = "max_steps"
            break
        dt = _choose_dt(state, config, measure, grid, remaining=t_end - state.time)
        try:
            new_state = stepper(state, config, measure, grid, dt=dt) \
                if config.regime.startswith("meanfield") \
                else stepper(state, config, measure, grid, green, dt=dt)
        except ExponentOverflowError:
            traj.termination = "collapse"
            break
        except StepRefusedError as exc:
            raise StepRefusedError(f"t={state.time:.6g}: {exc}") from exc
        traj.steps += 1

        while snap_due and new_state.time >= snap_due[0] * (1.0 - 1e-14):
            traj.snapshots.append(new_state)
            snap_due.pop(0)

        change = float(np.max(np.abs(new_state.v - state.v)))
        scale = 1.0 + float(np.max(np.abs(new_state.v)))
        if new_state.rho is not None:
            change = max(change, float(np.max(np.abs(new_state.rho - state.rho))))
            scale = max(scale, 1.0 + float(np.max(new_state.rho)))
        state = new_state
        traj.final_state = state

        try:
            if _collapsed(state, config, measure, grid, lam):
                record(state)
                traj.termination = "collapse"
                return traj
        except ExponentOverflowError:
            traj.termination = "collapse"
            return traj

        recorded_last = traj.steps % config.diag_every == 0
        if recorded_last and not record(state):
            return traj

        if change / (dt * scale) < STEADY_STATE_RTOL:
            if not recorded_last:
                record(state)
                recorded_last = True
            traj.termination = "steady"
            break
    if not recorded_last:
        record(state)
    return traj


# --- initial data -------------------------------------------------------------

def gaussian_bump(grid: Grid, center: tuple[float, float], width: float,
                  mass: float) -> np.ndarray:
    """Smooth positive bump normalized to the requested mass."""
    g = np.exp(-((grid.xc - center[0]) ** 2 + (grid.yc - center[1]) ** 2)
               / (2.0 * width**2))
    total = grid.h**2 * g.sum()
    return mass * g / total


def uniform_density(grid: Grid, mass: float) -> np.ndarray:
    return np.full(grid.ncells, mass / grid.area)


def initial_density_stack(grid: Grid, measure: SpeciesMeasure, per_species_mass: float,
                          kind: str = "gaussian-bump",
                          center: tuple[float, float] | None = None,
                          width: float = 0.1) -> np.ndarray:
    """Identical initial profile for every species, each of the given mass."""
    if center is None:
        center = (float(grid.xc.mean()), float(grid.yc.mean()))
    if kind == "uniform":
        base = uniform_density(grid, per_species_mass)
    elif kind == "gaussian-bump":
        base = gaussian_bump(grid, center, width, per_species_mass)
    else:
        raise ValueError(f"unknown initial preset {kind!r}")
    return np.tile(base, (measure.natoms, 1))
