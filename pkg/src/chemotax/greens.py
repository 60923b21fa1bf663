"""Discrete Green operator for -Laplace with Dirichlet data, and friends.

The operator is the inverse of the mesh's Dirichlet Laplacian, realized by a
sparse LU factorization computed once per grid and reused by every solve.
Because the matrix is a symmetric M-matrix, the discrete Green operator is
symmetric and inverse-positive, mirroring the continuous kernel.

``robin_self`` estimates the regular (Robin) part of the Green function on
the diagonal: the discrete Green column minus the logarithmic singularity is
averaged on rings of cells around the pole and extrapolated to radius zero.
"""

from __future__ import annotations

import threading

import numpy as np
import scipy.sparse.linalg as spla

from .grid import Grid, density_stack
from .measure import SpeciesMeasure


class GreenOperator:
    """Factorized -Laplacian (Dirichlet); thread-safe shared solver."""

    def __init__(self, grid: Grid):
        self.grid = grid
        matrix = (-grid.laplacian_dirichlet_matrix).tocsc()
        if grid.ncells == 0:
            raise ValueError("cannot factorize: grid has no interior cells")
        self._lu = spla.splu(matrix)
        self._lock = threading.Lock()

    def solve(self, f: np.ndarray) -> np.ndarray:
        with self._lock:
            return self._lu.solve(np.asarray(f, dtype=float))


def solve_poisson(f: np.ndarray, green: GreenOperator) -> np.ndarray:
    """Solve -Lap(v) = f with homogeneous Dirichlet data."""
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValueError("source field contains non-finite entries")
    return green.solve(f)


def green_convolve(psi: np.ndarray, green: GreenOperator) -> np.ndarray:
    """Green convolution G * psi; alias of solve_poisson."""
    return solve_poisson(psi, green)


def species_potential(rho, measure: SpeciesMeasure, green: GreenOperator) -> np.ndarray:
    """Potential induced by the species family.

    Solves -Lap(v) = sum_j w_j a_j rho_j, the aggregated signed source of
    the parabolic-elliptic system; also the potential minimizing the
    Lyapunov functional at fixed densities.
    """
    stack = density_stack(rho)
    source = (measure.weights_array * measure.alphas_array) @ stack
    return solve_poisson(source, green)


def robin_self(green: GreenOperator, cell: int,
               radii_in_h: tuple[float, ...] = (2.0, 3.0, 4.0)) -> float:
    """Robin function (regular part of G on the diagonal) at a cell.

    The Green column for a discrete delta at ``cell`` is corrected by the
    continuum singularity ``log|x - x0| / (2*pi)``, averaged on rings of
    cells at the given radii (in units of h), and the ring values are
    extrapolated to radius zero with a quadratic fit.  The pole must sit at
    least ``max(radii) * h`` away from the boundary.
    """
    grid = green.grid
    h = grid.h
    delta = grid.zeros()
    delta[cell] = 1.0 / h**2
    column = solve_poisson(delta, green)

    dx = grid.xc - grid.xc[cell]
    dy = grid.yc - grid.yc[cell]
    dist = np.hypot(dx, dy)

    radii = np.asarray(radii_in_h, dtype=float) * h
    if np.any(grid.n_boundary_faces[dist <= radii.max() + 0.51 * h] > 0):
        raise ValueError("cell is too close to the boundary for a Robin estimate")

    ring_r = np.empty(radii.size)
    ring_val = np.empty(radii.size)
    for k, r in enumerate(radii):
        on_ring = np.abs(dist - r) <= 0.5 * h
        if not on_ring.any():
            raise ValueError(f"no cells on the ring of radius {r}")
        vals = column[on_ring] + np.log(dist[on_ring]) / (2.0 * np.pi)
        ring_r[k] = dist[on_ring].mean()
        ring_val[k] = vals.mean()

    coeffs = np.polynomial.polynomial.polyfit(ring_r, ring_val, deg=2)
    return float(coeffs[0])
