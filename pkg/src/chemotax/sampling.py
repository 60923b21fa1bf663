"""Seeded random fields for the duality, minimizer, and gradient checks.

Smooth potentials are low-order Fourier sine sums (zero on the rectangle
boundary, decaying spectrum); admissible densities are positive random
stacks rescaled to the requested measure-weighted mass.  Everything is
driven by a caller-supplied generator so identical seeds reproduce
identical fields bit for bit.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid
from .measure import SpeciesMeasure


def smooth_potential(rng: np.random.Generator, grid: Grid, kmax: int = 4,
                     amplitude: float = 1.0) -> np.ndarray:
    """Random smooth field vanishing on the boundary of the bounding box."""
    if hasattr(grid.geometry, "lx"):
        lx, ly = grid.geometry.lx, grid.geometry.ly
        x0 = y0 = 0.0
    else:
        lx = ly = 2.0 * grid.geometry.radius
        x0 = grid.geometry.center[0] - grid.geometry.radius
        y0 = grid.geometry.center[1] - grid.geometry.radius
    coeff = rng.normal(size=(kmax, kmax))
    sx = np.pi * (grid.xc - x0) / lx
    sy = np.pi * (grid.yc - y0) / ly
    out = np.zeros(grid.ncells)
    for i in range(kmax):
        for j in range(kmax):
            out += coeff[i, j] / (1.0 + i * i + j * j) * \
                np.sin((i + 1) * sx) * np.sin((j + 1) * sy)
    return amplitude * out


def admissible_density(rng: np.random.Generator, grid: Grid,
                       measure: SpeciesMeasure, lam: float,
                       floor: float = 0.05) -> np.ndarray:
    """Positive random stack with measure-weighted total mass lam."""
    stack = np.abs(rng.normal(size=(measure.natoms, grid.ncells))) + floor
    total = float(measure.weights_array @ (grid.h**2 * stack.sum(axis=1)))
    return lam * stack / total


def single_density(rng: np.random.Generator, grid: Grid, lam: float,
                   floor: float = 0.05) -> np.ndarray:
    """Positive random field of mass lam (single species)."""
    psi = np.abs(rng.normal(size=grid.ncells)) + floor
    return lam * psi / (grid.h**2 * psi.sum())
