"""Cell-centered finite-volume mesh on a rectangle or a masked disk.

Fields live on interior cells only and are stored as flat float64 vectors;
``Grid.index`` maps (row, col) raster positions to flat indices.  Two
discrete operators are provided:

* ``laplacian_dirichlet`` -- 5-point Laplacian with a homogeneous Dirichlet
  condition imposed through mirror ghosts (the ghost cell carries ``-u`` so
  the face value is 0).  Symmetric negative definite.
* ``sg_flux_divergence`` -- divergence of Scharfetter-Gummel drift-diffusion
  fluxes for ``div(grad(rho) - alpha * rho * grad(v))`` with zero-flux
  boundary faces.  The exponential fitting makes the flux vanish identically
  on Gibbs states ``rho = C * exp(alpha * v)``, and the face fluxes telescope,
  so the discrete total mass is conserved to rounding.

The disk geometry is realized by masking a uniform Cartesian mesh: cells
whose centers fall inside the disk are kept.  Mass conservation and operator
symmetry are exact on the masked mesh; boundary accuracy is first order,
which is all the experiments need.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class Rectangle:
    lx: float
    ly: float

    def as_dict(self) -> dict:
        return {"kind": "rectangle", "lx": self.lx, "ly": self.ly}


@dataclass(frozen=True)
class Disk:
    radius: float
    center: tuple[float, float] = (0.0, 0.0)

    def as_dict(self) -> dict:
        return {"kind": "disk", "radius": self.radius, "center": list(self.center)}


@dataclass(eq=False)
class Grid:
    """Immutable after construction; operator matrices are cached lazily."""

    nx: int
    ny: int
    h: float
    geometry: Rectangle | Disk
    mask: np.ndarray       # (ny, nx) bool, True on interior cells
    index: np.ndarray      # (ny, nx) int, flat interior index or -1
    xc: np.ndarray         # (n,) cell-center x
    yc: np.ndarray         # (n,) cell-center y
    face_i: np.ndarray     # (m,) flat index of the lower/left cell of a face
    face_j: np.ndarray     # (m,) flat index of the upper/right cell
    n_boundary_faces: np.ndarray  # (n,) boundary faces per cell

    @property
    def ncells(self) -> int:
        return self.xc.size

    @property
    def area(self) -> float:
        """Measure of the discrete domain, (interior cell count) * h**2."""
        return self.ncells * self.h**2

    def zeros(self) -> np.ndarray:
        return np.zeros(self.ncells)

    def full_raster(self, u: np.ndarray, fill: float = np.nan) -> np.ndarray:
        """Scatter an interior-cell field onto the (ny, nx) raster."""
        out = np.full((self.ny, self.nx), fill)
        out[self.mask] = u
        return out

    def cell_at(self, x: float, y: float) -> int:
        """Flat index of the interior cell containing the point (x, y)."""
        ix = int(np.argmin(np.abs(self._x_axis - x)))
        iy = int(np.argmin(np.abs(self._y_axis - y)))
        k = self.index[iy, ix]
        if k < 0:
            raise ValueError(f"point ({x}, {y}) is not inside the domain")
        return int(k)

    @cached_property
    def _x_axis(self) -> np.ndarray:
        cols = np.flatnonzero(self.mask.any(axis=0))
        xmin = self.xc.min() - cols.min() * self.h
        return xmin + self.h * np.arange(self.nx)

    @cached_property
    def _y_axis(self) -> np.ndarray:
        rows = np.flatnonzero(self.mask.any(axis=1))
        ymin = self.yc.min() - rows.min() * self.h
        return ymin + self.h * np.arange(self.ny)

    @cached_property
    def laplacian_dirichlet_matrix(self) -> sp.csr_matrix:
        """5-point Laplacian, Dirichlet boundary via mirror ghosts."""
        n = self.ncells
        i, j = self.face_i, self.face_j
        off = np.ones(i.size) / self.h**2
        diag = -(self._interior_degree + 2.0 * self.n_boundary_faces) / self.h**2
        mat = sp.coo_matrix(
            (
                np.concatenate([off, off, diag]),
                (np.concatenate([i, j, np.arange(n)]),
                 np.concatenate([j, i, np.arange(n)])),
            ),
            shape=(n, n),
        )
        return mat.tocsr()

    @cached_property
    def laplacian_neumann_matrix(self) -> sp.csr_matrix:
        """5-point Laplacian with zero-flux boundary faces."""
        n = self.ncells
        i, j = self.face_i, self.face_j
        off = np.ones(i.size) / self.h**2
        diag = -self._interior_degree / self.h**2
        mat = sp.coo_matrix(
            (
                np.concatenate([off, off, diag]),
                (np.concatenate([i, j, np.arange(n)]),
                 np.concatenate([j, i, np.arange(n)])),
            ),
            shape=(n, n),
        )
        return mat.tocsr()

    @cached_property
    def _interior_degree(self) -> np.ndarray:
        deg = np.bincount(self.face_i, minlength=self.ncells)
        deg += np.bincount(self.face_j, minlength=self.ncells)
        return deg.astype(float)


def make_rectangle_grid(nx: int, ny: int, lx: float = 1.0, ly: float = 1.0) -> Grid:
    """Uniform mesh on [0, lx] x [0, ly]; requires square cells."""
    hx, hy = lx / nx, ly / ny
    if abs(hx - hy) > 1e-12 * max(hx, hy):
        raise ValueError("cells must be square: lx/nx must equal ly/ny")
    mask = np.ones((ny, nx), dtype=bool)
    return _assemble(nx, ny, hx, Rectangle(lx, ly), mask,
                     x0=0.5 * hx, y0=0.5 * hy)


def make_disk_grid(n: int, radius: float = 1.0,
                   center: tuple[float, float] = (0.0, 0.0)) -> Grid:
    """Masked uniform mesh on the disk; n cells across the bounding square."""
    h = 2.0 * radius / n
    cx, cy = center
    x = cx - radius + (np.arange(n) + 0.5) * h
    y = cy - radius + (np.arange(n) + 0.5) * h
    xx, yy = np.meshgrid(x, y)
    mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= radius**2
    if not mask.any():
        raise ValueError("disk mesh has no interior cells")
    return _assemble(n, n, h, Disk(radius, center), mask,
                     x0=x[0], y0=y[0])


def _assemble(nx, ny, h, geometry, mask, x0, y0) -> Grid:
    index = np.full((ny, nx), -1, dtype=np.int64)
    index[mask] = np.arange(mask.sum())
    iy, ix = np.nonzero(mask)
    xc = x0 + h * ix.astype(float)
    yc = y0 + h * iy.astype(float)

    # interior faces: east (col, col+1) and north (row, row+1) pairs
    east = mask[:, :-1] & mask[:, 1:]
    north = mask[:-1, :] & mask[1:, :]
    fi = np.concatenate([index[:, :-1][east], index[:-1, :][north]])
    fj = np.concatenate([index[:, 1:][east], index[1:, :][north]])

    deg = np.bincount(fi, minlength=mask.sum()) + np.bincount(fj, minlength=mask.sum())
    n_bfaces = 4.0 - deg

    return Grid(nx=nx, ny=ny, h=h, geometry=geometry, mask=mask, index=index,
                xc=xc, yc=yc, face_i=fi.astype(np.int64), face_j=fj.astype(np.int64),
                n_boundary_faces=n_bfaces)


def make_grid(geometry: Rectangle | Disk, nx: int, ny: int | None = None) -> Grid:
    if isinstance(geometry, Rectangle):
        return make_rectangle_grid(nx, ny if ny is not None else nx,
                                   geometry.lx, geometry.ly)
    return make_disk_grid(nx, geometry.radius, geometry.center)


# --- field operations -------------------------------------------------------

def bernoulli(s: np.ndarray) -> np.ndarray:
    """B(s) = s / (exp(s) - 1) with B(0) = 1, evaluated branch-wise.

    A Taylor branch below |s| = 1e-5 avoids the 0/0 cancellation; the
    extreme branches keep the function finite where exp over/underflows.
    """
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    small = np.abs(s) < 1e-5
    out[small] = 1.0 - 0.5 * s[small] + s[small] ** 2 / 12.0
    huge = s > 700.0
    out[huge] = 0.0
    tiny = s < -700.0
    out[tiny] = -s[tiny]
    rest = ~(small | huge | tiny)
    out[rest] = s[rest] / np.expm1(s[rest])
    return out


def laplacian_dirichlet(u: np.ndarray, grid: Grid) -> np.ndarray:
    """Discrete Laplacian of u with u = 0 enforced at boundary faces."""
    return grid.laplacian_dirichlet_matrix @ u


def sg_flux_divergence(rho: np.ndarray, v: np.ndarray, alpha: float,
                       grid: Grid) -> np.ndarray:
    """Per-cell divergence of Scharfetter-Gummel fluxes, zero-flux boundary.

    For the face between cells i and j the normal flux of
    ``grad(rho) - alpha * rho * grad(v)`` is approximated by
    ``(B(s) rho_j - B(-s) rho_i) / h`` with ``s = alpha * (v_j - v_i)``.
    At alpha = 0 this reduces exactly to the Neumann 5-point Laplacian.
    """
    i, j = grid.face_i, grid.face_j
    s = alpha * (v[j] - v[i])
    flux = bernoulli(s) * rho[j] - bernoulli(-s) * rho[i]
    n = grid.ncells
    out = np.bincount(i, weights=flux, minlength=n)
    out -= np.bincount(j, weights=flux, minlength=n)
    return out / grid.h**2


def sg_loss_rates(v: np.ndarray, alpha: float, grid: Grid) -> np.ndarray:
    """Per-cell outflow coefficient of the SG operator (for CFL bounds).

    Cell i loses mass at rate ``sum_faces B(-s_f) / h**2`` times rho_i;
    explicit Euler keeps rho nonnegative iff dt times this rate is <= 1.
    """
    i, j = grid.face_i, grid.face_j
    s = alpha * (v[j] - v[i])
    n = grid.ncells
    loss = np.bincount(i, weights=bernoulli(-s), minlength=n)
    loss += np.bincount(j, weights=bernoulli(s), minlength=n)
    return loss / grid.h**2


def integrate_field(u: np.ndarray, grid: Grid) -> float:
    """Domain integral of a cell field, h**2 times the cell sum."""
    return float(grid.h**2 * np.sum(u))


def field_inner(u: np.ndarray, w: np.ndarray, grid: Grid) -> float:
    """Discrete L2 inner product h**2 * sum(u * w)."""
    return float(grid.h**2 * np.dot(u, w))


def max_face_gradient(v: np.ndarray, grid: Grid) -> float:
    """Largest |v_j - v_i| / h over interior faces."""
    if grid.face_i.size == 0:
        return 0.0
    return float(np.max(np.abs(v[grid.face_j] - v[grid.face_i])) / grid.h)


@dataclass(frozen=True)
class SpeciesDensity:
    """Stack of per-species densities: row k belongs to measure atom k."""

    fields: np.ndarray  # (natoms, ncells)

    def __post_init__(self):
        if self.fields.ndim != 2:
            raise ValueError("species density must be a (natoms, ncells) stack")
        if np.any(self.fields < 0.0):
            raise ValueError("species densities must be nonnegative")


def density_stack(rho) -> np.ndarray:
    """Accept a SpeciesDensity or a raw (natoms, ncells) array."""
    if isinstance(rho, SpeciesDensity):
        return rho.fields
    arr = np.asarray(rho, dtype=float)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    return arr
