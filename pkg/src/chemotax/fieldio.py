"""On-disk formats: field snapshots, trajectory CSV, run metadata JSON.

Snapshot binary layout (little endian):

    8 bytes   magic  b"CHXFLD01"
    4 bytes   uint32 header length H
    H bytes   UTF-8 JSON: {"nx", "ny", "h", "geometry", "name", "time"}
    nx*ny*8   float64 raster, row-major, NaN outside the domain mask

CSV files use ',' separators, '.' decimals, a header row, and LF line
endings.  Floats are written with ``repr`` (shortest round-trip form), so
identical runs produce byte-identical files.  JSON is UTF-8 with sorted
keys for the same reason.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .dynamics import Trajectory
from .grid import Disk, Grid, Rectangle

MAGIC = b"CHXFLD01"


def _fmt(x: float) -> str:
    return repr(float(x))


def write_field(path, u: np.ndarray, grid: Grid, name: str = "field",
                time: float = 0.0) -> None:
    header = json.dumps(
        {"nx": grid.nx, "ny": grid.ny, "h": grid.h,
         "geometry": grid.geometry.as_dict(), "name": name, "time": time},
        sort_keys=True).encode()
    raster = grid.full_raster(np.asarray(u, dtype=float))
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(raster.astype("<f8").tobytes(order="C"))


def read_field(path, grid: Grid | None = None) -> tuple[np.ndarray, dict]:
    """Read a snapshot; returns the interior-cell vector and the header.

    When a grid is supplied the raster is gathered through its mask after a
    shape check; otherwise the cells marked NaN are dropped in raster order.
    """
    with open(path, "rb") as fh:
        if fh.read(8) != MAGIC:
            raise ValueError(f"{path}: not a field snapshot")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode())
        raster = np.frombuffer(fh.read(), dtype="<f8").reshape(
            header["ny"], header["nx"])
    if grid is not None:
        if (grid.nx, grid.ny) != (header["nx"], header["ny"]) or \
                abs(grid.h - header["h"]) > 1e-12 * grid.h:
            raise ValueError(f"{path}: snapshot mesh does not match the grid")
        return raster[grid.mask].copy(), header
    return raster[~np.isnan(raster)].copy(), header


def write_field_csv(path, u: np.ndarray, grid: Grid) -> None:
    """Plain-text snapshot for small grids: one interior cell per row."""
    u = np.asarray(u, dtype=float)
    with open(path, "w", newline="") as fh:
        fh.write("x,y,value\n")
        for x, y, val in zip(grid.xc, grid.yc, u):
            fh.write(f"{_fmt(x)},{_fmt(y)},{_fmt(val)}\n")


def write_trajectory_csv(path, traj: Trajectory) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(traj.columns) + "\n")
        for row in traj.rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def write_json(path, payload: dict) -> None:
    with open(path, "w", newline="") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def geometry_from_dict(spec: dict):
    kind = spec.get("kind")
    if kind == "rectangle":
        return Rectangle(float(spec["lx"]), float(spec["ly"]))
    if kind == "disk":
        center = spec.get("center", (0.0, 0.0))
        return Disk(float(spec["radius"]), (float(center[0]), float(center[1])))
    raise ValueError(f"unknown geometry kind {kind!r}")
