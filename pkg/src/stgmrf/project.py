"""Barycentric projection of mesh fields onto a regular raster."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .fem import TriMesh2D


@dataclass(frozen=True, eq=False)
class Projector:
    """Sparse interpolation from mesh vertices to raster points.

    Raster point ``(r, c)`` sits at ``(x[c], y[r])``; points outside the mesh
    are flagged in ``inside`` and come out as NaN.
    """

    x: np.ndarray
    y: np.ndarray
    matrix: sp.csr_matrix
    inside: np.ndarray

    @property
    def dims(self) -> tuple[int, int]:
        return (self.y.size, self.x.size)

    def project(self, field: np.ndarray) -> np.ndarray:
        vals = self.matrix @ np.asarray(field, dtype=np.float64)
        vals[~self.inside] = np.nan
        return vals.reshape(self.dims)


def projector(mesh: TriMesh2D, dims=(200, 200), window=None) -> Projector:
    """Build a projector over ``window = (x0, x1, y0, y1)`` (default: mesh bounding box).

    ``dims = (nx, ny)``.  A point on a shared edge takes the lowest-numbered
    triangle containing it.
    """
    nx, ny = int(dims[0]), int(dims[1])
    if nx < 2 or ny < 2:
        raise ValueError("raster must be at least 2x2")
    x0, x1, y0, y1 = window if window is not None else mesh.bbox()
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    owner = np.full(nx * ny, -1, dtype=np.int64)
    weights = np.zeros((nx * ny, 3))
    tri = mesh.triangles
    p = mesh.vertices[tri]
    lo = p.min(axis=1)
    hi = p.max(axis=1)
    span = max(x1 - x0, y1 - y0, 1e-300)
    tol = 1e-12
    for t in range(tri.shape[0]):
        cs = np.flatnonzero((xs >= lo[t, 0] - tol * span) & (xs <= hi[t, 0] + tol * span))
        rs = np.flatnonzero((ys >= lo[t, 1] - tol * span) & (ys <= hi[t, 1] + tol * span))
        if cs.size == 0 or rs.size == 0:
            continue
        R, C = np.meshgrid(rs, cs, indexing="ij")
        idx = (R * nx + C).ravel()
        free = owner[idx] < 0
        if not free.any():
            continue
        idx = idx[free]
        px = xs[idx % nx]
        py = ys[idx // nx]
        a, b, c = p[t]
        det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
        l1 = ((px - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (py - a[1])) / det
        l2 = ((b[0] - a[0]) * (py - a[1]) - (px - a[0]) * (b[1] - a[1])) / det
        l0 = 1.0 - l1 - l2
        ok = (l0 >= -tol) & (l1 >= -tol) & (l2 >= -tol)
        idx = idx[ok]
        owner[idx] = t
        weights[idx] = np.column_stack([l0[ok], l1[ok], l2[ok]])
    inside = owner >= 0
    pts = np.flatnonzero(inside)
    rows = np.repeat(pts, 3)
    cols = tri[owner[pts]].ravel()
    mat = sp.csr_matrix((weights[pts].ravel(), (rows, cols)), shape=(nx * ny, mesh.n))
    return Projector(xs, ys, mat, inside)


@dataclass(frozen=True, eq=False)
class FieldGrid:
    time_index: int
    values: np.ndarray

    def write_csv(self, path) -> None:
        lines = [",".join("nan" if np.isnan(v) else repr(float(v)) for v in row) for row in self.values]
        Path(path).write_text("\n".join(lines) + "\n")


def read_grid_csv(path) -> np.ndarray:
    rows = [ln.split(",") for ln in Path(path).read_text().splitlines() if ln.strip()]
    return np.array([[float(v) for v in r] for r in rows])
