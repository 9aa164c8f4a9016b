"""Piecewise-linear finite element matrices on 1-D and triangular 2-D meshes.

``c0`` is the lumped (diagonal) mass matrix and ``g1`` the stiffness matrix
with free (Neumann) boundaries.  Higher orders follow
``g_m = g_{m-1} c0^{-1} g1``, which keeps everything sparse.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, MeshError
from .sparse import SymmetricSparseMatrix, diagonal, from_scipy, from_triplets


@dataclass(frozen=True, eq=False)
class Mesh1D:
    nodes: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.nodes, dtype=np.float64)
        if t.ndim != 1 or t.size < 2:
            raise MeshError("a 1-D mesh needs at least two nodes")
        if np.any(np.diff(t) <= 0):
            raise MeshError("1-D mesh nodes must be strictly increasing")
        object.__setattr__(self, "nodes", t)

    @property
    def n(self) -> int:
        return self.nodes.size


@dataclass(frozen=True, eq=False)
class TriMesh2D:
    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        t = np.asarray(self.triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 2:
            raise MeshError("vertices must be an (n, 2) array")
        if t.ndim != 2 or t.shape[1] != 3 or t.shape[0] == 0:
            raise MeshError("triangles must be a non-empty (m, 3) array")
        if t.min() < 0 or t.max() >= v.shape[0]:
            raise MeshError("triangle vertex index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    @property
    def n(self) -> int:
        return self.vertices.shape[0]

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def bbox(self) -> tuple[float, float, float, float]:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1])

    def boundary_edges(self) -> np.ndarray:
        """Edges used by exactly one triangle, as (k, 2) vertex pairs."""
        t = self.triangles
        edges = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
        uniq, counts = np.unique(edges, axis=0, return_counts=True)
        return uniq[counts == 1]

    def boundary_distance(self) -> np.ndarray:
        """Distance from every vertex to the mesh boundary."""
        e = self.boundary_edges()
        a = self.vertices[e[:, 0]]
        b = self.vertices[e[:, 1]]
        ab = b - a
        out = np.empty(self.n)
        for start in range(0, self.n, 512):
            p = self.vertices[start:start + 512, None, :]
            t = np.clip(np.sum((p - a) * ab, axis=2) / np.sum(ab * ab, axis=1), 0.0, 1.0)
            d = p - (a + t[..., None] * ab)
            out[start:start + 512] = np.sqrt(np.min(np.sum(d * d, axis=2), axis=1))
        return out


@dataclass(frozen=True, eq=False)
class FemMatrices:
    c0: SymmetricSparseMatrix
    g: tuple

    @property
    def order(self) -> int:
        return len(self.g)

    @property
    def n(self) -> int:
        return self.c0.n

    def gm(self, m: int) -> SymmetricSparseMatrix:
        """``g_m`` for ``m >= 1``."""
        if not 1 <= m <= len(self.g):
            raise ValueError(f"g{m} not assembled (order {self.order})")
        return self.g[m - 1]

    @property
    def g1(self):
        return self.gm(1)

    @property
    def g2(self):
        return self.gm(2)

    @property
    def g3(self):
        return self.gm(3)


def _higher_orders(c0: np.ndarray, g1: sp.csr_matrix, order: int) -> tuple:
    out = [g1]
    dinv = sp.diags(1.0 / c0)
    for _ in range(order - 1):
        nxt = (out[-1] @ dinv @ g1).tocsr()
        out.append(0.5 * (nxt + nxt.T))
    return tuple(from_scipy(m) for m in out)


def fem_1d(mesh: Mesh1D, order: int = 2) -> FemMatrices:
    """Linear elements on an interval mesh."""
    if order < 1:
        raise ValueError("order must be at least 1")
    t = mesh.nodes
    n = t.size
    h = np.diff(t)
    c0 = np.zeros(n)
    c0[:-1] += h / 2
    c0[1:] += h / 2
    i = np.arange(n - 1)
    rows = np.concatenate([i, i + 1, i, i + 1])
    cols = np.concatenate([i, i + 1, i + 1, i])
    vals = np.concatenate([1 / h, 1 / h, -1 / h, -1 / h])
    g1 = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return FemMatrices(diagonal(c0), _higher_orders(c0, g1, order))


def fem_2d(mesh: TriMesh2D, order: int = 4) -> FemMatrices:
    """Linear triangle elements: lumped mass |T|/3 per vertex, gradient stiffness."""
    if order < 1:
        raise ValueError("order must be at least 1")
    area = np.abs(mesh.signed_areas())
    x0, x1, y0, y1 = mesh.bbox()
    scale2 = max(x1 - x0, y1 - y0) ** 2
    bad = np.flatnonzero(area < 1e-14 * scale2)
    if bad.size:
        raise MeshError(f"degenerate triangle {int(bad[0])} (area {area[bad[0]]:.3e})")
    tri = mesh.triangles
    p = mesh.vertices[tri]
    # edge opposite vertex a is p[b] - p[c]; grad phi_a = rot90(edge) / (2 * signed area)
    sa = mesh.signed_areas()
    edges = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    grads = np.stack([-edges[..., 1], edges[..., 0]], axis=-1) / (2 * sa)[:, None, None]
    local = area[:, None, None] * np.einsum("tad,tbd->tab", grads, grads)
    n = mesh.n
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    g1 = sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))
    g1 = 0.5 * (g1 + g1.T)
    c0 = np.bincount(tri.ravel(), weights=np.repeat(area / 3, 3), minlength=n)
    if np.any(c0 <= 0):
        raise MeshError("mesh has vertices not used by any triangle")
    return FemMatrices(diagonal(c0), _higher_orders(c0, g1.tocsr(), order))


def temporal_boundary(n: int) -> SymmetricSparseMatrix:
    """0.5 at the first and last diagonal positions (structural zeros elsewhere)."""
    if n < 2:
        raise ValueError("need at least two time points")
    return from_triplets(n, [0, n - 1], [0, n - 1], [0.5, 0.5])


def structured_mesh(x_range, y_range, nx: int, ny: int) -> TriMesh2D:
    """Regular nx-by-ny vertex grid, each cell cut along its lower-left/upper-right diagonal.

    Vertex ``iy * nx + ix`` sits at ``(x[ix], y[iy])``.
    """
    if nx < 2 or ny < 2:
        raise MeshError("need at least 2 vertices in each direction")
    x0, x1 = map(float, x_range)
    y0, y1 = map(float, y_range)
    if not (x1 > x0 and y1 > y0):
        raise MeshError("ranges must be increasing")
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    ix, iy = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1))
    v00 = (iy * nx + ix).ravel()
    v10 = v00 + 1
    v01 = v00 + nx
    v11 = v01 + 1
    tris = np.concatenate([np.column_stack([v00, v10, v11]), np.column_stack([v00, v11, v01])])
    return TriMesh2D(vertices, tris)


def read_mesh(path) -> Mesh1D | TriMesh2D:
    """Plain-text mesh: ``V T`` header, V coordinate lines, T triangle lines (0-based).

    ``T == 0`` with one coordinate per line is a 1-D mesh.
    """
    try:
        lines = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    except OSError as exc:
        raise MeshError(f"cannot read {path}: {exc}") from exc
    try:
        nv, nt = int(lines[0][0]), int(lines[0][1])
        coords = np.array([[float(v) for v in ln] for ln in lines[1:1 + nv]])
        tris = np.array([[int(v) for v in ln] for ln in lines[1 + nv:1 + nv + nt]], dtype=np.int64)
    except (IndexError, ValueError) as exc:
        raise MeshError(f"{path}: malformed mesh file") from exc
    if coords.shape[0] != nv or tris.shape[0] != nt or len(lines) != 1 + nv + nt:
        raise MeshError(f"{path}: header says {nv} vertices and {nt} triangles")
    if nt == 0:
        if coords.ndim != 2 or coords.shape[1] != 1:
            raise MeshError(f"{path}: 1-D mesh needs one coordinate per line")
        return Mesh1D(coords[:, 0])
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise MeshError(f"{path}: 2-D mesh needs two coordinates per line")
    if tris.ndim != 2 or tris.shape[1] != 3:
        raise MeshError(f"{path}: triangle lines need three vertex indices")
    return TriMesh2D(coords, tris)


def write_mesh(path, mesh: Mesh1D | TriMesh2D) -> None:
    if isinstance(mesh, Mesh1D):
        lines = [f"{mesh.n} 0"] + [repr(float(t)) for t in mesh.nodes]
    else:
        lines = [f"{mesh.n} {mesh.triangles.shape[0]}"]
        lines += [f"{float(x)!r} {float(y)!r}" for x, y in mesh.vertices]
        lines += [f"{a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def check_compatible(tfem: FemMatrices, m1: SymmetricSparseMatrix) -> None:
    if tfem.n != m1.n:
        raise DimensionMismatch(f"temporal FEM has {tfem.n} nodes, boundary matrix {m1.n}")
