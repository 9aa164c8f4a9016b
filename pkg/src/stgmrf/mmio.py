"""Matrix Market coordinate files and plain-text vectors.

Symmetric matrices are written as their lower triangle with 1-based indices.
Values use the shortest round-trip representation, so write -> read is exact
and repeated writes are byte-identical.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import MatrixMarketError
from .sparse import ProjectionMatrix, SymmetricSparseMatrix, from_triplets

SYMMETRIC_HEADER = "%%MatrixMarket matrix coordinate real symmetric"
GENERAL_HEADER = "%%MatrixMarket matrix coordinate real general"


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_coordinate(path, header, shape, rows, cols, vals):
    lines = [header, f"{shape[0]} {shape[1]} {len(vals)}"]
    lines.extend(
        f"{r + 1} {c + 1} {_fmt(v)}" for r, c, v in zip(rows.tolist(), cols.tolist(), vals.tolist())
    )
    Path(path).write_text("\n".join(lines) + "\n")


def write_symmetric(path, a: SymmetricSparseMatrix) -> None:
    rows, cols, vals = a.triplets()
    _write_coordinate(path, SYMMETRIC_HEADER, a.shape, rows, cols, vals)


def write_general(path, shape, rows, cols, vals) -> None:
    _write_coordinate(
        path, GENERAL_HEADER, shape, np.asarray(rows), np.asarray(cols), np.asarray(vals)
    )


def write_projection(path, a: ProjectionMatrix) -> None:
    rows = np.repeat(np.arange(a.shape[0]), np.diff(a.indptr))
    write_general(path, a.shape, rows, a.indices, a.data)


def _read_coordinate(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise MatrixMarketError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or not lines[0].lower().startswith("%%matrixmarket"):
        raise MatrixMarketError(f"{path}: missing %%MatrixMarket header")
    tokens = lines[0].lower().split()
    if len(tokens) != 5 or tokens[1] != "matrix" or tokens[2] != "coordinate":
        raise MatrixMarketError(f"{path}: only 'matrix coordinate' files are supported")
    field, symmetry = tokens[3], tokens[4]
    if field not in ("real", "integer", "double"):
        raise MatrixMarketError(f"{path}: unsupported field '{field}'")
    if symmetry not in ("symmetric", "general"):
        raise MatrixMarketError(f"{path}: unsupported symmetry '{symmetry}'")
    body = [ln for ln in lines[1:] if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise MatrixMarketError(f"{path}: missing size line")
    try:
        m, n, nnz = (int(t) for t in body[0].split())
    except ValueError as exc:
        raise MatrixMarketError(f"{path}: bad size line {body[0]!r}") from exc
    entries = body[1:]
    if len(entries) != nnz:
        raise MatrixMarketError(f"{path}: expected {nnz} entries, found {len(entries)}")
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    try:
        for k, ln in enumerate(entries):
            r, c, v = ln.split()
            rows[k] = int(r) - 1
            cols[k] = int(c) - 1
            vals[k] = float(v)
    except ValueError as exc:
        raise MatrixMarketError(f"{path}: bad entry line {k + 2}: {ln!r}") from exc
    if nnz and (rows.min() < 0 or cols.min() < 0 or rows.max() >= m or cols.max() >= n):
        raise MatrixMarketError(f"{path}: index out of range")
    return symmetry, (m, n), rows, cols, vals


def read_symmetric(path) -> SymmetricSparseMatrix:
    """Read a symmetric matrix (either triangle may be stored in the file)."""
    symmetry, (m, n), rows, cols, vals = _read_coordinate(path)
    if m != n:
        raise MatrixMarketError(f"{path}: matrix is not square ({m}x{n})")
    if symmetry == "general":
        # both triangles present: check they agree, keep the lower one
        full = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        if (full != full.T).nnz:
            raise MatrixMarketError(f"{path}: general matrix is not symmetric")
        keep = rows >= cols
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
    key = np.maximum(rows, cols) * n + np.minimum(rows, cols)
    if np.unique(key).size != key.size:
        raise MatrixMarketError(f"{path}: duplicate entries")
    return from_triplets(n, rows, cols, vals)


def read_general(path) -> ProjectionMatrix:
    symmetry, shape, rows, cols, vals = _read_coordinate(path)
    if symmetry == "symmetric":
        off = rows != cols
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, vals[off]]),
        )
    try:
        return ProjectionMatrix.from_triplets(rows, cols, vals, shape)
    except ValueError as exc:
        raise MatrixMarketError(f"{path}: {exc}") from exc


def write_vector(path, x: np.ndarray) -> None:
    """One row per line; columns of a 2-D array separated by single spaces."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    lines = [" ".join(_fmt(v) for v in row) for row in x.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_vector(path) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise MatrixMarketError(f"cannot read {path}: {exc}") from exc
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not rows:
        raise MatrixMarketError(f"{path}: empty vector file")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise MatrixMarketError(f"{path}: ragged rows")
    try:
        out = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise MatrixMarketError(f"{path}: {exc}") from exc
    return out[:, 0] if width == 1 else out
