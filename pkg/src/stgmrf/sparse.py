"""Symmetric sparse matrices stored as the lower triangle in compressed-column form.

Patterns are structural: entries that cancel to zero stay in the pattern, and
the diagonal is always present.  All arrays are made read-only after
construction so matrices can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch

INDEX_DTYPE = np.int32
PTR_DTYPE = np.int64
_MAX_INDEX = np.iinfo(INDEX_DTYPE).max


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SparsityPattern:
    """Lower-triangle CSC pattern (diagonal included, rows sorted per column)."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        indptr = _readonly(np.asarray(self.indptr, dtype=PTR_DTYPE))
        indices = _readonly(np.asarray(self.indices, dtype=INDEX_DTYPE))
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        n = int(self.n)
        if indptr.shape != (n + 1,) or indptr[0] != 0 or indptr[-1] != indices.size:
            raise ValueError("column pointer array is inconsistent")
        counts = np.diff(indptr)
        if np.any(counts < 1):
            raise ValueError("every column must store its diagonal entry")
        cols = np.repeat(np.arange(n, dtype=PTR_DTYPE), counts)
        if indices.size and np.any(indices[indptr[:-1]] != np.arange(n)):
            raise ValueError("diagonal entry missing or row below the diagonal")
        step = np.diff(indices.astype(PTR_DTYPE))
        same_col = cols[1:] == cols[:-1]
        if np.any(step[same_col] <= 0):
            raise ValueError("row indices must increase strictly within a column")
        if indices.size and indices.max() >= n:
            raise ValueError("row index out of range")

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def columns(self) -> np.ndarray:
        """Column index of every stored entry."""
        return np.repeat(np.arange(self.n, dtype=INDEX_DTYPE), np.diff(self.indptr))

    def same_as(self, other: "SparsityPattern") -> bool:
        if self is other:
            return True
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def __eq__(self, other):
        if not isinstance(other, SparsityPattern):
            return NotImplemented
        return self.same_as(other)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SymmetricSparseMatrix:
    """Symmetric matrix: a :class:`SparsityPattern` plus one value per stored entry."""

    pattern: SparsityPattern
    values: np.ndarray

    def __post_init__(self):
        values = _readonly(np.asarray(self.values, dtype=np.float64))
        if values.shape != (self.pattern.nnz,):
            raise ValueError(
                f"expected {self.pattern.nnz} values, got {values.shape}"
            )
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.pattern.n

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @property
    def nnz(self) -> int:
        return self.pattern.nnz

    def diagonal(self) -> np.ndarray:
        return self.values[self.pattern.indptr[:-1]].copy()

    def triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(rows, cols, values) of the stored lower triangle."""
        return self.pattern.indices.copy(), self.pattern.columns(), self.values.copy()

    def lower_scipy(self) -> sp.csc_matrix:
        p = self.pattern
        return sp.csc_matrix(
            (self.values.copy(), p.indices.copy(), p.indptr.copy()), shape=self.shape
        )

    def to_scipy(self) -> sp.csc_matrix:
        """Full symmetric matrix as scipy CSC (structural zeros kept)."""
        rows, cols, vals = self.triplets()
        off = rows != cols
        r = np.concatenate([rows, cols[off]])
        c = np.concatenate([cols, rows[off]])
        v = np.concatenate([vals, vals[off]])
        return sp.csc_matrix((v, (r, c)), shape=self.shape)

    def to_dense(self) -> np.ndarray:
        rows, cols, vals = self.triplets()
        out = np.zeros(self.shape)
        out[rows, cols] = vals
        out[cols, rows] = vals
        return out

    def scaled(self, alpha: float) -> "SymmetricSparseMatrix":
        return SymmetricSparseMatrix(self.pattern, alpha * self.values)

    def __repr__(self):
        return f"SymmetricSparseMatrix(n={self.n}, nnz={self.nnz})"


@dataclass(frozen=True, eq=False)
class ProjectionMatrix:
    """General sparse matrix in CSR form (rows = observations)."""

    shape: tuple[int, int]
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "shape", (int(self.shape[0]), int(self.shape[1])))
        object.__setattr__(self, "indptr", _readonly(np.asarray(self.indptr, dtype=PTR_DTYPE)))
        object.__setattr__(self, "indices", _readonly(np.asarray(self.indices, dtype=INDEX_DTYPE)))
        object.__setattr__(self, "data", _readonly(np.asarray(self.data, dtype=np.float64)))
        m, n = self.shape
        if self.indptr.shape != (m + 1,) or self.indptr[-1] != self.indices.size:
            raise ValueError("row pointer array is inconsistent")
        if self.data.shape != self.indices.shape:
            raise ValueError("data and indices differ in length")
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= n):
            raise ValueError("column index out of range")
        rows = np.repeat(np.arange(m), np.diff(self.indptr))
        key = rows.astype(np.int64) * max(n, 1) + self.indices
        if np.unique(key).size != key.size:
            raise ValueError("duplicate (row, col) entries in projection matrix")

    @classmethod
    def from_triplets(cls, rows, cols, values, shape) -> "ProjectionMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        order = np.lexsort((cols, rows))
        rows, cols, values = rows[order], cols[order], values[order]
        indptr = np.zeros(shape[0] + 1, dtype=PTR_DTYPE)
        np.cumsum(np.bincount(rows, minlength=shape[0]), out=indptr[1:])
        return cls(shape, indptr, cols, values)

    @classmethod
    def from_scipy(cls, a) -> "ProjectionMatrix":
        a = sp.csr_matrix(a)
        a.sort_indices()
        return cls(a.shape, a.indptr, a.indices, a.data)

    @classmethod
    def selection(cls, rows_to_cols, n: int) -> "ProjectionMatrix":
        """One unit entry per row, picking latent index ``rows_to_cols[r]``."""
        cols = np.asarray(rows_to_cols, dtype=np.int64)
        m = cols.size
        return cls.from_triplets(np.arange(m), cols, np.ones(m), (m, n))

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.data.copy(), self.indices.copy(), self.indptr.copy()), shape=self.shape
        )

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def delete_rows(self, keep: np.ndarray) -> "ProjectionMatrix":
        return ProjectionMatrix.from_scipy(self.to_scipy()[np.asarray(keep)])

    @property
    def nnz(self) -> int:
        return int(self.indices.size)


def from_triplets(n: int, rows, cols, values) -> SymmetricSparseMatrix:
    """Assemble from (row, col, value) triplets of either triangle.

    Duplicates are summed; every entry is folded into the lower triangle, so
    callers must pass each off-diagonal pair only once.  Missing diagonal
    positions are added as structural zeros.
    """
    if n > _MAX_INDEX:
        raise OverflowError(f"dimension {n} exceeds the index type")
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)
    if rows.size and (min(rows.min(), cols.min()) < 0 or max(rows.max(), cols.max()) >= n):
        raise ValueError("triplet index out of range")
    lo = np.maximum(rows, cols)
    hi = np.minimum(rows, cols)
    diag = np.arange(n, dtype=np.int64)
    r = np.concatenate([lo, diag])
    c = np.concatenate([hi, diag])
    v = np.concatenate([values, np.zeros(n)])
    key = c * n + r
    order = np.argsort(key, kind="stable")
    key = key[order]
    v = v[order]
    starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
    summed = np.add.reduceat(v, starts) if v.size else v
    ukey = key[starts]
    ucols = ukey // n if n else ukey
    urows = ukey - ucols * n
    indptr = np.zeros(n + 1, dtype=PTR_DTYPE)
    np.cumsum(np.bincount(ucols, minlength=n), out=indptr[1:])
    return SymmetricSparseMatrix(SparsityPattern(n, indptr, urows), summed)


def from_scipy(a) -> SymmetricSparseMatrix:
    """Lower triangle of a (symmetric) scipy or dense matrix, explicit zeros kept."""
    a = sp.coo_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"matrix is not square: {a.shape}")
    keep = a.row >= a.col
    return from_triplets(a.shape[0], a.row[keep], a.col[keep], a.data[keep])


def from_dense(d: np.ndarray) -> SymmetricSparseMatrix:
    """Lower-triangle nonzeros of a dense symmetric array."""
    d = np.asarray(d, dtype=np.float64)
    rows, cols = np.nonzero(np.tril(d))
    return from_triplets(d.shape[0], rows, cols, d[rows, cols])


def identity(n: int) -> SymmetricSparseMatrix:
    return diagonal(np.ones(n))


def diagonal(values) -> SymmetricSparseMatrix:
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    return SymmetricSparseMatrix(
        SparsityPattern(n, np.arange(n + 1), np.arange(n)), values
    )


def scale(a: SymmetricSparseMatrix, alpha: float) -> SymmetricSparseMatrix:
    return a.scaled(alpha)


def add_scaled(
    a: SymmetricSparseMatrix, b: SymmetricSparseMatrix, alpha: float = 1.0, beta: float = 1.0
) -> SymmetricSparseMatrix:
    """``alpha*a + beta*b`` on the union of both patterns."""
    if a.n != b.n:
        raise DimensionMismatch(f"cannot add {a.n}x{a.n} and {b.n}x{b.n}")
    if a.pattern.same_as(b.pattern):
        return SymmetricSparseMatrix(a.pattern, alpha * a.values + beta * b.values)
    ra, ca, va = a.triplets()
    rb, cb, vb = b.triplets()
    return from_triplets(
        a.n,
        np.concatenate([ra, rb]),
        np.concatenate([ca, cb]),
        np.concatenate([alpha * va, beta * vb]),
    )


def linear_combination(terms) -> SymmetricSparseMatrix:
    """Sum of ``coef * matrix`` over ``(coef, matrix)`` pairs, union pattern."""
    terms = list(terms)
    n = terms[0][1].n
    rows, cols, vals = [], [], []
    for coef, m in terms:
        if m.n != n:
            raise DimensionMismatch("all terms must share one dimension")
        r, c, v = m.triplets()
        rows.append(r)
        cols.append(c)
        vals.append(coef * v)
    return from_triplets(n, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))


def _full_triplets(a: SymmetricSparseMatrix):
    rows, cols, vals = a.triplets()
    off = rows != cols
    return (
        np.concatenate([rows, cols[off]]).astype(np.int64),
        np.concatenate([cols, rows[off]]).astype(np.int64),
        np.concatenate([vals, vals[off]]),
    )


def kron(a: SymmetricSparseMatrix, b: SymmetricSparseMatrix) -> SymmetricSparseMatrix:
    """Kronecker product; entry ``(i*m + k, j*m + l) = a[i, j] * b[k, l]`` with ``m = b.n``."""
    m = b.n
    n = a.n * m
    if n > _MAX_INDEX:
        raise OverflowError(f"Kronecker dimension {a.n}*{b.n} exceeds the index type")
    ar, ac, av = _full_triplets(a)
    br, bc, bv = _full_triplets(b)
    rows = (ar[:, None] * m + br[None, :]).ravel()
    cols = (ac[:, None] * m + bc[None, :]).ravel()
    vals = (av[:, None] * bv[None, :]).ravel()
    keep = rows >= cols
    return from_triplets(n, rows[keep], cols[keep], vals[keep])


def normal_product(A: ProjectionMatrix, w: float) -> SymmetricSparseMatrix:
    """``w * A^T A`` as a symmetric sparse matrix."""
    if not w > 0:
        raise ValueError("weight must be positive")
    a = A.to_scipy()
    ata = (a.T @ a).tocoo()
    keep = ata.row >= ata.col
    return from_triplets(A.shape[1], ata.row[keep], ata.col[keep], w * ata.data[keep])


def matvec(a, x: np.ndarray) -> np.ndarray:
    """``a @ x`` for a symmetric or projection matrix; ``x`` may be 1-D or 2-D."""
    x = np.asarray(x, dtype=np.float64)
    ncols = a.shape[1]
    if x.shape[0] != ncols:
        raise DimensionMismatch(f"operand has {x.shape[0]} rows, matrix has {ncols} columns")
    return np.asarray(a.to_scipy() @ x)
