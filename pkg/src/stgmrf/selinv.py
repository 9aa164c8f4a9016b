"""Selected inversion: entries of ``Q^{-1}`` on the pattern of the Cholesky factor.

The backward Takahashi recursion runs from the last column to the first.  The
pattern of L contains the pattern of ``P Q P^T``, so every ``(Q^{-1})_ij``
with ``Q_ij != 0`` is available; callers only ever see original indices.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .factor import CholeskyFactor
from .sparse import SparsityPattern, SymmetricSparseMatrix, from_triplets


@dataclass(frozen=True, eq=False)
class SelectedInverse:
    """``Q^{-1}`` on pattern(L).  ``values`` are stored in factor (permuted) order."""

    factor: CholeskyFactor
    values: np.ndarray

    @property
    def n(self) -> int:
        return self.factor.n

    def diag(self) -> np.ndarray:
        """Marginal variances in the original ordering."""
        s = self.factor.symbolic
        out = np.empty(self.n)
        out[s.permutation.perm] = self.values[s.Lp[:-1]]
        return out

    def positions(self, rows, cols) -> np.ndarray:
        """Storage positions for original-index pairs; -1 where outside pattern(L)."""
        s = self.factor.symbolic
        inv = s.permutation.inverse
        a = inv[np.asarray(rows, dtype=np.int64)]
        b = inv[np.asarray(cols, dtype=np.int64)]
        return K.lookup(s.Lp, s.Li, np.maximum(a, b), np.minimum(a, b))

    def get(self, i: int, j: int) -> float:
        p = self.positions(np.array([i]), np.array([j]))[0]
        if p < 0:
            raise KeyError(f"({i}, {j}) is outside the computed pattern")
        return float(self.values[p])

    def on_pattern(self, pattern: SparsityPattern) -> np.ndarray:
        """Values at every stored position of ``pattern`` (e.g. pattern(Q)), in its storage order."""
        p = self.positions(pattern.indices, pattern.columns())
        if np.any(p < 0):
            raise KeyError("pattern is not contained in pattern(L)")
        return self.values[p]

    def to_matrix(self) -> SymmetricSparseMatrix:
        """Symmetric matrix in the original ordering over the permuted-back pattern(L)."""
        s = self.factor.symbolic
        perm = s.permutation.perm
        rows = perm[s.Li.astype(np.int64)]
        cols = perm[np.repeat(np.arange(self.n), np.diff(s.Lp))]
        return from_triplets(self.n, rows, cols, self.values)


def selected_inverse(f: CholeskyFactor, cores: int = 1) -> SelectedInverse:
    """Entries of ``Q^{-1}`` on pattern(L) via the Takahashi recursions."""
    s = f.symbolic
    n = s.n
    zx = np.zeros(s.nnz_l)
    width = int(s.colcounts.max()) if n else 0
    sched = s.schedule(cores)

    def run(nodes):
        return K.selinv_columns(nodes[::-1].copy(), s.Lp, s.Li, f.values, zx, np.zeros(width))

    if sched.top.size:
        run(sched.top)
    if len(sched.tasks) == 1:
        run(sched.tasks[0])
    else:
        with ThreadPoolExecutor(max_workers=len(sched.tasks)) as pool:
            list(pool.map(run, sched.tasks))
    zx.setflags(write=False)
    return SelectedInverse(f, zx)


def marginal_variances(f: CholeskyFactor, cores: int = 1) -> np.ndarray:
    """Diagonal of ``Q^{-1}`` in the original ordering."""
    return selected_inverse(f, cores).diag()
