"""Sparse Cholesky: ordering, symbolic analysis, numeric factorization, solves.

Typical use::

    perm = order(q, "amd")
    sym = analyze(q, perm)          # once per sparsity pattern
    f = factorize(q, sym, cores=4)  # as often as the values change
    x = solve_full(f, b)

Parallelism splits the elimination tree into independent subtrees that are
factorized on separate threads; the remaining top of the tree is done after
them.  Each column's arithmetic is fixed by the pattern alone, so output is
bit-identical for every ``cores`` value.
"""

from __future__ import annotations

import heapq
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import DimensionMismatch, NotPositiveDefinite
from .ordering import Permutation, order
from .sparse import SymmetricSparseMatrix, SparsityPattern

PIVOT_RELATIVE_TOL = 1e-13


@dataclass(frozen=True, eq=False)
class EliminationTree:
    parent: np.ndarray
    postorder: np.ndarray

    def children(self) -> list[np.ndarray]:
        n = self.parent.size
        kids = self.parent[self.parent >= 0]
        idx = np.flatnonzero(self.parent >= 0)
        order_ = np.argsort(kids, kind="stable")
        split = np.searchsorted(kids[order_], np.arange(n + 1))
        return [idx[order_[split[j]:split[j + 1]]] for j in range(n)]

    def roots(self) -> np.ndarray:
        return np.flatnonzero(self.parent < 0)


@dataclass(frozen=True, eq=False)
class Schedule:
    """Column lists: ``tasks`` are independent forests, ``top`` their common ancestors."""

    tasks: list
    top: np.ndarray


@dataclass(frozen=True, eq=False)
class SymbolicFactor:
    """Permutation, elimination tree and exact pattern of L for one input pattern."""

    pattern: SparsityPattern
    permutation: Permutation
    tree: EliminationTree
    colcounts: np.ndarray
    Lp: np.ndarray
    Li: np.ndarray
    Rp: np.ndarray
    Rj: np.ndarray
    # permuted upper triangle of the input, values gathered through ``src``
    Up: np.ndarray
    Ui: np.ndarray
    src: np.ndarray
    _schedules: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.pattern.n

    @property
    def nnz_l(self) -> int:
        return int(self.Lp[-1])

    def l_pattern(self) -> SparsityPattern:
        """Pattern of L in permuted coordinates."""
        return SparsityPattern(self.n, self.Lp, self.Li)

    def schedule(self, cores: int) -> Schedule:
        cores = max(1, int(cores))
        if cores not in self._schedules:
            self._schedules[cores] = _build_schedule(self, cores)
        return self._schedules[cores]


@dataclass(frozen=True, eq=False)
class CholeskyFactor:
    """Numeric factor with ``P Q P^T = L L^T``."""

    symbolic: SymbolicFactor
    values: np.ndarray

    @property
    def n(self) -> int:
        return self.symbolic.n

    @property
    def permutation(self) -> Permutation:
        return self.symbolic.permutation

    def diagonal(self) -> np.ndarray:
        return self.values[self.symbolic.Lp[:-1]]

    def to_scipy(self):
        import scipy.sparse as sp

        s = self.symbolic
        return sp.csc_matrix((self.values, s.Li, s.Lp), shape=(self.n, self.n))

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()


def analyze(q: SymmetricSparseMatrix, p: Permutation) -> SymbolicFactor:
    """Symbolic factorization of ``P Q P^T``; reusable for any values on ``q.pattern``."""
    n = q.n
    if p.n != n:
        raise DimensionMismatch(f"permutation of size {p.n} for a {n}x{n} matrix")
    rows = q.pattern.indices.astype(np.int64)
    cols = q.pattern.columns().astype(np.int64)
    a = p.inverse[rows]
    b = p.inverse[cols]
    ucol = np.maximum(a, b)
    urow = np.minimum(a, b)
    src = np.lexsort((urow, ucol))
    Ui = urow[src].astype(np.int32)
    Up = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(ucol, minlength=n), out=Up[1:])
    parent = K.etree(n, Up, Ui)
    post = K.postorder(parent)
    colcounts, Lp, Li, Rp, Rj = K.symbolic_pattern(n, Up, Ui, parent)
    arrays = [parent, post, colcounts, Lp, Li, Rp, Rj, Up, Ui, src]
    for arr in arrays:
        arr.setflags(write=False)
    return SymbolicFactor(
        pattern=q.pattern,
        permutation=p,
        tree=EliminationTree(parent, post),
        colcounts=colcounts,
        Lp=Lp,
        Li=Li,
        Rp=Rp,
        Rj=Rj,
        Up=Up,
        Ui=Ui,
        src=src,
    )


def _build_schedule(s: SymbolicFactor, cores: int) -> Schedule:
    n = s.n
    if cores == 1 or n < 64:
        return Schedule([np.arange(n)], np.empty(0, np.int64))
    parent = s.tree.parent
    work = s.colcounts.astype(np.float64) ** 2
    subtree = work.copy()
    for j in range(n):
        if parent[j] >= 0:
            subtree[parent[j]] += subtree[j]
    total = subtree[s.tree.roots()].sum()
    children = s.tree.children()
    # split the heaviest subtree until the pieces are small enough to balance
    heap = [(-subtree[r], int(r)) for r in s.tree.roots()]
    heapq.heapify(heap)
    is_top = np.zeros(n, dtype=bool)
    target = total / (4 * cores)
    while heap and len(heap) < 64 * cores:
        w, r = heap[0]
        if -w <= target or children[r].size == 0:
            break
        heapq.heappop(heap)
        is_top[r] = True
        for c in children[r]:
            heapq.heappush(heap, (-subtree[c], int(c)))
    roots = sorted(heap)
    # longest-processing-time bin packing, deterministic ties
    loads = [0.0] * cores
    label = np.full(n, -1, dtype=np.int64)
    for w, r in roots:
        b = min(range(cores), key=lambda i: (loads[i], i))
        loads[b] += -w
        label[r] = b
    for j in range(n - 1, -1, -1):
        if label[j] < 0 and not is_top[j] and parent[j] >= 0:
            label[j] = label[parent[j]]
    tasks = [np.flatnonzero(label == b) for b in range(cores)]
    tasks = [t for t in tasks if t.size]
    return Schedule(tasks, np.flatnonzero(is_top))


def _pivot_tol(values: np.ndarray, s: SymbolicFactor) -> float:
    diag = values[s.Up[1:] - 1]
    return max(0.0, PIVOT_RELATIVE_TOL * float(diag.max())) if diag.size else 0.0


def factorize(q: SymmetricSparseMatrix, s: SymbolicFactor, cores: int = 1) -> CholeskyFactor:
    """Numeric factorization of ``q`` on the pattern analysed in ``s``.

    Raises :class:`NotPositiveDefinite` when a pivot is non-positive or below
    ``1e-13 * max(diag(q))``; the reported column is the first failure in
    elimination order, whatever the number of workers.
    """
    if not q.pattern.same_as(s.pattern):
        raise DimensionMismatch("matrix pattern differs from the analysed pattern")
    n = s.n
    ux = K.gather(s.src, q.values)
    tol = _pivot_tol(ux, s)
    lx = np.zeros(s.nnz_l)
    fill = s.Lp[:-1].copy()
    sched = s.schedule(cores)

    def run(nodes):
        return K.cholesky_rows(nodes, s.Up, s.Ui, ux, s.Lp, s.Li, lx, s.Rp, s.Rj, fill, np.zeros(n), tol)

    if len(sched.tasks) == 1:
        failures = [run(sched.tasks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(sched.tasks)) as pool:
            failures = list(pool.map(run, sched.tasks))
    failures = [k for k in failures if k >= 0]
    if not failures and sched.top.size:
        failures = [k for k in [run(sched.top)] if k >= 0]
    if failures:
        k = min(failures)
        raise NotPositiveDefinite(k, int(s.permutation.perm[k]), float(lx[s.Lp[k]]))
    lx.setflags(write=False)
    return CholeskyFactor(s, lx)


def cholesky(q: SymmetricSparseMatrix, reordering: str = "amd", cores: int = 1) -> CholeskyFactor:
    """Order, analyse and factorize in one call."""
    return factorize(q, analyze(q, order(q, reordering)), cores)


def _as_block(f: CholeskyFactor, b):
    b = np.asarray(b, dtype=np.float64)
    if b.ndim not in (1, 2) or b.shape[0] != f.n:
        raise DimensionMismatch(f"right-hand side of shape {b.shape} for dimension {f.n}")
    return np.array(b.reshape(f.n, -1), order="C", copy=True), b.ndim == 1


def solve_lower(f: CholeskyFactor, b):
    """Solve ``L x = b`` in permuted coordinates."""
    x, vec = _as_block(f, b)
    s = f.symbolic
    K.lower_solve(s.Lp, s.Li, f.values, x)
    return x[:, 0] if vec else x


def solve_upper(f: CholeskyFactor, b):
    """Solve ``L^T x = b`` in permuted coordinates."""
    x, vec = _as_block(f, b)
    s = f.symbolic
    K.upper_solve(s.Lp, s.Li, f.values, x)
    return x[:, 0] if vec else x


def solve_full(f: CholeskyFactor, b):
    """Solve ``Q x = b`` in the original ordering."""
    x, vec = _as_block(f, b)
    s = f.symbolic
    perm = s.permutation.perm
    y = np.ascontiguousarray(x[perm])
    K.lower_solve(s.Lp, s.Li, f.values, y)
    K.upper_solve(s.Lp, s.Li, f.values, y)
    out = np.empty_like(y)
    out[perm] = y
    return out[:, 0] if vec else out


def logdet(f: CholeskyFactor) -> float:
    """``log|Q| = 2 * sum(log L_ii)``."""
    return float(2.0 * np.sum(np.log(f.diagonal())))
