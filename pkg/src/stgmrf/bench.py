"""Benchmark matrices with 3-D Laplace-like structure and a multicore timing harness.

The sparse block couples lattice nodes of an n x n x n cube whose integer
offsets satisfy ``0 < dx^2 + dy^2 + dz^2 <= 5``; that stencil has exactly 56
points, so interior nodes have 56 neighbours.  ``dense_rows`` extra rows are
coupled to everything (fixed effects) and are numbered last.
"""

from __future__ import annotations

import csv
import itertools
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MemoryCapExceeded
from .factor import analyze, factorize, logdet
from .ordering import order
from .selinv import selected_inverse
from .sparse import SymmetricSparseMatrix, from_triplets

STENCIL_RADIUS2 = 5
DENSE_VALUE = -1e-3
MEM_CAP_ENV = "STGMRF_MEM_CAP_BYTES"
DEFAULT_MEM_CAP = 4 * 1024**3
CSV_HEADER = ["n", "cores", "op", "rep", "seconds", "nnz_q", "nnz_l", "bytes_peak"]


@dataclass
class BenchConfig:
    n: int
    dense_rows: int = 25
    cores_list: list[int] = field(default_factory=lambda: [1])
    reps: int = 1
    seed: int = 0
    reordering: str = "amd"

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("cube side must be at least 2")
        if self.dense_rows < 0:
            raise ValueError("dense_rows must be non-negative")
        if not self.cores_list or list(self.cores_list) != sorted(self.cores_list) or min(self.cores_list) < 1:
            raise ValueError("cores_list must be non-empty, ascending and positive")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")


@dataclass(frozen=True)
class TimingRecord:
    n: int
    cores: int
    op: str
    rep: int
    seconds: float
    nnz_q: int
    nnz_l: int
    bytes_peak: int

    def row(self) -> list:
        return [self.n, self.cores, self.op, self.rep, repr(self.seconds), self.nnz_q, self.nnz_l, self.bytes_peak]


def stencil_offsets(radius2: int = STENCIL_RADIUS2) -> np.ndarray:
    """All non-zero integer offsets with squared length <= radius2."""
    r = int(np.floor(np.sqrt(radius2)))
    rng = range(-r, r + 1)
    offs = [o for o in itertools.product(rng, rng, rng) if 0 < o[0] ** 2 + o[1] ** 2 + o[2] ** 2 <= radius2]
    return np.array(offs, dtype=np.int64)


def _half_offsets() -> np.ndarray:
    offs = stencil_offsets()
    # one representative per +/- pair: lexicographically positive
    keep = [tuple(o) > (0, 0, 0) for o in offs]
    return offs[np.array(keep)]


def lattice_pair_count(n: int) -> int:
    """Number of neighbour pairs (strict lower-triangle entries) of the lattice block."""
    return int(sum((n - abs(dx)) * (n - abs(dy)) * (n - abs(dz)) for dx, dy, dz in _half_offsets()
                   if max(abs(dx), abs(dy), abs(dz)) < n))


def lower_value_bytes(n: int, dense_rows: int = 0, include_diagonal: bool = True) -> int:
    """Bytes of double-precision values for the stored lower triangle, computed without allocating."""
    nodes = n**3
    count = lattice_pair_count(n)
    if include_diagonal:
        count += nodes + dense_rows
    count += dense_rows * nodes + dense_rows * (dense_rows - 1) // 2
    return 8 * count


def estimate_bytes(cfg: BenchConfig) -> int:
    """Rough memory need of the input matrix (values plus indices, with sort workspace)."""
    return 4 * lower_value_bytes(cfg.n, cfg.dense_rows) * 12 // 8


def _mem_cap() -> int:
    return int(os.environ.get(MEM_CAP_ENV, DEFAULT_MEM_CAP))


def bench_matrix(cfg: BenchConfig) -> SymmetricSparseMatrix:
    """SPD test matrix of dimension ``n^3 + dense_rows``.

    Off-diagonals are -1 inside the lattice and -1e-3 on the dense rows; each
    diagonal is ``(neighbour count + 1)`` plus a seeded perturbation in
    [0, 0.01), so every row is strictly diagonally dominant.
    """
    need = estimate_bytes(cfg)
    if need > _mem_cap():
        raise MemoryCapExceeded(
            f"bench matrix for n={cfg.n} needs about {need} bytes, cap is {_mem_cap()} ({MEM_CAP_ENV})"
        )
    n = cfg.n
    nodes = n**3
    dim = nodes + cfg.dense_rows
    idx = np.arange(nodes, dtype=np.int64)
    x = idx % n
    y = (idx // n) % n
    z = idx // (n * n)
    rows, cols = [], []
    for dx, dy, dz in _half_offsets():
        ok = (x + dx >= 0) & (x + dx < n) & (y + dy >= 0) & (y + dy < n) & (z + dz >= 0) & (z + dz < n)
        src = idx[ok]
        rows.append(src + dx + n * (dy + n * dz))
        cols.append(src)
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    v = np.full(r.size, -1.0)
    degree = np.bincount(r, minlength=dim) + np.bincount(c, minlength=dim)
    dr, dc = [], []
    for k in range(cfg.dense_rows):
        row = nodes + k
        dr.append(np.full(row, row))
        dc.append(np.arange(row))
        degree[row] += row
        degree[:row] += 1
    if cfg.dense_rows:
        dr = np.concatenate(dr)
        dc = np.concatenate(dc)
        r = np.concatenate([r, dr])
        c = np.concatenate([c, dc])
        v = np.concatenate([v, np.full(dr.size, DENSE_VALUE)])
    jitter = np.random.default_rng(cfg.seed).random(dim) * 0.01
    diag = degree + 1.0 + jitter
    d = np.arange(dim)
    return from_triplets(dim, np.concatenate([r, d]), np.concatenate([c, d]), np.concatenate([v, diag]))


def interior_degree(q: SymmetricSparseMatrix, node: int, limit: int | None = None) -> int:
    """Number of off-diagonal neighbours of ``node``; with ``limit``, only those with index < limit."""
    rows = q.pattern.indices.astype(np.int64)
    cols = q.pattern.columns().astype(np.int64)
    off = rows != cols
    nb = np.concatenate([cols[off & (rows == node)], rows[off & (cols == node)]])
    if limit is not None:
        nb = nb[nb < limit]
    return int(nb.size)


def run_bench(cfg: BenchConfig, logdets: dict | None = None) -> list[TimingRecord]:
    """Time ``reps`` factorizations and selected inversions per core count.

    The matrix is ordered and analysed once.  Raises ``RuntimeError`` if the
    log-determinant differs between core counts; pass a dict as ``logdets``
    to receive the value per core count.
    """
    q = bench_matrix(cfg)
    sym = analyze(q, order(q, cfg.reordering))
    nnz_q = q.nnz
    nnz_l = sym.nnz_l
    if 8 * (nnz_q + 2 * nnz_l) + 12 * nnz_l > _mem_cap():
        raise MemoryCapExceeded(f"factor for n={cfg.n} has {nnz_l} entries, beyond the memory cap")
    records = []
    logdets = {} if logdets is None else logdets
    for cores in cfg.cores_list:
        fact, inv = [], []
        for rep in range(cfg.reps):
            t0 = time.perf_counter()
            f = factorize(q, sym, cores)
            t1 = time.perf_counter()
            selected_inverse(f, cores)
            t2 = time.perf_counter()
            fact.append(TimingRecord(cfg.n, cores, "factorize", rep, t1 - t0, nnz_q, nnz_l, 8 * (nnz_q + nnz_l)))
            inv.append(TimingRecord(cfg.n, cores, "selinv", rep, t2 - t1, nnz_q, nnz_l, 8 * (nnz_q + 2 * nnz_l)))
        logdets[cores] = logdet(f)
        records.extend(fact)
        records.extend(inv)
    ref = logdets[cfg.cores_list[0]]
    for cores, ld in logdets.items():
        if abs(ld - ref) > 1e-9 * abs(ref):
            raise RuntimeError(f"logdet differs across core counts: {ref} vs {ld} at cores={cores}")
    records.sort(key=lambda r: (r.n, r.cores, r.op, r.rep))
    return records


def write_csv(path, records) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for rec in records:
            w.writerow(rec.row())
