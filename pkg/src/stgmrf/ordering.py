"""Fill-reducing orderings: approximate minimum degree, reverse Cuthill-McKee, identity.

Rows that are much denser than the rest (the fixed-effect style couplings in
the benchmark family) are pulled out before ordering and placed last under
``amd`` and ``rcm``; ``identity`` never moves anything.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np
from numba import njit

from .sparse import SymmetricSparseMatrix

SCHEMES = ("amd", "identity", "rcm")


@dataclass(frozen=True, eq=False)
class Permutation:
    """``perm[new] = old``; ``inverse[old] = new``."""

    perm: np.ndarray

    def __post_init__(self):
        perm = np.ascontiguousarray(self.perm, dtype=np.int64)
        n = perm.size
        inverse = np.full(n, -1, dtype=np.int64)
        if n and (perm.min() < 0 or perm.max() >= n):
            raise ValueError("permutation entry out of range")
        inverse[perm] = np.arange(n)
        if np.any(inverse < 0):
            raise ValueError("not a bijection")
        perm.setflags(write=False)
        inverse.setflags(write=False)
        object.__setattr__(self, "perm", perm)
        object.__setattr__(self, "inverse", inverse)

    @property
    def n(self) -> int:
        return self.perm.size

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.perm, np.arange(self.n)))

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(n))


def adjacency(q: SymmetricSparseMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric adjacency (CSR, no diagonal, sorted neighbours) of the pattern."""
    n = q.n
    rows = q.pattern.indices.astype(np.int64)
    cols = q.pattern.columns().astype(np.int64)
    off = rows != cols
    r = np.concatenate([rows[off], cols[off]])
    c = np.concatenate([cols[off], rows[off]])
    order = np.lexsort((c, r))
    r, c = r[order], c[order]
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(r, minlength=n), out=ptr[1:])
    return ptr, c


def dense_threshold(n: int) -> int:
    return max(16, int(10 * sqrt(n)))


def _split_dense(ptr: np.ndarray, adj: np.ndarray, n: int):
    degree = np.diff(ptr)
    dense = np.flatnonzero(degree > min(dense_threshold(n), n - 2)) if n > 2 else np.empty(0, np.int64)
    if dense.size == 0:
        return np.arange(n), dense, ptr, adj
    keep = np.ones(n, dtype=bool)
    keep[dense] = False
    sparse_nodes = np.flatnonzero(keep)
    relabel = np.full(n, -1, dtype=np.int64)
    relabel[sparse_nodes] = np.arange(sparse_nodes.size)
    rows = np.repeat(np.arange(n), degree)
    mask = keep[rows] & keep[adj]
    r = relabel[rows[mask]]
    c = relabel[adj[mask]]
    sub_ptr = np.zeros(sparse_nodes.size + 1, dtype=np.int64)
    np.cumsum(np.bincount(r, minlength=sparse_nodes.size), out=sub_ptr[1:])
    return sparse_nodes, dense, sub_ptr, c


def order(q: SymmetricSparseMatrix, scheme: str = "amd") -> Permutation:
    """Fill-reducing permutation of ``q``'s pattern under ``scheme``."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown ordering scheme {scheme!r}; expected one of {SCHEMES}")
    n = q.n
    if scheme == "identity" or n <= 1:
        return Permutation.identity(n)
    ptr, adj = adjacency(q)
    sparse_nodes, dense, sub_ptr, sub_adj = _split_dense(ptr, adj, n)
    if scheme == "amd":
        local = amd(sub_ptr, sub_adj)
    else:
        local = rcm(sub_ptr, sub_adj)
    return Permutation(np.concatenate([sparse_nodes[local], dense]))


def rcm(ptr: np.ndarray, adj: np.ndarray) -> np.ndarray:
    """Reverse Cuthill-McKee; each component starts from a pseudo-peripheral node.

    Neighbours are visited by increasing degree, ties by smallest index.
    """
    return _rcm(np.asarray(ptr, np.int64), np.asarray(adj, np.int64))


@njit(cache=True)
def _bfs_levels(ptr, adj, start, level, stamp, tag, queue):
    head = 0
    tail = 1
    queue[0] = start
    level[start] = 0
    stamp[start] = tag
    last_level_start = 0
    while head < tail:
        v = queue[head]
        head += 1
        if level[v] > level[queue[last_level_start]]:
            last_level_start = head - 1
        for p in range(ptr[v], ptr[v + 1]):
            w = adj[p]
            if stamp[w] != tag:
                stamp[w] = tag
                level[w] = level[v] + 1
                queue[tail] = w
                tail += 1
    return tail, last_level_start


@njit(cache=True)
def _rcm(ptr, adj):
    n = ptr.size - 1
    degree = ptr[1:] - ptr[:-1]
    visited = np.zeros(n, np.bool_)
    out = np.empty(n, np.int64)
    level = np.zeros(n, np.int64)
    stamp = np.zeros(n, np.int64)
    queue = np.empty(n, np.int64)
    pos = 0
    tag = 0
    for seed in range(n):
        if visited[seed]:
            continue
        # pseudo-peripheral node: repeat BFS from the lowest-degree node of the last level
        start = seed
        tag += 1
        tail, lls = _bfs_levels(ptr, adj, start, level, stamp, tag, queue)
        ecc = level[queue[tail - 1]]
        for _ in range(8):
            best = queue[lls]
            for t in range(lls, tail):
                v = queue[t]
                if degree[v] < degree[best] or (degree[v] == degree[best] and v < best):
                    best = v
            tag += 1
            tail2, lls2 = _bfs_levels(ptr, adj, best, level, stamp, tag, queue)
            ecc2 = level[queue[tail2 - 1]]
            if ecc2 <= ecc:
                break
            start, ecc = best, ecc2
            tail, lls = tail2, lls2
        first = pos
        out[pos] = start
        visited[start] = True
        pos += 1
        head = first
        while head < pos:
            v = out[head]
            head += 1
            lo = pos
            for p in range(ptr[v], ptr[v + 1]):
                w = adj[p]
                if not visited[w]:
                    visited[w] = True
                    out[pos] = w
                    pos += 1
            # insertion sort the new block by (degree, index)
            for a in range(lo + 1, pos):
                w = out[a]
                b = a - 1
                while b >= lo and (degree[out[b]] > degree[w] or (degree[out[b]] == degree[w] and out[b] > w)):
                    out[b + 1] = out[b]
                    b -= 1
                out[b + 1] = w
        out[first:pos] = out[first:pos][::-1].copy()
    return out


def amd(ptr: np.ndarray, adj: np.ndarray) -> np.ndarray:
    """Approximate minimum degree ordering of a symmetric adjacency structure.

    Quotient-graph elimination with approximate external degrees, element
    absorption, mass elimination and supervariable detection; the result is a
    postorder of the assembly tree.  No dense-row handling here; see
    :func:`order`.
    """
    ptr = np.asarray(ptr, np.int64)
    adj = np.asarray(adj, np.int64)
    n = ptr.size - 1
    if n == 0:
        return np.empty(0, np.int64)
    return _amd(n, ptr, adj)


@njit(cache=True)
def _wclear(mark, lemax, w, n):
    if mark < 2 or mark + lemax < 0:
        for k in range(n):
            if w[k] != 0:
                w[k] = 1
        mark = 2
    return mark


@njit(cache=True)
def _tdfs(j, k, head, next_, post, stack):
    top = 0
    stack[0] = j
    while top >= 0:
        p = stack[top]
        i = head[p]
        if i == -1:
            top -= 1
            post[k] = p
            k += 1
        else:
            head[p] = next_[i]
            top += 1
            stack[top] = i
    return k


@njit(cache=True)
def _amd(n, ptr, adj):
    cnz = ptr[n]
    nzmax = cnz + cnz // 5 + 2 * n + 1
    Ci = np.empty(nzmax, np.int64)
    Ci[:cnz] = adj
    Cp = np.empty(n + 1, np.int64)
    Cp[:] = ptr
    length = np.zeros(n + 1, np.int64)
    nv = np.ones(n + 1, np.int64)
    nxt = np.full(n + 1, -1, np.int64)
    head = np.full(n + 1, -1, np.int64)
    elen = np.zeros(n + 1, np.int64)
    degree = np.zeros(n + 1, np.int64)
    w = np.ones(n + 1, np.int64)
    hhead = np.full(n + 1, -1, np.int64)
    last = np.full(n + 1, -1, np.int64)
    for k in range(n):
        length[k] = Cp[k + 1] - Cp[k]
        degree[k] = length[k]
    mark = _wclear(0, 0, w, n)
    elen[n] = -2
    Cp[n] = -1
    w[n] = 0
    nel = 0
    mindeg = 0
    lemax = 0
    # descending insertion leaves the smallest index at the head of each list
    for i in range(n - 1, -1, -1):
        d = degree[i]
        if d == 0:
            elen[i] = -2
            nel += 1
            Cp[i] = -1
            w[i] = 0
        else:
            if head[d] != -1:
                last[head[d]] = i
            nxt[i] = head[d]
            head[d] = i
    while nel < n:
        k = -1
        while mindeg < n:
            k = head[mindeg]
            if k != -1:
                break
            mindeg += 1
        if nxt[k] != -1:
            last[nxt[k]] = -1
        head[mindeg] = nxt[k]
        elenk = elen[k]
        nvk = nv[k]
        nel += nvk
        # garbage collection
        if elenk > 0 and cnz + mindeg >= nzmax:
            for j in range(n):
                p = Cp[j]
                if p >= 0:
                    Cp[j] = Ci[p]
                    Ci[p] = -j - 2
            q = 0
            p = 0
            while p < cnz:
                j = -Ci[p] - 2
                p += 1
                if j >= 0:
                    Ci[q] = Cp[j]
                    Cp[j] = q
                    q += 1
                    for _ in range(length[j] - 1):
                        Ci[q] = Ci[p]
                        q += 1
                        p += 1
            cnz = q
        # construct new element
        dk = 0
        nv[k] = -nvk
        p = Cp[k]
        pk1 = p if elenk == 0 else cnz
        pk2 = pk1
        for k1 in range(1, elenk + 2):
            if k1 > elenk:
                e = k
                pj = p
                ln = length[k] - elenk
            else:
                e = Ci[p]
                p += 1
                pj = Cp[e]
                ln = length[e]
            for _ in range(ln):
                i = Ci[pj]
                pj += 1
                nvi = nv[i]
                if nvi <= 0:
                    continue
                dk += nvi
                nv[i] = -nvi
                Ci[pk2] = i
                pk2 += 1
                if nxt[i] != -1:
                    last[nxt[i]] = last[i]
                if last[i] != -1:
                    nxt[last[i]] = nxt[i]
                else:
                    head[degree[i]] = nxt[i]
            if e != k:
                Cp[e] = -k - 2
                w[e] = 0
        if elenk != 0:
            cnz = pk2
        degree[k] = dk
        Cp[k] = pk1
        length[k] = pk2 - pk1
        elen[k] = -2
        # set differences |Le \ Lk|
        mark = _wclear(mark, lemax, w, n)
        for pk in range(pk1, pk2):
            i = Ci[pk]
            eln = elen[i]
            if eln <= 0:
                continue
            nvi = -nv[i]
            wnvi = mark - nvi
            for p in range(Cp[i], Cp[i] + eln):
                e = Ci[p]
                if w[e] >= mark:
                    w[e] -= nvi
                elif w[e] != 0:
                    w[e] = degree[e] + wnvi
        # degree update
        for pk in range(pk1, pk2):
            i = Ci[pk]
            p1 = Cp[i]
            p2 = p1 + elen[i] - 1
            pn = p1
            h = 0
            d = 0
            for p in range(p1, p2 + 1):
                e = Ci[p]
                if w[e] != 0:
                    dext = w[e] - mark
                    if dext > 0:
                        d += dext
                        Ci[pn] = e
                        pn += 1
                        h += e
                    else:
                        Cp[e] = -k - 2
                        w[e] = 0
            elen[i] = pn - p1 + 1
            p3 = pn
            p4 = p1 + length[i]
            for p in range(p2 + 1, p4):
                j = Ci[p]
                nvj = nv[j]
                if nvj <= 0:
                    continue
                d += nvj
                Ci[pn] = j
                pn += 1
                h += j
            if d == 0:
                Cp[i] = -k - 2
                nvi = -nv[i]
                dk -= nvi
                nvk += nvi
                nel += nvi
                nv[i] = 0
                elen[i] = -1
            else:
                degree[i] = min(degree[i], d)
                Ci[pn] = Ci[p3]
                Ci[p3] = Ci[p1]
                Ci[p1] = k
                length[i] = pn - p1 + 1
                h = h % n
                nxt[i] = hhead[h]
                hhead[h] = i
                last[i] = h
        degree[k] = dk
        lemax = max(lemax, dk)
        mark = _wclear(mark + lemax, lemax, w, n)
        # supervariable detection
        for pk in range(pk1, pk2):
            i = Ci[pk]
            if nv[i] >= 0:
                continue
            h = last[i]
            i = hhead[h]
            hhead[h] = -1
            while i != -1 and nxt[i] != -1:
                ln = length[i]
                eln = elen[i]
                for p in range(Cp[i] + 1, Cp[i] + ln):
                    w[Ci[p]] = mark
                jlast = i
                j = nxt[i]
                while j != -1:
                    ok = length[j] == ln and elen[j] == eln
                    p = Cp[j] + 1
                    while ok and p <= Cp[j] + ln - 1:
                        if w[Ci[p]] != mark:
                            ok = False
                        p += 1
                    if ok:
                        Cp[j] = -i - 2
                        nv[i] += nv[j]
                        nv[j] = 0
                        elen[j] = -1
                        j = nxt[j]
                        nxt[jlast] = j
                    else:
                        jlast = j
                        j = nxt[j]
                i = nxt[i]
                mark += 1
        # finalize new element
        p = pk1
        for pk in range(pk1, pk2):
            i = Ci[pk]
            nvi = -nv[i]
            if nvi <= 0:
                continue
            nv[i] = nvi
            d = degree[i] + dk - nvi
            d = min(d, n - nel - nvi)
            if head[d] != -1:
                last[head[d]] = i
            nxt[i] = head[d]
            last[i] = -1
            head[d] = i
            mindeg = min(mindeg, d)
            degree[i] = d
            Ci[p] = i
            p += 1
        nv[k] = nvk
        length[k] = p - pk1
        if length[k] == 0:
            Cp[k] = -1
            w[k] = 0
        if elenk != 0:
            cnz = p
    # postorder the assembly tree
    for i in range(n):
        Cp[i] = -Cp[i] - 2
    for j in range(n + 1):
        head[j] = -1
    for j in range(n, -1, -1):
        if nv[j] > 0:
            continue
        nxt[j] = head[Cp[j]]
        head[Cp[j]] = j
    for e in range(n, -1, -1):
        if nv[e] <= 0:
            continue
        if Cp[e] != -1:
            nxt[e] = head[Cp[e]]
            head[Cp[e]] = e
    post = np.empty(n + 1, np.int64)
    stack = np.empty(n + 1, np.int64)
    k = 0
    for i in range(n + 1):
        if Cp[i] == -1:
            k = _tdfs(i, k, head, nxt, post, stack)
    out = np.empty(n, np.int64)
    m = 0
    for t in range(k):
        if post[t] < n:
            out[m] = post[t]
            m += 1
    return out
