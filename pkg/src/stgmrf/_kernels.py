"""Compiled inner loops for the sparse Cholesky family.

All kernels work in permuted coordinates on a lower-triangular factor stored
column-wise (``Lp``, ``Li``, ``Lx``), diagonal first in every column.  The
numeric kernels take an explicit list of columns so independent
elimination-tree subtrees can run on different threads; every column is
computed with the same operation order whatever list it appears in, which is
what makes results independent of the worker count.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def etree(n, Up, Ui):
    """Elimination tree from the upper-triangle CSC (column k holds rows i <= k)."""
    parent = np.full(n, -1, np.int64)
    ancestor = np.full(n, -1, np.int64)
    for k in range(n):
        for p in range(Up[k], Up[k + 1]):
            i = Ui[p]
            while i != -1 and i < k:
                inext = ancestor[i]
                ancestor[i] = k
                if inext == -1:
                    parent[i] = k
                i = inext
    return parent


@njit(cache=True)
def postorder(parent):
    n = parent.size
    head = np.full(n, -1, np.int64)
    nxt = np.full(n, -1, np.int64)
    for j in range(n - 1, -1, -1):
        if parent[j] != -1:
            nxt[j] = head[parent[j]]
            head[parent[j]] = j
    post = np.empty(n, np.int64)
    stack = np.empty(n, np.int64)
    k = 0
    for j in range(n):
        if parent[j] != -1:
            continue
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
                head[p] = nxt[i]
                top += 1
                stack[top] = i
    return post


@njit(cache=True)
def symbolic_pattern(n, Up, Ui, parent):
    """Exact pattern of L, column-wise (rows ascending) and row-wise (columns ascending)."""
    colcount = np.ones(n, np.int64)
    mark = np.full(n, -1, np.int64)
    for k in range(n):
        mark[k] = k
        for p in range(Up[k], Up[k + 1]):
            i = Ui[p]
            while i < k and mark[i] != k:
                colcount[i] += 1
                mark[i] = k
                i = parent[i]
    Lp = np.zeros(n + 1, np.int64)
    for j in range(n):
        Lp[j + 1] = Lp[j] + colcount[j]
    nnz = Lp[n]
    Li = np.empty(nnz, np.int32)
    nxt = np.empty(n, np.int64)
    for j in range(n):
        Li[Lp[j]] = j
        nxt[j] = Lp[j] + 1
    mark[:] = -1
    for k in range(n):
        mark[k] = k
        for p in range(Up[k], Up[k + 1]):
            i = Ui[p]
            while i < k and mark[i] != k:
                Li[nxt[i]] = k
                nxt[i] += 1
                mark[i] = k
                i = parent[i]
    # row structure of the strict lower triangle
    rowcount = np.zeros(n, np.int64)
    for p in range(nnz):
        rowcount[Li[p]] += 1
    Rp = np.zeros(n + 1, np.int64)
    for k in range(n):
        Rp[k + 1] = Rp[k] + rowcount[k] - 1
    Rj = np.empty(Rp[n], np.int32)
    for k in range(n):
        nxt[k] = Rp[k]
    for j in range(n):
        for p in range(Lp[j] + 1, Lp[j + 1]):
            i = Li[p]
            Rj[nxt[i]] = j
            nxt[i] += 1
    return colcount, Lp, Li, Rp, Rj


@njit(cache=True)
def gather(src, values):
    out = np.empty(src.size)
    for p in range(src.size):
        out[p] = values[src[p]]
    return out


@njit(nogil=True, cache=True)
def cholesky_rows(nodes, Up, Ui, Ux, Lp, Li, Lx, Rp, Rj, fill, x, tol):
    """Up-looking Cholesky for the rows in ``nodes`` (ascending, dependencies done).

    ``fill[j]`` is the next free slot of column j.  Returns the first failing
    row or -1; ``x`` must be zero on entry and is zero again on normal exit.
    """
    for t in range(nodes.size):
        k = nodes[t]
        for p in range(Up[k], Up[k + 1]):
            x[Ui[p]] = Ux[p]
        d = x[k]
        x[k] = 0.0
        for q in range(Rp[k], Rp[k + 1]):
            j = Rj[q]
            lkj = x[j] / Lx[Lp[j]]
            x[j] = 0.0
            for p in range(Lp[j] + 1, fill[j]):
                x[Li[p]] -= Lx[p] * lkj
            d -= lkj * lkj
            Lx[fill[j]] = lkj
            fill[j] += 1
        if not d > tol:
            Lx[Lp[k]] = d
            return k
        Lx[Lp[k]] = np.sqrt(d)
        fill[k] = Lp[k] + 1
    return -1


@njit(nogil=True, cache=True)
def selinv_columns(nodes, Lp, Li, Lx, Zx, acc):
    """Backward Takahashi recursion for the columns in ``nodes`` (descending).

    Computes Z = inv(L L^T) on the pattern of L.  For column j with
    off-diagonal rows R, every row of R above k is also a row of column k
    (k in R), so the needed Z entries are found by a forward merge.  ``acc``
    is scratch of length >= max column count.
    """
    for t in range(nodes.size):
        j = nodes[t]
        p0 = Lp[j]
        p1 = Lp[j + 1]
        m = p1 - p0 - 1
        ljj = Lx[p0]
        for a in range(m):
            acc[a] = 0.0
        for a in range(m):
            q = p0 + 1 + a
            k = Li[q]
            lkj = Lx[q]
            kp = Lp[k]
            kend = Lp[k + 1]
            s_k = Zx[kp] * lkj
            p2 = kp + 1
            for b in range(a + 1, m):
                i = Li[p0 + 1 + b]
                # gallop when the gap is large, linear otherwise
                if Li[p2] != i:
                    step = 1
                    while p2 + step < kend and Li[p2 + step] < i:
                        p2 += step
                        step *= 2
                    while Li[p2] < i:
                        p2 += 1
                z = Zx[p2]
                acc[b] += z * lkj
                s_k += z * Lx[p0 + 1 + b]
                p2 += 1
            acc[a] += s_k
        s = 0.0
        for a in range(m):
            zij = -acc[a] / ljj
            Zx[p0 + 1 + a] = zij
            s += Lx[p0 + 1 + a] * zij
        Zx[p0] = (1.0 / ljj - s) / ljj
    return 0


@njit(cache=True)
def lower_solve(Lp, Li, Lx, B):
    """In place: B <- L^{-1} B, B of shape (n, m) C-ordered."""
    n, m = B.shape
    for j in range(n):
        inv = 1.0 / Lx[Lp[j]]
        for c in range(m):
            B[j, c] *= inv
        for p in range(Lp[j] + 1, Lp[j + 1]):
            i = Li[p]
            l = Lx[p]
            for c in range(m):
                B[i, c] -= l * B[j, c]


@njit(cache=True)
def upper_solve(Lp, Li, Lx, B):
    """In place: B <- L^{-T} B."""
    n, m = B.shape
    for j in range(n - 1, -1, -1):
        for p in range(Lp[j] + 1, Lp[j + 1]):
            i = Li[p]
            l = Lx[p]
            for c in range(m):
                B[j, c] -= l * B[i, c]
        inv = 1.0 / Lx[Lp[j]]
        for c in range(m):
            B[j, c] *= inv


@njit(cache=True)
def lookup(Lp, Li, rows, cols):
    """Storage positions of lower-triangle (row >= col) entries; -1 when absent."""
    out = np.empty(rows.size, np.int64)
    for t in range(rows.size):
        r = rows[t]
        c = cols[t]
        lo = Lp[c]
        hi = Lp[c + 1]
        while lo < hi:
            mid = (lo + hi) // 2
            if Li[mid] < r:
                lo = mid + 1
            else:
                hi = mid
        if lo < Lp[c + 1] and Li[lo] == r:
            out[t] = lo
        else:
            out[t] = -1
    return out
