# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: sparse sweeps, BFS, and edge-swap annealing.

Mirrors `_pure.py` function-for-function; the swap/anneal routines consume
the caller-drawn random arrays in the same order as the fallback so the
two backends produce identical trajectories.
"""

from libc.math cimport exp, fabs

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def csc_matvec(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
               const cnp.float64_t[::1] data, const cnp.float64_t[::1] x):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(n, dtype=np.float64)
    cdef cnp.float64_t[::1] y = out
    cdef Py_ssize_t j, p
    cdef double xj
    for j in range(n):
        xj = x[j]
        for p in range(indptr[j], indptr[j + 1]):
            y[indices[p]] += data[p] * xj
    return out


def csc_matmat_dense(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
                     const cnp.float64_t[::1] data, const cnp.float64_t[:, ::1] xt):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t d = xt.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((n, d), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] yt = out
    cdef Py_ssize_t j, p, k, row
    cdef double w
    for j in range(n):
        for p in range(indptr[j], indptr[j + 1]):
            row = indices[p]
            w = data[p]
            for k in range(d):
                yt[j, k] += w * xt[row, k]
    return out


cdef Py_ssize_t _bfs(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
                     Py_ssize_t start, cnp.int64_t[::1] queue,
                     cnp.uint8_t[::1] seen) nogil:
    cdef Py_ssize_t head = 0, tail = 0, v, p, u
    seen[start] = 1
    queue[tail] = start
    tail += 1
    while head < tail:
        v = queue[head]
        head += 1
        for p in range(indptr[v], indptr[v + 1]):
            u = indices[p]
            if not seen[u]:
                seen[u] = 1
                queue[tail] = u
                tail += 1
    return tail


def bfs_reach_count(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices, Py_ssize_t start):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef cnp.ndarray[cnp.int64_t, ndim=1] queue = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] seen = np.zeros(n, dtype=np.uint8)
    return int(_bfs(indptr, indices, start, queue, seen))


cdef inline bint _has_edge(const cnp.int64_t[::1] adj, const cnp.int64_t[::1] offsets,
                           Py_ssize_t u, Py_ssize_t v) nogil:
    cdef Py_ssize_t p
    for p in range(offsets[u], offsets[u + 1]):
        if adj[p] == v:
            return True
    return False


cdef inline void _adj_replace(cnp.int64_t[::1] adj, const cnp.int64_t[::1] offsets,
                              Py_ssize_t node, Py_ssize_t old, Py_ssize_t new) nogil:
    cdef Py_ssize_t p
    for p in range(offsets[node], offsets[node + 1]):
        if adj[p] == old:
            adj[p] = new
            return


cdef inline void _apply_swap(cnp.int64_t[::1] eu, cnp.int64_t[::1] ev,
                             cnp.int64_t[::1] adj, const cnp.int64_t[::1] offsets,
                             Py_ssize_t i1, Py_ssize_t i2,
                             Py_ssize_t a, Py_ssize_t b,
                             Py_ssize_t c, Py_ssize_t d) nogil:
    _adj_replace(adj, offsets, a, b, d)
    _adj_replace(adj, offsets, b, a, c)
    _adj_replace(adj, offsets, c, d, b)
    _adj_replace(adj, offsets, d, c, a)
    eu[i1] = a
    ev[i1] = d
    eu[i2] = c
    ev[i2] = b


def swap_mix(cnp.int64_t[::1] eu, cnp.int64_t[::1] ev,
             const cnp.int64_t[::1] offsets, cnp.int64_t[::1] adj,
             const cnp.int64_t[::1] e1, const cnp.int64_t[::1] e2,
             const cnp.uint8_t[::1] flips):
    cdef Py_ssize_t accepted = 0
    cdef Py_ssize_t i, i1, i2, a, b, c, d, tmp
    for i in range(e1.shape[0]):
        i1 = e1[i]
        i2 = e2[i]
        if i1 == i2:
            continue
        a = eu[i1]
        b = ev[i1]
        c = eu[i2]
        d = ev[i2]
        if flips[i]:
            tmp = c
            c = d
            d = tmp
        if a == d or c == b:
            continue
        if _has_edge(adj, offsets, a, d) or _has_edge(adj, offsets, c, b):
            continue
        _apply_swap(eu, ev, adj, offsets, i1, i2, a, b, c, d)
        accepted += 1
    return accepted


def anneal_chunk(cnp.int64_t[::1] eu, cnp.int64_t[::1] ev,
                 const cnp.int64_t[::1] deg,
                 const cnp.int64_t[::1] offsets, cnp.int64_t[::1] adj,
                 double sjk, double target, double tol,
                 double mu2, double var_den, double m_edges,
                 const cnp.int64_t[::1] e1, const cnp.int64_t[::1] e2,
                 const cnp.uint8_t[::1] flips,
                 const cnp.float64_t[::1] uaccept, const cnp.float64_t[::1] temps,
                 bint check_connectivity):
    cdef Py_ssize_t n = offsets.shape[0] - 1
    cdef cnp.ndarray[cnp.int64_t, ndim=1] queue = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] seen_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.int64_t[::1] q = queue
    cdef cnp.uint8_t[::1] seen = seen_arr
    cdef double inv_m = 1.0 / m_edges
    cdef double rho = (sjk * inv_m - mu2) / var_den
    cdef double sjk_new, rho_new, e_cur, e_new, t, delta
    cdef Py_ssize_t accepted = 0
    cdef Py_ssize_t i, i1, i2, a, b, c, d, tmp, k
    for i in range(e1.shape[0]):
        if fabs(rho - target) <= tol:
            return sjk, accepted, i, True
        i1 = e1[i]
        i2 = e2[i]
        if i1 == i2:
            continue
        a = eu[i1]
        b = ev[i1]
        c = eu[i2]
        d = ev[i2]
        if flips[i]:
            tmp = c
            c = d
            d = tmp
        if a == d or c == b:
            continue
        if _has_edge(adj, offsets, a, d) or _has_edge(adj, offsets, c, b):
            continue
        delta = (deg[a] - deg[c]) * <double>(deg[d] - deg[b])
        sjk_new = sjk + delta
        rho_new = (sjk_new * inv_m - mu2) / var_den
        e_cur = fabs(rho - target)
        e_new = fabs(rho_new - target)
        if e_new > e_cur:
            t = temps[i]
            if t <= 0.0 or uaccept[i] >= exp(-(e_new - e_cur) / t):
                continue
        _apply_swap(eu, ev, adj, offsets, i1, i2, a, b, c, d)
        if check_connectivity:
            for k in range(n):
                seen[k] = 0
            if _bfs(offsets, adj, 0, q, seen) != n:
                _apply_swap(eu, ev, adj, offsets, i1, i2, a, d, c, b)
                continue
        sjk = sjk_new
        rho = rho_new
        accepted += 1
    return sjk, accepted, e1.shape[0], fabs(rho - target) <= tol
