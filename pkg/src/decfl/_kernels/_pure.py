"""Pure numpy implementations of the hot kernels.

This is the fallback backend used when the compiled extension is not
available (or when DECFL_PURE=1). Every function here mirrors the
signature and semantics of its counterpart in `_core.pyx`; the annealing
and swap routines consume pre-drawn random arrays in exactly the same
order so that trajectories agree across backends.
"""

import math

import numpy as np

BACKEND = "pure"


def csc_matvec(indptr, indices, data, x):
    """y = A @ x with A given in CSC form (y_i = sum_j A_ij x_j)."""
    y = np.zeros(len(indptr) - 1, dtype=np.float64)
    # per-column scaled scatter; np.add.at accumulates duplicates in order
    contrib = data * np.repeat(x, np.diff(indptr))
    np.add.at(y, indices, contrib)
    return y


def csc_matmat_dense(indptr, indices, data, xt):
    """YT = (X @ A)^T computed on transposed row-major blocks.

    xt has shape (n, d) (column i of X stored as row i). Returns yt of the
    same shape with yt[j] = sum over column-j entries of A of data * xt[row].
    """
    n = len(indptr) - 1
    yt = np.zeros_like(xt)
    for j in range(n):
        lo, hi = indptr[j], indptr[j + 1]
        if lo == hi:
            continue
        yt[j] = data[lo:hi] @ xt[indices[lo:hi]]
    return yt


def bfs_reach_count(indptr, indices, start):
    """Number of nodes reachable from `start` over a CSR adjacency."""
    n = len(indptr) - 1
    seen = np.zeros(n, dtype=bool)
    seen[start] = True
    frontier = np.array([start], dtype=np.int64)
    count = 1
    while frontier.size:
        nbrs = np.concatenate(
            [indices[indptr[v]:indptr[v + 1]] for v in frontier]
        )
        nbrs = nbrs[~seen[nbrs]]
        if nbrs.size == 0:
            break
        nbrs = np.unique(nbrs)
        seen[nbrs] = True
        count += nbrs.size
        frontier = nbrs
    return count


def _adj_find_replace(adj, offsets, node, old, new):
    lo, hi = offsets[node], offsets[node + 1]
    for p in range(lo, hi):
        if adj[p] == old:
            adj[p] = new
            return
    raise AssertionError("adjacency inconsistent")


def _has_edge(adj, offsets, u, v):
    lo, hi = offsets[u], offsets[u + 1]
    for p in range(lo, hi):
        if adj[p] == v:
            return True
    return False


def _apply_swap(eu, ev, adj, offsets, i1, i2, a, b, c, d):
    _adj_find_replace(adj, offsets, a, b, d)
    _adj_find_replace(adj, offsets, b, a, c)
    _adj_find_replace(adj, offsets, c, d, b)
    _adj_find_replace(adj, offsets, d, c, a)
    eu[i1], ev[i1] = a, d
    eu[i2], ev[i2] = c, b


def swap_mix(eu, ev, offsets, adj, e1, e2, flips):
    """Apply valid degree-preserving double-edge swaps unconditionally.

    Proposals that would create a self-loop or duplicate edge are skipped.
    Mutates eu/ev/adj in place; returns the number of applied swaps.
    """
    accepted = 0
    for i in range(len(e1)):
        i1, i2 = int(e1[i]), int(e2[i])
        if i1 == i2:
            continue
        a, b = int(eu[i1]), int(ev[i1])
        c, d = int(eu[i2]), int(ev[i2])
        if flips[i]:
            c, d = d, c
        # proposed new edges: (a, d) and (c, b)
        if a == d or c == b:
            continue
        if _has_edge(adj, offsets, a, d) or _has_edge(adj, offsets, c, b):
            continue
        _apply_swap(eu, ev, adj, offsets, i1, i2, a, b, c, d)
        accepted += 1
    return accepted


def anneal_chunk(eu, ev, deg, offsets, adj, sjk, target, tol,
                 mu2, var_den, m_edges, e1, e2, flips, uaccept, temps,
                 check_connectivity):
    """Metropolis annealing of degree assortativity via double-edge swaps.

    Processes one chunk of pre-drawn proposals sequentially. Energy is
    |rho - target| with rho derived from the running sum of deg[u]*deg[v]
    over edges (`sjk`); the denominator terms are swap-invariant and passed
    in as mu2/var_den. Accepted swaps that disconnect the graph are
    reverted when check_connectivity is true.

    Returns (sjk, accepted, consumed, reached).
    """
    n = len(offsets) - 1
    inv_m = 1.0 / m_edges
    rho = (sjk * inv_m - mu2) / var_den
    accepted = 0
    for i in range(len(e1)):
        if abs(rho - target) <= tol:
            return sjk, accepted, i, True
        i1, i2 = int(e1[i]), int(e2[i])
        if i1 == i2:
            continue
        a, b = int(eu[i1]), int(ev[i1])
        c, d = int(eu[i2]), int(ev[i2])
        if flips[i]:
            c, d = d, c
        if a == d or c == b:
            continue
        if _has_edge(adj, offsets, a, d) or _has_edge(adj, offsets, c, b):
            continue
        delta = (deg[a] - deg[c]) * (deg[d] - deg[b])
        sjk_new = sjk + delta
        rho_new = (sjk_new * inv_m - mu2) / var_den
        e_cur = abs(rho - target)
        e_new = abs(rho_new - target)
        if e_new > e_cur:
            t = temps[i]
            if t <= 0.0 or uaccept[i] >= math.exp(-(e_new - e_cur) / t):
                continue
        _apply_swap(eu, ev, adj, offsets, i1, i2, a, b, c, d)
        if check_connectivity and bfs_reach_count(offsets, adj, 0) != n:
            _apply_swap(eu, ev, adj, offsets, i1, i2, a, d, c, b)
            continue
        sjk = sjk_new
        rho = rho_new
        accepted += 1
    return sjk, accepted, len(e1), abs(rho - target) <= tol
