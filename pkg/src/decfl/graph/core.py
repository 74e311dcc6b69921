"""Immutable undirected simple graph plus basic structural queries."""

from dataclasses import dataclass, field

import numpy as np

from .. import _kernels


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on node ids 0..n-1.

    edges is an (m, 2) int64 array with u < v per row, sorted
    lexicographically; degree is the per-node incident-edge count. A CSR
    adjacency (indptr/indices, neighbour lists sorted) is built once at
    construction. All arrays are frozen.
    """

    n: int
    edges: np.ndarray
    degree: np.ndarray = field(init=False)
    indptr: np.ndarray = field(init=False)
    indices: np.ndarray = field(init=False)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if edges.min() < 0 or edges.max() >= self.n:
                raise ValueError("node id out of range")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ValueError("self-loops not allowed")
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        edges = np.stack([lo, hi], axis=1)
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        edges = edges[order]
        if len(edges) > 1 and np.any(np.all(edges[1:] == edges[:-1], axis=1)):
            raise ValueError("duplicate edges not allowed")

        degree = np.bincount(edges.ravel(), minlength=self.n).astype(np.int64)
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(degree, out=indptr[1:])
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        order = np.lexsort((dst, src))
        indices = dst[order]
        for a in (edges, degree, indptr, indices):
            a.flags.writeable = False
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)

    @property
    def m(self):
        return len(self.edges)

    def neighbors(self, v):
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def has_edge(self, u, v):
        nb = self.neighbors(u)
        return v in nb

    def edge_set(self):
        return {(int(u), int(v)) for u, v in self.edges}


@dataclass(frozen=True)
class DegreeStats:
    mean_degree: float
    excess_mean: float
    histogram: dict


def degree_stats(g: Graph) -> DegreeStats:
    """Mean degree, mean excess degree <k^2>/<k> - 1, and the histogram."""
    deg = g.degree.astype(np.float64)
    mean = float(deg.mean()) if g.n else 0.0
    excess = float((deg ** 2).mean() / mean - 1.0) if mean > 0 else 0.0
    values, counts = np.unique(g.degree, return_counts=True)
    hist = {int(k): int(c) for k, c in zip(values, counts)}
    return DegreeStats(mean_degree=mean, excess_mean=excess, histogram=hist)


def is_connected(g: Graph) -> bool:
    if g.n == 0:
        return True
    return _kernels.bfs_reach_count(g.indptr, g.indices, 0) == g.n


def diameter(g: Graph) -> int:
    """Exact diameter by BFS from every node. Graph must be connected."""
    best = 0
    n = g.n
    dist = np.empty(n, dtype=np.int64)
    for s in range(n):
        dist.fill(-1)
        dist[s] = 0
        frontier = [s]
        d = 0
        while frontier:
            d += 1
            nxt = []
            for v in frontier:
                for u in g.neighbors(v):
                    if dist[u] < 0:
                        dist[u] = d
                        nxt.append(u)
            frontier = nxt
        if np.any(dist < 0):
            raise ValueError("graph is not connected")
        best = max(best, int(dist.max()))
    return best


