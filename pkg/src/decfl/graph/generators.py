"""Random and deterministic communication-network generators.

All generators take an integer seed (or numpy Generator) and return a
simple undirected Graph. Conventions that the tests rely on:

* barabasi_albert starts from m isolated nodes; the first added node
  attaches to all of them, later nodes attach preferentially, so the edge
  count is exactly m*(n-m).
* k_regular does stub matching with restarts, then mixes with random
  simple-preserving double-edge swaps (10*m proposals).
* config_powerlaw is the erased configuration model: self-loops and
  duplicate stub pairs are dropped, slightly distorting the low tail.
"""

import numpy as np

from .. import _kernels
from ..errors import InfeasibleParameters
from .core import Graph


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def complete(n):
    iu, ju = np.triu_indices(n, k=1)
    return Graph(n=n, edges=np.stack([iu, ju], axis=1))


def star(n):
    if n < 1:
        raise InfeasibleParameters("star needs n >= 1")
    hub = np.zeros(n - 1, dtype=np.int64)
    leaves = np.arange(1, n, dtype=np.int64)
    return Graph(n=n, edges=np.stack([hub, leaves], axis=1))


def path(n):
    a = np.arange(n - 1, dtype=np.int64)
    return Graph(n=n, edges=np.stack([a, a + 1], axis=1))


def cycle(n):
    if n < 3:
        raise InfeasibleParameters("cycle needs n >= 3")
    a = np.arange(n, dtype=np.int64)
    return Graph(n=n, edges=np.stack([a, (a + 1) % n], axis=1))


def er_gnp(n, p, seed=None):
    """G(n, p) via geometric skipping over the upper triangle."""
    if not 0.0 <= p <= 1.0:
        raise InfeasibleParameters(f"p must be in [0, 1], got {p}")
    rng = _rng(seed)
    if p == 0.0:
        return Graph(n=n, edges=np.empty((0, 2), dtype=np.int64))
    if p == 1.0:
        return complete(n)
    edges = []
    lp = np.log1p(-p)
    v, w = 1, -1
    while v < n:
        w += 1 + int(np.log1p(-rng.random()) / lp)
        while w >= v and v < n:
            w -= v
            v += 1
        if v < n:
            edges.append((w, v))
    return Graph(n=n, edges=np.array(edges, dtype=np.int64).reshape(-1, 2))


def _mix_swaps(g, rng, rounds=10):
    """Randomize a graph in place via simple-preserving double-edge swaps."""
    eu = g.edges[:, 0].copy()
    ev = g.edges[:, 1].copy()
    adj = g.indices.copy()
    m = len(eu)
    proposals = rounds * m
    chunk = 1 << 14
    done = 0
    while done < proposals:
        take = min(chunk, proposals - done)
        e1 = rng.integers(0, m, size=take)
        e2 = rng.integers(0, m, size=take)
        flips = rng.integers(0, 2, size=take).astype(np.uint8)
        _kernels.swap_mix(eu, ev, g.indptr, adj, e1, e2, flips)
        done += take
    return Graph(n=g.n, edges=np.stack([eu, ev], axis=1))


def k_regular(n, k, seed=None):
    """Random simple k-regular graph: stub matching + swap mixing."""
    if k < 0 or k >= n or (n * k) % 2 != 0:
        raise InfeasibleParameters(f"no simple {k}-regular graph on {n} nodes")
    if k == 0:
        return Graph(n=n, edges=np.empty((0, 2), dtype=np.int64))
    rng = _rng(seed)
    edges = _stub_match(np.full(n, k, dtype=np.int64), rng, max_restarts=200)
    if edges is None:
        raise InfeasibleParameters(f"stub matching failed for k={k}, n={n}")
    g = Graph(n=n, edges=edges)
    return _mix_swaps(g, rng)


def _stub_match(degrees, rng, max_restarts=200):
    """Simple matching of a degree sequence by repeated stub pairing.

    Shuffles the outstanding stubs, pairs them greedily skipping
    self-loops/duplicates, and re-queues the skipped stubs; restarts from
    scratch when several consecutive passes make no progress.
    """
    n = len(degrees)
    for _ in range(max_restarts):
        edges = set()
        stubs = np.repeat(np.arange(n, dtype=np.int64), degrees)
        stalled = 0
        while len(stubs) and stalled < 10:
            rng.shuffle(stubs)
            leftover = []
            for i in range(0, len(stubs) - 1, 2):
                s1, s2 = int(stubs[i]), int(stubs[i + 1])
                if s1 > s2:
                    s1, s2 = s2, s1
                if s1 == s2 or (s1, s2) in edges:
                    leftover.append(s1)
                    leftover.append(s2)
                else:
                    edges.add((s1, s2))
            if len(stubs) % 2:
                leftover.append(int(stubs[-1]))
            stalled = stalled + 1 if len(leftover) == len(stubs) else 0
            stubs = np.array(leftover, dtype=np.int64)
        if not len(stubs):
            return np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)
    return None


def barabasi_albert(n, m, seed=None):
    """Preferential attachment; edge count is exactly m*(n-m)."""
    if m < 1 or m >= n:
        raise InfeasibleParameters(f"need 1 <= m < n, got m={m}, n={n}")
    rng = _rng(seed)
    edges = np.empty((m * (n - m), 2), dtype=np.int64)
    # each endpoint of an existing edge appears once; sampling from this
    # list is sampling proportionally to degree
    repeated = np.empty(2 * m * (n - m), dtype=np.int64)
    filled = 0
    e = 0
    targets = np.arange(m, dtype=np.int64)  # first node joins all seeds
    for v in range(m, n):
        for t in targets:
            edges[e] = (t, v)
            e += 1
        repeated[filled:filled + len(targets)] = targets
        filled += len(targets)
        repeated[filled:filled + len(targets)] = v
        filled += len(targets)
        if v + 1 < n:
            targets = _sample_distinct(repeated[:filled], m, rng)
    return Graph(n=n, edges=edges)


def _sample_distinct(pool, m, rng):
    chosen = set()
    while len(chosen) < m:
        chosen.add(int(pool[rng.integers(0, len(pool))]))
    return np.fromiter(chosen, dtype=np.int64, count=m)


def config_powerlaw(n, gamma, k_min, seed=None):
    """Erased configuration model with p(k) ~ k^-gamma, k in [k_min, n-1]."""
    if gamma <= 2.0:
        raise InfeasibleParameters(f"gamma must be > 2, got {gamma}")
    if k_min < 1:
        raise InfeasibleParameters(f"k_min must be >= 1, got {k_min}")
    rng = _rng(seed)
    ks = np.arange(k_min, n, dtype=np.float64)
    weights = ks ** (-gamma)
    cdf = np.cumsum(weights / weights.sum())
    idx = np.minimum(np.searchsorted(cdf, rng.random(n)), len(ks) - 1)
    degrees = k_min + idx.astype(np.int64)
    if degrees.sum() % 2 != 0:
        i = int(rng.integers(0, n))
        degrees[i] += 1 if degrees[i] < n - 1 else -1
    stubs = np.repeat(np.arange(n, dtype=np.int64), degrees)
    rng.shuffle(stubs)
    pairs = stubs.reshape(-1, 2)
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    keep = lo != hi
    keys = lo[keep] * n + hi[keep]
    _, first = np.unique(keys, return_index=True)
    return Graph(n=n, edges=np.stack([lo[keep][first], hi[keep][first]], axis=1))


def torus_lattice(d, l):
    """Lattice on a d-dimensional torus with side l (n = l**d nodes)."""
    if d < 1 or l < 2:
        raise InfeasibleParameters(f"need d >= 1 and l >= 2, got d={d}, l={l}")
    n = l ** d
    coords = np.arange(n, dtype=np.int64)
    edges = set()
    for dim in range(d):
        stride = l ** dim
        digit = (coords // stride) % l
        plus = coords + ((digit + 1) % l - digit) * stride
        for u, v in zip(coords, plus):
            if u != v:
                edges.add((min(int(u), int(v)), max(int(u), int(v))))
    return Graph(n=n, edges=np.array(sorted(edges), dtype=np.int64).reshape(-1, 2))


_FAMILIES = {
    "complete", "er_gnp", "k_regular", "barabasi_albert",
    "config_powerlaw", "torus_lattice", "star", "path", "cycle",
}


def generate(model, n, seed=None, **params):
    """Dispatch by family name; params are family-specific (p, k, m, ...)."""
    if model not in _FAMILIES:
        raise InfeasibleParameters(f"unknown graph family {model!r}")
    if model == "complete":
        return complete(n)
    if model == "star":
        return star(n)
    if model == "path":
        return path(n)
    if model == "cycle":
        return cycle(n)
    if model == "er_gnp":
        return er_gnp(n, params["p"], seed)
    if model == "k_regular":
        return k_regular(n, params["k"], seed)
    if model == "barabasi_albert":
        return barabasi_albert(n, params["m"], seed)
    if model == "config_powerlaw":
        return config_powerlaw(n, params["gamma"], params["k_min"], seed)
    d, l = params["d"], params["l"]
    if n != l ** d:
        raise InfeasibleParameters(f"torus needs n == l**d, got n={n}, l**d={l ** d}")
    return torus_lattice(d, l)
