#!/usr/bin/env python3
"""Compiled vs pure-numpy kernel timings.

Runs each hot kernel on representative workloads with both backends and
prints per-call times and the speedup. Usage:

    python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from decfl import graph, spectral
from decfl._kernels import _pure

try:
    from decfl._kernels import _core
except ImportError:
    _core = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def connected_er(n, mean_degree, seed=0):
    for s in range(seed, seed + 100):
        g = graph.er_gnp(n, mean_degree / (n - 1), seed=s)
        if graph.is_connected(g):
            return g
    raise RuntimeError("no connected instance")


def bench_matvec(kern, g, m, repeats):
    x = np.random.default_rng(0).random(g.n)
    return timeit(lambda: kern.csc_matvec(m.indptr, m.indices, m.data, x), repeats)


def bench_matmat(kern, g, m, d, repeats):
    wt = np.ascontiguousarray(np.random.default_rng(1).random((g.n, d)))
    return timeit(lambda: kern.csc_matmat_dense(m.indptr, m.indices, m.data, wt),
                  repeats)


def bench_bfs(kern, g, repeats):
    return timeit(lambda: kern.bfs_reach_count(g.indptr, g.indices, 0), repeats)


def bench_anneal(kern, g, proposals, repeats):
    degf = g.degree.astype(np.float64)
    two_m = 2.0 * g.m
    mu2 = ((degf ** 2).sum() / two_m) ** 2
    var_den = (degf ** 3).sum() / two_m - mu2
    rng = np.random.default_rng(2)
    e1 = rng.integers(0, g.m, proposals)
    e2 = rng.integers(0, g.m, proposals)
    flips = rng.integers(0, 2, proposals).astype(np.uint8)
    uacc = rng.random(proposals)
    temps = np.full(proposals, 1e-3)

    def run():
        eu, ev = g.edges[:, 0].copy(), g.edges[:, 1].copy()
        adj = g.indices.copy()
        sjk = float((degf[eu] * degf[ev]).sum())
        kern.anneal_chunk(eu, ev, g.degree, g.indptr, adj, sjk, 0.3, 1e-9,
                          mu2, var_den, float(g.m), e1, e2, flips, uacc,
                          temps, True)

    return timeit(run, repeats)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="smaller workloads")
    args = ap.parse_args()

    n = 512 if args.quick else 2048
    d = 512 if args.quick else 4096
    proposals = 2000 if args.quick else 20_000
    repeats = 3

    g = connected_er(n, 8)
    m = spectral.markov_from_graph(g)

    cases = [
        (f"csc_matvec (n={n}, nnz={n + 2 * g.m})",
         lambda k: bench_matvec(k, g, m, repeats)),
        (f"csc_matmat_dense (n={n}, d={d})",
         lambda k: bench_matmat(k, g, m, d, repeats)),
        (f"bfs_reach_count (n={n}, m={g.m})",
         lambda k: bench_bfs(k, g, repeats)),
        (f"anneal_chunk ({proposals} proposals, per-accept BFS)",
         lambda k: bench_anneal(k, g, proposals, 1)),
    ]

    print(f"{'kernel':<48}{'pure':>12}{'compiled':>12}{'speedup':>9}")
    for name, fn in cases:
        t_pure = fn(_pure)
        if _core is None:
            print(f"{name:<48}{t_pure * 1e3:>10.2f}ms{'n/a':>12}{'':>9}")
            continue
        t_core = fn(_core)
        print(f"{name:<48}{t_pure * 1e3:>10.2f}ms{t_core * 1e3:>10.2f}ms"
              f"{t_pure / t_core:>8.1f}x")
    if _core is None:
        print("\ncompiled backend unavailable; showing pure backend only")


if __name__ == "__main__":
    main()
