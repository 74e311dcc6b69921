"""Disjoint train-data assignment across nodes: iid or Zipf class skew."""

from dataclasses import dataclass
from typing import List

import numpy as np

from ..errors import Exhausted


@dataclass(frozen=True)
class Partition:
    """Per-node index lists into a shared dataset (pairwise disjoint).

    substituted[i] counts items handed to node i outside its Zipf quota
    because a class pool ran dry (always 0 for iid).
    """

    node_indices: List[np.ndarray]
    scheme: str
    alpha: float = 0.0
    substituted: np.ndarray = None

    @property
    def n_nodes(self):
        return len(self.node_indices)

    def sizes(self):
        return np.array([len(ix) for ix in self.node_indices], dtype=np.int64)


def _class_pools(labels, rng):
    pools = {}
    for c in np.unique(labels):
        idx = np.nonzero(labels == c)[0]
        pools[int(c)] = list(rng.permutation(idx))
    return pools


def partition(labels, n_nodes, scheme="iid", alpha=1.8, items_per_node=None,
              seed=None) -> Partition:
    """Split `labels`' indices across n_nodes without replacement.

    iid: round-robin dealing per class, so per-node class counts differ by
    at most one. zipf: each node ranks the classes uniformly at random and
    requests proportions rank^(-alpha); totals stay exactly equal, with
    out-of-quota substitutions when a class pool empties (counted in the
    result). Raises Exhausted when the dataset cannot cover the totals.
    """
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    if items_per_node is None:
        items_per_node = len(labels) // n_nodes
    if items_per_node < 1 or n_nodes < 1:
        raise ValueError("need at least one item per node and one node")
    if n_nodes * items_per_node > len(labels):
        raise Exhausted(
            f"need {n_nodes * items_per_node} items, dataset has {len(labels)}")

    classes = np.unique(labels)
    pools = _class_pools(labels, rng)
    if scheme == "iid":
        return _partition_iid(pools, classes, n_nodes, items_per_node)
    if scheme == "zipf":
        if alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {alpha}")
        return _partition_zipf(pools, classes, n_nodes, items_per_node, alpha, rng)
    raise ValueError(f"unknown scheme {scheme!r}")


def _partition_iid(pools, classes, n_nodes, items_per_node):
    out = [[] for _ in range(n_nodes)]
    need = [items_per_node] * n_nodes
    sweep = 0
    while any(need):
        progressed = False
        for k in range(len(classes)):
            c = int(classes[(k + sweep) % len(classes)])
            for i in range(n_nodes):
                if need[i] and pools[c]:
                    out[i].append(pools[c].pop())
                    need[i] -= 1
                    progressed = True
        sweep += 1
        if not progressed:
            raise Exhausted("class pools drained before quotas were met")
    return Partition(
        node_indices=[np.array(sorted(ix), dtype=np.int64) for ix in out],
        scheme="iid", substituted=np.zeros(n_nodes, dtype=np.int64))


def zipf_proportions(n_classes, alpha):
    """Proportion requested from the r-th ranked class, r = 1..n_classes."""
    ranks = np.arange(1, n_classes + 1, dtype=np.float64)
    w = ranks ** (-alpha)
    return w / w.sum()


def _largest_remainder(props, total):
    raw = props * total
    counts = np.floor(raw).astype(np.int64)
    short = total - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:short]] += 1
    return counts


def _partition_zipf(pools, classes, n_nodes, items_per_node, alpha, rng):
    n_classes = len(classes)
    props = zipf_proportions(n_classes, alpha)
    out = [[] for _ in range(n_nodes)]
    substituted = np.zeros(n_nodes, dtype=np.int64)
    deficits = np.zeros(n_nodes, dtype=np.int64)
    rankings = [rng.permutation(n_classes) for _ in range(n_nodes)]
    for i in range(n_nodes):
        quota = _largest_remainder(props, items_per_node)
        for r, ci in enumerate(rankings[i]):
            c = int(classes[ci])
            take = min(int(quota[r]), len(pools[c]))
            for _ in range(take):
                out[i].append(pools[c].pop())
            deficits[i] += int(quota[r]) - take
    # fill deficits from whatever classes still have items, preferring each
    # node's own ranking order
    for i in range(n_nodes):
        for ci in rankings[i]:
            c = int(classes[ci])
            while deficits[i] and pools[c]:
                out[i].append(pools[c].pop())
                deficits[i] -= 1
                substituted[i] += 1
        while deficits[i]:
            refilled = False
            for c in pools:
                if pools[c]:
                    out[i].append(pools[c].pop())
                    deficits[i] -= 1
                    substituted[i] += 1
                    refilled = True
                    break
            if not refilled:
                raise Exhausted("class pools drained before quotas were met")
    return Partition(
        node_indices=[np.array(sorted(ix), dtype=np.int64) for ix in out],
        scheme="zipf", alpha=alpha, substituted=substituted)
