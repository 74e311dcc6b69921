"""Simplified model of early-round dynamics: averaging plus noise.

Each node holds a column of a d x n matrix; one round multiplies by the
averaging operator on the right (self term included) and then adds iid
Gaussian noise emulating local training. sigma_ap tracks the spread
within a node (across parameters), sigma_an the spread of one parameter
across nodes.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDimension, DimensionMismatch
from .graph import Graph, is_connected
from .spectral import MarkovMatrix, markov_from_graph


@dataclass(frozen=True)
class ParamBlock:
    values: np.ndarray  # (d, n), column i = parameters of node i

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise DimensionMismatch(f"expected a 2-d block, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite entries in parameter block")
        object.__setattr__(self, "values", v)

    @property
    def d(self):
        return self.values.shape[0]

    @property
    def n(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class SigmaTrace:
    sigma_ap: np.ndarray
    sigma_an: np.ndarray

    def __post_init__(self):
        if len(self.sigma_ap) != len(self.sigma_an):
            raise ValueError("trace arrays must have equal length")


def init_block(d, n, sigma_init, seed) -> ParamBlock:
    if d < 1 or n < 1:
        raise ValueError(f"d and n must be >= 1, got d={d}, n={n}")
    if sigma_init <= 0:
        raise ValueError(f"sigma_init must be positive, got {sigma_init}")
    rng = np.random.default_rng(seed)
    return ParamBlock(values=rng.normal(0.0, sigma_init, size=(d, n)))


def step(block: ParamBlock, m: MarkovMatrix, sigma_noise=0.0, seed=None) -> ParamBlock:
    """One round: W <- W A' + N(0, sigma_noise^2)."""
    if block.n != m.n:
        raise DimensionMismatch(f"block has n={block.n}, operator has n={m.n}")
    wt = np.ascontiguousarray(block.values.T)
    new = m.right_apply_t(wt).T
    if sigma_noise > 0.0:
        rng = np.random.default_rng(seed)
        new = new + rng.normal(0.0, sigma_noise, size=new.shape)
    return ParamBlock(values=new)


def sigma_ap(block: ParamBlock) -> float:
    """Mean over nodes of the population std of each node's parameters."""
    if block.d < 2:
        raise DegenerateDimension("sigma_ap needs at least 2 parameters")
    return float(block.values.std(axis=0).mean())


def sigma_an(block: ParamBlock) -> float:
    """Mean over parameters of the population std across nodes."""
    if block.n < 2:
        raise DegenerateDimension("sigma_an needs at least 2 nodes")
    return float(block.values.std(axis=1).mean())


def run_diffusion(g: Graph, d, sigma_init, sigma_noise, rounds, seed) -> SigmaTrace:
    """Trace sigma_ap/sigma_an over `rounds` averaging rounds (round 0 is
    the initial state, so arrays have rounds + 1 entries)."""
    if not is_connected(g):
        raise ValueError("diffusion requires a connected graph")
    op = markov_from_graph(g)
    root = np.random.SeedSequence(seed)
    init_seed, noise_seed = root.spawn(2)
    block = init_block(d, g.n, sigma_init, init_seed)
    noise_rng = np.random.default_rng(noise_seed)

    ap = np.empty(rounds + 1)
    an = np.empty(rounds + 1)
    ap[0], an[0] = sigma_ap(block), sigma_an(block)
    wt = np.ascontiguousarray(block.values.T)
    for t in range(1, rounds + 1):
        wt = op.right_apply_t(wt)
        if sigma_noise > 0.0:
            wt += noise_rng.normal(0.0, sigma_noise, size=wt.shape)
        b = ParamBlock(values=wt.T)
        ap[t], an[t] = sigma_ap(b), sigma_an(b)
    return SigmaTrace(sigma_ap=ap, sigma_an=an)


def stabilisation_round(trace: SigmaTrace, eps=0.05, window=20) -> int:
    """First round whose sigma_an is within (1+eps) of the trailing floor."""
    an = trace.sigma_an
    floor = an[-window:].min() if len(an) >= window else an.min()
    hits = np.nonzero(an <= (1.0 + eps) * floor)[0]
    return int(hits[0]) if hits.size else len(an) - 1
