"""Synchronous decentralised-averaging training rounds.

Every round: each node trains a fixed number of local minibatches, a
dropout mask is drawn (per-link or per-node), all surviving links carry a
snapshot exchange, each node replaces its parameters with the data-size
weighted average over itself and its active neighbours, and optimiser
state is re-initialised. Inactive nodes under node dropout still train
but neither send nor receive.

All node parameters live in one (n, d) float32 buffer; per-node models
and per-layer stacks are views into it, so local training runs as batched
matmuls over the node axis and aggregation is a single mixing GEMM.
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..errors import ShapeMismatch
from ..graph import Graph
from ..neural import MlpModel, MlpSpec, init_model
from .partition import Partition


@dataclass(frozen=True)
class DropoutConfig:
    mode: str = "none"  # none | link | node
    p: float = 1.0

    def __post_init__(self):
        if self.mode not in ("none", "link", "node"):
            raise ValueError(f"unknown dropout mode {self.mode!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {self.p}")


@dataclass(frozen=True)
class RunConfig:
    spec: MlpSpec
    optimiser: str = "sgd_momentum"
    lr: float = 1e-3
    momentum: float = 0.5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-2
    batches_per_round: int = 8
    batch_size: int = 16
    gain: float = 1.0

    def __post_init__(self):
        if self.optimiser not in ("sgd_momentum", "adamw"):
            raise ValueError(f"unknown optimiser {self.optimiser!r}")


@dataclass(frozen=True)
class RoundMetrics:
    round: int
    mean_test_loss: float
    mean_test_accuracy: float
    sigma_ap: float
    sigma_an: float
    mean_delta_train: float
    mean_delta_agg: float
    mean_cosine: float

    FIELDS = ("round", "mean_test_loss", "mean_test_accuracy", "sigma_ap",
              "sigma_an", "mean_delta_train", "mean_delta_agg", "mean_cosine")

    def as_row(self):
        return (self.round, self.mean_test_loss, self.mean_test_accuracy,
                self.sigma_ap, self.sigma_an, self.mean_delta_train,
                self.mean_delta_agg, self.mean_cosine)


def decavg(own, own_size, neighbour_params, neighbour_sizes):
    """Data-size weighted average of own and neighbour parameters.

    With no active neighbours the node keeps its parameters. Accumulates
    in float64, returns in the input dtype.
    """
    if len(neighbour_params) != len(neighbour_sizes):
        raise ShapeMismatch("one size per neighbour parameter set required")
    own = np.asarray(own)
    if not len(neighbour_params):
        return own.copy()
    for w in neighbour_params:
        if np.shape(w) != own.shape:
            raise ShapeMismatch(f"neighbour shape {np.shape(w)} != own {own.shape}")
    total = float(own_size) + float(np.sum(neighbour_sizes))
    acc = (float(own_size) / total) * own.astype(np.float64)
    for w, s in zip(neighbour_params, neighbour_sizes):
        acc += (float(s) / total) * np.asarray(w).astype(np.float64)
    return acc.astype(own.dtype)


def _layer_slots(spec: MlpSpec):
    """(offset, fan_in, fan_out, bias_offset) per layer in the flat layout."""
    slots = []
    off = 0
    for l in range(spec.n_layers):
        fan_in, fan_out = spec.layer_sizes[l], spec.layer_sizes[l + 1]
        slots.append((off, fan_in, fan_out, off + fan_in * fan_out))
        off += fan_in * fan_out + fan_out
    return slots, off


class FederationState:
    """Per-node models/optimisers/data plus the round counter and streams.

    Seed layout: one init stream and one training stream per node, plus a
    dropout stream, all spawned from the master seed. The dropout stream
    is independent, so p=1 runs are bit-identical to dropout-free runs.
    """

    def __init__(self, graph: Graph, x_train, y_train, part: Partition,
                 x_test, y_test, config: RunConfig,
                 dropout: Optional[DropoutConfig] = None, seed=None):
        if part.n_nodes != graph.n:
            raise ShapeMismatch(
                f"partition covers {part.n_nodes} nodes, graph has {graph.n}")
        if x_train.shape[1] != config.spec.layer_sizes[0]:
            raise ShapeMismatch("input width does not match the model spec")
        if min(len(ix) for ix in part.node_indices) < config.batch_size:
            raise ValueError("every node needs at least one full minibatch of data")
        self.graph = graph
        self.x_train, self.y_train = x_train, y_train
        self.x_test, self.y_test = x_test, y_test
        self.part = part
        self.config = config
        self.dropout = dropout or DropoutConfig()
        self.t = 0

        spec = config.spec
        self.slots, self.dim = _layer_slots(spec)
        self.params = np.empty((graph.n, self.dim), dtype=np.float32)

        root = np.random.SeedSequence(seed)
        init_seeds = root.spawn(graph.n)
        train_seeds = root.spawn(graph.n)
        (drop_seed,) = root.spawn(1)
        for i, s in enumerate(init_seeds):
            model = init_model(spec, gain=config.gain, seed=s)
            pos = 0
            for w, b in zip(model.weights, model.biases):
                self.params[i, pos:pos + w.size] = w.ravel()
                pos += w.size
                self.params[i, pos:pos + b.size] = b
                pos += b.size
        self.train_rngs = [np.random.default_rng(s) for s in train_seeds]
        self.dropout_rng = np.random.default_rng(drop_seed)
        self.sizes = part.sizes()

    # stacked per-layer views (n, fan_in, fan_out) / (n, fan_out)
    def stacked_weights(self, l):
        off, fan_in, fan_out, boff = self.slots[l]
        return self.params[:, off:boff].reshape(self.graph.n, fan_in, fan_out)

    def stacked_biases(self, l):
        off, fan_in, fan_out, boff = self.slots[l]
        return self.params[:, boff:boff + fan_out]

    @property
    def models(self) -> List[MlpModel]:
        """Per-node models whose arrays are views into the shared buffer."""
        out = []
        for i in range(self.graph.n):
            weights, biases = [], []
            for off, fan_in, fan_out, boff in self.slots:
                weights.append(self.params[i, off:boff].reshape(fan_in, fan_out))
                biases.append(self.params[i, boff:boff + fan_out])
            out.append(MlpModel(self.config.spec, weights, biases, np.float32))
        return out

    def flat_matrix(self):
        """All node parameters as a (d, n) float32 matrix (copy)."""
        return self.params.T.copy()


def _draw_batches(state: FederationState):
    """Per-node minibatch index blocks for one round.

    Each node walks a private reshuffled permutation of its own indices,
    rewinding (with a reshuffle) when a batch would run past the end.
    """
    cfg = state.config
    batches = []
    for i in range(state.graph.n):
        idx = state.part.node_indices[i]
        rng = state.train_rngs[i]
        order = rng.permutation(idx)
        pos = 0
        rows = []
        for _ in range(cfg.batches_per_round):
            if pos + cfg.batch_size > len(order):
                order = rng.permutation(idx)
                pos = 0
            rows.append(order[pos:pos + cfg.batch_size])
            pos += cfg.batch_size
        batches.append(rows)
    return batches


def _act(name, z, alpha=0.01):
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    if name == "leaky_relu":
        return np.where(z > 0, z, alpha * z)
    return z


def _act_grad(name, z, a, alpha=0.01):
    if name == "relu":
        return (z > 0).astype(z.dtype)
    if name == "tanh":
        return 1.0 - a * a
    if name == "leaky_relu":
        return np.where(z > 0, z.dtype.type(1.0), z.dtype.type(alpha))
    return np.ones_like(z)


def _softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _stacked_forward(state, x, cache=False):
    """x: (n, batch, input) -> logits (n, batch, classes)."""
    spec = state.config.spec
    zs, acts = [], [x]
    h = x
    for l in range(spec.n_layers):
        z = np.matmul(h, state.stacked_weights(l))
        z += state.stacked_biases(l)[:, None, :]
        h = _act(spec.layer_activation(l), z)
        if cache:
            zs.append(z)
            acts.append(h)
    return (zs, acts) if cache else h


def _train_round(state: FederationState):
    """One round of local training for every node, in lockstep.

    Optimiser moments are zeroed at the start (they were re-initialised
    after the previous aggregation), accumulated across the round's
    minibatches, and updates go straight into the shared buffer views.
    """
    cfg = state.config
    spec = cfg.spec
    n = state.graph.n
    L = spec.n_layers
    batches = _draw_batches(state)
    vel_w = [np.zeros_like(state.stacked_weights(l)) for l in range(L)]
    vel_b = [np.zeros_like(state.stacked_biases(l)) for l in range(L)]
    if cfg.optimiser == "adamw":
        sq_w = [np.zeros_like(state.stacked_weights(l)) for l in range(L)]
        sq_b = [np.zeros_like(state.stacked_biases(l)) for l in range(L)]
    idx0 = np.arange(n)[:, None]
    idx1 = np.arange(cfg.batch_size)[None, :]
    for step in range(cfg.batches_per_round):
        rows = np.stack([batches[i][step] for i in range(n)])
        x = state.x_train[rows]
        y = state.y_train[rows]
        zs, acts = _stacked_forward(state, x, cache=True)
        delta = _softmax(acts[-1])
        delta[idx0, idx1, y] -= 1
        delta /= delta.dtype.type(cfg.batch_size)
        for l in range(L - 1, -1, -1):
            wg = np.matmul(acts[l].transpose(0, 2, 1), delta)
            bg = delta.sum(axis=1)
            if l > 0:
                delta = np.matmul(delta, state.stacked_weights(l).transpose(0, 2, 1))
                delta *= _act_grad(spec.layer_activation(l - 1), zs[l - 1], acts[l])
            _apply_update(cfg, step + 1, state.stacked_weights(l), wg, vel_w[l],
                          sq_w[l] if cfg.optimiser == "adamw" else None)
            _apply_update(cfg, step + 1, state.stacked_biases(l), bg, vel_b[l],
                          sq_b[l] if cfg.optimiser == "adamw" else None)


def _apply_update(cfg, t, p, g, m1, v2):
    if cfg.optimiser == "sgd_momentum":
        m1 *= cfg.momentum
        m1 += g
        # reuse g as scratch: it is consumed here
        np.multiply(m1, cfg.lr, out=g)
        np.subtract(p, g, out=p)
        return
    m1 *= cfg.beta1
    m1 += (1.0 - cfg.beta1) * g
    v2 *= cfg.beta2
    v2 += (1.0 - cfg.beta2) * (g * g)
    mhat = m1 / (1.0 - cfg.beta1 ** t)
    vhat = v2 / (1.0 - cfg.beta2 ** t)
    p -= cfg.lr * (mhat / (np.sqrt(vhat) + cfg.eps) + cfg.weight_decay * p)


def _active_neighbour_sets(state: FederationState):
    """Per-node active neighbour lists and which nodes aggregate at all."""
    g = state.graph
    mode, p = state.dropout.mode, state.dropout.p
    if mode == "link":
        kept = state.dropout_rng.random(g.m) < p
        nbrs = [[] for _ in range(g.n)]
        for (u, v), k in zip(g.edges, kept):
            if k:
                nbrs[u].append(int(v))
                nbrs[v].append(int(u))
        return [np.array(sorted(x), dtype=np.int64) for x in nbrs], \
            np.ones(g.n, dtype=bool)
    if mode == "node":
        active = state.dropout_rng.random(g.n) < p
        nbrs = []
        for i in range(g.n):
            nb = g.neighbors(i)
            nbrs.append(nb[active[nb]] if active[i] else np.array([], dtype=np.int64))
        return nbrs, active
    return [g.neighbors(i) for i in range(g.n)], np.ones(g.n, dtype=bool)


def _aggregate(state: FederationState, params64):
    """DecAvg over the active topology as one mixing GEMM.

    Row i of the mixing matrix holds the data-size weights over node i's
    participant set; nodes with identical participant sets therefore get
    bitwise-identical parameters.
    """
    n = state.graph.n
    nbrs, active = _active_neighbour_sets(state)
    mix = np.zeros((n, n))
    for i in range(n):
        if not active[i] or len(nbrs[i]) == 0:
            mix[i, i] = 1.0
            continue
        members = np.sort(np.append(nbrs[i], i))
        weights = state.sizes[members].astype(np.float64)
        mix[i, members] = weights / weights.sum()
    return mix @ params64


def run_round(state: FederationState) -> RoundMetrics:
    state.t += 1
    before = state.params.copy()
    _train_round(state)
    train32 = state.params.copy()
    agg64 = _aggregate(state, state.params.astype(np.float64))
    state.params[...] = agg64.astype(np.float32)
    # optimiser state is round-local and re-initialised after aggregation

    d_train = train32 - before
    d_agg = state.params - train32
    norm_train = np.sqrt(np.einsum("ij,ij->i", d_train, d_train, dtype=np.float64))
    norm_agg = np.sqrt(np.einsum("ij,ij->i", d_agg, d_agg, dtype=np.float64))
    both = (norm_train > 0) & (norm_agg > 0)
    if both.any():
        dots = np.einsum("ij,ij->i", d_train[both], d_agg[both], dtype=np.float64)
        cosine = float((dots / (norm_train[both] * norm_agg[both])).mean())
    else:
        cosine = 0.0

    mean_loss, mean_acc = _evaluate(state)
    return RoundMetrics(
        round=state.t,
        mean_test_loss=mean_loss,
        mean_test_accuracy=mean_acc,
        sigma_ap=float(state.params.std(axis=1, dtype=np.float64).mean()),
        sigma_an=float(state.params.std(axis=0, dtype=np.float64).mean()),
        mean_delta_train=float(norm_train.mean()),
        mean_delta_agg=float(norm_agg.mean()),
        mean_cosine=cosine,
    )


def _evaluate(state: FederationState):
    """Mean test loss/accuracy over nodes, deduping identical rows."""
    n = state.graph.n
    groups = {}
    for i in range(n):
        groups.setdefault(state.params[i].tobytes(), []).append(i)
    reps = [members[0] for members in groups.values()]
    losses = np.empty(n)
    accs = np.empty(n)
    x = state.x_test
    y = state.y_test
    for k, members in enumerate(groups.values()):
        i = reps[k]
        h = x
        for l in range(state.config.spec.n_layers):
            z = h @ state.stacked_weights(l)[i] + state.stacked_biases(l)[i]
            h = _act(state.config.spec.layer_activation(l), z)
        logits = h.astype(np.float64)
        probs = _softmax(logits)
        picked = probs[np.arange(len(y)), y]
        losses[members] = -np.log(picked + 1e-300).mean()
        accs[members] = (logits.argmax(axis=1) == y).mean()
    return float(losses.mean()), float(accs.mean())


def run_rounds(state: FederationState, rounds) -> List[RoundMetrics]:
    return [run_round(state) for _ in range(rounds)]


def rounds_to_loss(state: FederationState, threshold, max_rounds):
    """Rounds until mean test loss <= threshold, with the metric stream.

    Returns (round or None, metrics list); stops early on success.
    """
    history = []
    for _ in range(max_rounds):
        m = run_round(state)
        history.append(m)
        if m.mean_test_loss <= threshold:
            return m.round, history
    return None, history
