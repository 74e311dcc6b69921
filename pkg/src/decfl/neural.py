"""Multilayer perceptron with gain-corrected He initialisation.

Weights feeding an activation f are drawn N(0, (gain * sqrt(g2/fan_in))^2)
where g2 depends on f; the gain is the topology correction (1 for plain He).
Forward/backward are plain numpy; the model is float32 by default with
float64 loss accumulation.
"""

import struct
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .errors import ShapeMismatch, UnknownActivation

_GAIN2 = {"relu": 2.0, "tanh": 1.0, "linear": 1.0}


def he_sigma(fan_in, activation, alpha=0.01) -> float:
    """Std of the He weight distribution, sqrt(g^2 / fan_in)."""
    if fan_in < 1:
        raise ValueError(f"fan_in must be >= 1, got {fan_in}")
    if activation == "leaky_relu":
        g2 = 2.0 / (1.0 + alpha * alpha)
    elif activation in _GAIN2:
        g2 = _GAIN2[activation]
    else:
        raise UnknownActivation(f"unknown activation {activation!r}")
    return float(np.sqrt(g2 / fan_in))


@dataclass(frozen=True)
class MlpSpec:
    """Layer sizes (input, hidden..., output) and hidden activations.

    The output layer emits logits (no activation). activation may be a
    single name applied to every hidden layer or one name per hidden layer.
    """

    layer_sizes: Tuple[int, ...]
    activation: object = "relu"

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValueError(f"need >= 2 positive layer sizes, got {sizes}")
        n_hidden = len(sizes) - 2
        act = self.activation
        acts = (act,) * n_hidden if isinstance(act, str) else tuple(act)
        if len(acts) != n_hidden:
            raise ValueError(f"need {n_hidden} hidden activations, got {len(acts)}")
        for a in acts:
            if a not in _GAIN2 and a != "leaky_relu":
                raise UnknownActivation(f"unknown activation {a!r}")
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "activation", acts)

    @property
    def n_layers(self):
        return len(self.layer_sizes) - 1

    def layer_activation(self, l):
        """Activation applied after layer l ('linear' for the output)."""
        return self.activation[l] if l < len(self.activation) else "linear"


class MlpModel:
    """Per-layer weights (fan_in, fan_out) and biases; biases start at 0."""

    def __init__(self, spec: MlpSpec, weights, biases, dtype=np.float32):
        self.spec = spec
        self.weights = weights
        self.biases = biases
        self.dtype = dtype

    @property
    def n_params(self):
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def copy(self):
        return MlpModel(self.spec, [w.copy() for w in self.weights],
                        [b.copy() for b in self.biases], self.dtype)


def init_model(spec: MlpSpec, gain=1.0, seed=None, dtype=np.float32) -> MlpModel:
    """He-initialised model scaled by `gain` (weights only, biases zero).

    Each layer draws from its own seed stream, so draws are independent of
    layer evaluation order, and scaling is an exact float multiply:
    init(gain=g) equals init(gain=1) with every weight multiplied by g.
    """
    if not np.isfinite(gain) or gain <= 0:
        raise ValueError(f"gain must be positive and finite, got {gain}")
    sizes = spec.layer_sizes
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    streams = root.spawn(spec.n_layers)
    weights, biases = [], []
    for l in range(spec.n_layers):
        fan_in, fan_out = sizes[l], sizes[l + 1]
        sigma = he_sigma(fan_in, spec.layer_activation(l))
        rng = np.random.default_rng(streams[l])
        base = (sigma * rng.standard_normal((fan_in, fan_out))).astype(dtype)
        weights.append(base * dtype(gain))
        biases.append(np.zeros(fan_out, dtype=dtype))
    return MlpModel(spec, weights, biases, dtype)


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


def forward(model: MlpModel, x) -> np.ndarray:
    """Logits for a (batch, input) matrix."""
    x = np.asarray(x, dtype=model.dtype)
    if x.ndim != 2 or x.shape[1] != model.spec.layer_sizes[0]:
        raise ShapeMismatch(
            f"input shape {x.shape} does not match input width "
            f"{model.spec.layer_sizes[0]}")
    h = x
    for l in range(model.spec.n_layers):
        z = h @ model.weights[l] + model.biases[l]
        h = _act(model.spec.layer_activation(l), z)
    return h


def _softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grads(model: MlpModel, x, labels):
    """Mean cross-entropy over the batch and backprop gradients."""
    x = np.asarray(x, dtype=model.dtype)
    labels = np.asarray(labels)
    n_classes = model.spec.layer_sizes[-1]
    if labels.ndim != 1 or len(labels) != len(x):
        raise ShapeMismatch("labels must be a vector matching the batch")
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ShapeMismatch(f"labels must lie in [0, {n_classes})")

    batch = len(x)
    zs, acts = [], [x]
    h = x
    for l in range(model.spec.n_layers):
        z = h @ model.weights[l] + model.biases[l]
        h = _act(model.spec.layer_activation(l), z)
        zs.append(z)
        acts.append(h)

    probs = _softmax(acts[-1].astype(np.float64))
    loss = float(-np.log(probs[np.arange(batch), labels] + 1e-300).mean())

    delta = probs.astype(model.dtype)
    delta[np.arange(batch), labels] -= 1
    delta /= model.dtype(batch)

    wgrads = [None] * model.spec.n_layers
    bgrads = [None] * model.spec.n_layers
    for l in range(model.spec.n_layers - 1, -1, -1):
        wgrads[l] = acts[l].T @ delta
        bgrads[l] = delta.sum(axis=0)
        if l > 0:
            delta = delta @ model.weights[l].T
            delta *= _act_grad(model.spec.layer_activation(l - 1), zs[l - 1], acts[l])
    return loss, (wgrads, bgrads)


def batch_loss(model: MlpModel, x, labels) -> float:
    logits = forward(model, x).astype(np.float64)
    probs = _softmax(logits)
    return float(-np.log(probs[np.arange(len(labels)), labels] + 1e-300).mean())


def accuracy(model: MlpModel, x, labels) -> float:
    return float((forward(model, x).argmax(axis=1) == labels).mean())


@dataclass
class OptimiserState:
    kind: str
    lr: float
    momentum: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    step_count: int = 0
    m_w: list = field(default_factory=list)
    m_b: list = field(default_factory=list)
    v_w: list = field(default_factory=list)
    v_b: list = field(default_factory=list)


def make_optimiser(model, kind, lr=1e-3, momentum=0.5, beta1=0.9, beta2=0.999,
                   eps=1e-8, weight_decay=1e-2) -> OptimiserState:
    if kind not in ("sgd_momentum", "adamw"):
        raise ValueError(f"unknown optimiser {kind!r}")
    st = OptimiserState(kind=kind, lr=lr, momentum=momentum, beta1=beta1,
                        beta2=beta2, eps=eps, weight_decay=weight_decay)
    st.m_w = [np.zeros_like(w) for w in model.weights]
    st.m_b = [np.zeros_like(b) for b in model.biases]
    if kind == "adamw":
        st.v_w = [np.zeros_like(w) for w in model.weights]
        st.v_b = [np.zeros_like(b) for b in model.biases]
    return st


def opt_step(model: MlpModel, grads, state: OptimiserState):
    """Apply one update in place. SGD: v <- m v + g, w <- w - lr v.
    AdamW: decoupled weight decay."""
    wgrads, bgrads = grads
    if len(wgrads) != len(model.weights):
        raise ShapeMismatch("gradient/parameter layer count mismatch")
    for g, w in zip(wgrads, model.weights):
        if g.shape != w.shape:
            raise ShapeMismatch(f"gradient shape {g.shape} != weight shape {w.shape}")
    state.step_count += 1
    if state.kind == "sgd_momentum":
        for params, gs, bufs in ((model.weights, wgrads, state.m_w),
                                 (model.biases, bgrads, state.m_b)):
            for p, g, v in zip(params, gs, bufs):
                v *= state.momentum
                v += g
                p -= state.lr * v
        return
    t = state.step_count
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for params, gs, ms, vs in ((model.weights, wgrads, state.m_w, state.v_w),
                               (model.biases, bgrads, state.m_b, state.v_b)):
        for p, g, m1, v2 in zip(params, gs, ms, vs):
            m1 *= state.beta1
            m1 += (1.0 - state.beta1) * g
            v2 *= state.beta2
            v2 += (1.0 - state.beta2) * (g * g)
            mhat = m1 / bc1
            vhat = v2 / bc2
            p -= state.lr * (mhat / (np.sqrt(vhat) + state.eps)
                             + state.weight_decay * p)


def reset_opt(state: OptimiserState):
    """Zero all moment buffers and the step counter."""
    state.step_count = 0
    for bufs in (state.m_w, state.m_b, state.v_w, state.v_b):
        for b in bufs:
            b.fill(0.0)


def flatten_params(model: MlpModel) -> np.ndarray:
    parts = []
    for w, b in zip(model.weights, model.biases):
        parts.append(w.ravel())
        parts.append(b)
    return np.concatenate(parts)


def set_flat_params(model: MlpModel, flat):
    if len(flat) != model.n_params:
        raise ShapeMismatch(
            f"flat vector length {len(flat)} != {model.n_params} params")
    pos = 0
    for arrs in zip(model.weights, model.biases):
        for a in arrs:
            a[...] = flat[pos:pos + a.size].reshape(a.shape)
            pos += a.size


_MAGIC = b"DFLM"


def save_model(model: MlpModel, path):
    """Flat float32 dump: magic, layer count, sizes, then W/b per layer."""
    sizes = model.spec.layer_sizes
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack(">I", len(sizes)))
        fh.write(struct.pack(f">{len(sizes)}I", *sizes))
        for w, b in zip(model.weights, model.biases):
            fh.write(np.ascontiguousarray(w, dtype=">f4").tobytes())
            fh.write(np.ascontiguousarray(b, dtype=">f4").tobytes())


def load_model(path, activation="relu") -> MlpModel:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError("not a model dump")
        (n_sizes,) = struct.unpack(">I", fh.read(4))
        sizes = struct.unpack(f">{n_sizes}I", fh.read(4 * n_sizes))
        spec = MlpSpec(layer_sizes=sizes, activation=activation)
        weights, biases = [], []
        for l in range(spec.n_layers):
            fan_in, fan_out = sizes[l], sizes[l + 1]
            w = np.frombuffer(fh.read(4 * fan_in * fan_out), dtype=">f4")
            weights.append(w.reshape(fan_in, fan_out).astype(np.float32))
            b = np.frombuffer(fh.read(4 * fan_out), dtype=">f4")
            biases.append(b.astype(np.float32))
    return MlpModel(spec, weights, biases, np.float32)
