"""Minimal fully-connected network with backprop, Adam, L2 and gradient clipping.

Everything operates on plain numpy arrays. Inputs may be single vectors
or (batch, features) matrices; gradients always come back shaped like
the parameters.
"""

import math
from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("relu", "tanh", "identity")


@dataclass
class Mlp:
    """Layered weights (out x in), biases (out,), per-layer activation tag."""

    weights: list
    biases: list
    activations: list

    def __post_init__(self):
        if not (len(self.weights) == len(self.biases) == len(self.activations)):
            raise ValueError("layer lists must have equal length")
        for act in self.activations:
            if act not in ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")
        for i in range(1, len(self.weights)):
            if self.weights[i].shape[1] != self.weights[i - 1].shape[0]:
                raise ValueError("layer dimensions do not chain")

    @property
    def n_inputs(self):
        return self.weights[0].shape[1]

    @property
    def n_outputs(self):
        return self.weights[-1].shape[0]

    def copy(self):
        return Mlp([w.copy() for w in self.weights],
                   [b.copy() for b in self.biases],
                   list(self.activations))


@dataclass
class Gradients:
    """Per-parameter gradients shaped like an Mlp."""

    d_weights: list
    d_biases: list

    def global_norm(self):
        total = 0.0
        for g in self.d_weights:
            total += float(np.sum(g * g))
        for g in self.d_biases:
            total += float(np.sum(g * g))
        return math.sqrt(total)


@dataclass
class AdamState:
    """First/second moment accumulators plus the step counter."""

    m_weights: list
    v_weights: list
    m_biases: list
    v_biases: list
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_net(cls, net):
        return cls([np.zeros_like(w) for w in net.weights],
                   [np.zeros_like(w) for w in net.weights],
                   [np.zeros_like(b) for b in net.biases],
                   [np.zeros_like(b) for b in net.biases])


def init_mlp(sizes, output_activation, rng, final_bound=None):
    """Uniform +/- 1/sqrt(fan_in) init; relu hidden layers.

    `final_bound` overrides the last layer's range; starting that layer
    near zero keeps early policies and value estimates small, which
    matters when the environment punishes large actions severely.
    """
    weights, biases, acts = [], [], []
    for i in range(len(sizes) - 1):
        fan_in = sizes[i]
        bound = 1.0 / math.sqrt(fan_in)
        if final_bound is not None and i == len(sizes) - 2:
            bound = final_bound
        weights.append(rng.uniform(-bound, bound, size=(sizes[i + 1], fan_in)))
        biases.append(rng.uniform(-bound, bound, size=sizes[i + 1]))
        acts.append("relu" if i < len(sizes) - 2 else output_activation)
    return Mlp(weights, biases, acts)


def _activate(z, act):
    if act == "relu":
        return np.maximum(z, 0.0)
    if act == "tanh":
        return np.tanh(z)
    return z


def _activate_grad(z, out, act):
    if act == "relu":
        return (z > 0.0).astype(z.dtype)
    if act == "tanh":
        return 1.0 - out * out
    return np.ones_like(z)


def forward(net, x):
    """Returns (output, cache); cache feeds backward()."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    h = x[None, :] if single else x
    if h.shape[1] != net.n_inputs:
        raise ValueError(f"input width {h.shape[1]} != {net.n_inputs}")
    inputs, pre, post = [], [], []
    for w, b, act in zip(net.weights, net.biases, net.activations):
        inputs.append(h)
        z = h @ w.T + b
        h = _activate(z, act)
        pre.append(z)
        post.append(h)
    cache = (inputs, pre, post, single)
    return (h[0] if single else h), cache


def backward(net, cache, output_gradient):
    """Reverse-mode gradients; returns (Gradients, input_gradient)."""
    if cache is None:
        raise ValueError("backward requires the cache from forward")
    inputs, pre, post, single = cache
    g = np.asarray(output_gradient, dtype=float)
    if single:
        g = g[None, :]
    d_weights = [None] * len(net.weights)
    d_biases = [None] * len(net.biases)
    for i in range(len(net.weights) - 1, -1, -1):
        g = g * _activate_grad(pre[i], post[i], net.activations[i])
        d_weights[i] = g.T @ inputs[i]
        d_biases[i] = g.sum(axis=0)
        g = g @ net.weights[i]
    return Gradients(d_weights, d_biases), (g[0] if single else g)


def clip_gradients(grads, bound):
    """Scale to global L2 norm == bound when the norm exceeds it."""
    if not (bound > 0.0):
        raise ValueError("clip bound must be positive")
    norm = grads.global_norm()
    if norm <= bound:
        return grads
    scale = bound / norm
    return Gradients([g * scale for g in grads.d_weights],
                     [g * scale for g in grads.d_biases])


def adam_step(net, adam, grads, learning_rate, l2=0.0, clip=None):
    """L2-augment (weights only), optionally clip, then Adam; mutates net/adam."""
    if l2 != 0.0:
        grads = Gradients(
            [g + 2.0 * l2 * w for g, w in zip(grads.d_weights, net.weights)],
            list(grads.d_biases),
        )
    if clip is not None:
        grads = clip_gradients(grads, clip)
    adam.step += 1
    bc1 = 1.0 - adam.beta1 ** adam.step
    bc2 = 1.0 - adam.beta2 ** adam.step
    for params, gs, ms, vs in (
        (net.weights, grads.d_weights, adam.m_weights, adam.v_weights),
        (net.biases, grads.d_biases, adam.m_biases, adam.v_biases),
    ):
        for p, g, m, v in zip(params, gs, ms, vs):
            m *= adam.beta1
            m += (1.0 - adam.beta1) * g
            v *= adam.beta2
            v += (1.0 - adam.beta2) * g * g
            p -= learning_rate * (m / bc1) / (np.sqrt(v / bc2) + adam.eps)


def soft_update(target, source, tau):
    """target := tau*source + (1-tau)*target, elementwise in place."""
    if not (0.0 < tau <= 1.0):
        raise ValueError("tau must be in (0, 1]")
    for t, s in zip(target.weights + target.biases,
                    source.weights + source.biases):
        if t.shape != s.shape:
            raise ValueError("shape mismatch in soft_update")
        t *= 1.0 - tau
        t += tau * s


def scale_actor_output(raw, scales):
    """Elementwise scaling from the tanh range to physical gain ranges."""
    return np.asarray(raw, dtype=float) * np.asarray(scales, dtype=float)


MLP_MAGIC = "mlpv1"


def write_mlp(f, net):
    """Versioned text serialization; 17 significant digits round-trips floats."""
    f.write(f"{MLP_MAGIC} {len(net.weights)}\n")
    for w, b, act in zip(net.weights, net.biases, net.activations):
        f.write(f"{w.shape[0]} {w.shape[1]} {act}\n")
        f.write(" ".join(format(v, ".17g") for v in w.ravel()) + "\n")
        f.write(" ".join(format(v, ".17g") for v in b) + "\n")


def read_mlp(f):
    header = f.readline().split()
    if not header or header[0] != MLP_MAGIC:
        raise ValueError(f"bad network header: {header}")
    n_layers = int(header[1])
    weights, biases, acts = [], [], []
    for _ in range(n_layers):
        out, inp, act = f.readline().split()
        out, inp = int(out), int(inp)
        w = np.array([float(v) for v in f.readline().split()]).reshape(out, inp)
        b = np.array([float(v) for v in f.readline().split()])
        if len(b) != out:
            raise ValueError("bias length disagrees with layer size")
        weights.append(w)
        biases.append(b)
        acts.append(act)
    return Mlp(weights, biases, acts)
