"""Minimal feed-forward network with analytic gradients and an Adam optimizer.

One abstraction serves the denoiser, policy, value, and discriminator nets.
Weights W_i have shape (out, in); a layer computes act(x @ W.T + b) with
activation 'relu' or 'linear'.  Everything is float64 numpy and deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ShapeError, ValidationError

CHECKPOINT_FORMAT = "tinynet-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass
class Network:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: list[str]

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    def copy(self) -> "Network":
        return Network(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            list(self.activations),
        )

    def validate(self) -> None:
        if not (len(self.weights) == len(self.biases) == len(self.activations)):
            raise ValidationError("layer lists disagree in length")
        for i, (w, b, act) in enumerate(zip(self.weights, self.biases, self.activations)):
            if act not in ("relu", "linear"):
                raise ValidationError(f"layer {i}: unknown activation {act!r}")
            if w.shape[0] != b.shape[0]:
                raise ShapeError(f"layer {i}: weight/bias mismatch {w.shape} vs {b.shape}")
            if i > 0 and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ShapeError(f"layer {i}: input dim {w.shape[1]} != previous output")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValidationError(f"layer {i}: non-finite parameters")


def init_network(
    sizes: list[int], rng: np.random.Generator, hidden_activation: str = "relu"
) -> Network:
    """Fan-in-scaled uniform init; final layer is linear."""
    weights, biases, acts = [], [], []
    for i in range(len(sizes) - 1):
        fan_in = sizes[i]
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(sizes[i + 1], fan_in)))
        biases.append(rng.uniform(-bound, bound, size=sizes[i + 1]))
        acts.append(hidden_activation if i < len(sizes) - 2 else "linear")
    net = Network(weights, biases, acts)
    net.validate()
    return net


@dataclass
class ForwardCache:
    inputs: list[np.ndarray]  # input to each layer, (B, in_i)
    preacts: list[np.ndarray]  # pre-activation of each layer, (B, out_i)
    squeezed: bool


def forward(net: Network, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Evaluate the network; accepts (in,) or (B, in).  Returns output + cache."""
    x = np.asarray(x, dtype=np.float64)
    squeezed = x.ndim == 1
    if squeezed:
        x = x[None]
    if x.ndim != 2 or x.shape[1] != net.weights[0].shape[1]:
        raise ShapeError(f"input shape {x.shape} incompatible with layer 0 {net.weights[0].shape}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("non-finite network input")
    inputs, preacts = [], []
    h = x
    for w, b, act in zip(net.weights, net.biases, net.activations):
        inputs.append(h)
        z = h @ w.T + b
        preacts.append(z)
        h = np.maximum(z, 0.0) if act == "relu" else z
    out = h[0] if squeezed else h
    return out, ForwardCache(inputs, preacts, squeezed)


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def scale(self, factor: float) -> "Gradients":
        return Gradients([w * factor for w in self.weights], [b * factor for b in self.biases])

    def add(self, other: "Gradients") -> "Gradients":
        return Gradients(
            [a + b for a, b in zip(self.weights, other.weights)],
            [a + b for a, b in zip(self.biases, other.biases)],
        )

    @staticmethod
    def zeros_like(net: Network) -> "Gradients":
        return Gradients([np.zeros_like(w) for w in net.weights], [np.zeros_like(b) for b in net.biases])


def backward(
    net: Network, cache: ForwardCache, grad_output: np.ndarray
) -> tuple[Gradients, np.ndarray]:
    """Exact reverse-mode gradients for the loss whose d(loss)/d(output) is supplied.

    Returns parameter gradients and the gradient w.r.t. the network input.
    The cache is never mutated.
    """
    gy = np.asarray(grad_output, dtype=np.float64)
    if cache.squeezed and gy.ndim == 1:
        gy = gy[None]
    if gy.shape != cache.preacts[-1].shape:
        raise ShapeError(
            f"grad_output shape {gy.shape} does not match cached output {cache.preacts[-1].shape}"
        )
    gw: list[np.ndarray] = [None] * len(net.weights)  # type: ignore[list-item]
    gb: list[np.ndarray] = [None] * len(net.biases)  # type: ignore[list-item]
    g = gy
    for i in range(len(net.weights) - 1, -1, -1):
        if net.activations[i] == "relu":
            g = g * (cache.preacts[i] > 0)
        gw[i] = g.T @ cache.inputs[i]
        gb[i] = g.sum(axis=0)
        g = g @ net.weights[i]
    gx = g[0] if cache.squeezed else g
    return Gradients(gw, gb), gx


def input_jacobian_penalty(net: Network, x: np.ndarray) -> tuple[float, Gradients]:
    """mean_b ||d(output)/d(input)||^2 for a scalar-output net, plus its parameter gradient.

    Implemented with a tangent (forward-over-reverse) pass; ReLU masks are
    treated as locally constant, so bias gradients are zero almost everywhere.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None]
    if net.weights[-1].shape[0] != 1:
        raise ShapeError("gradient penalty requires a scalar-output network")
    _, cache = forward(net, x)
    ones = np.ones((x.shape[0], 1))
    _, g_in = backward(net, cache, ones)  # (B, in): per-sample input gradient
    batch = x.shape[0]
    penalty = float(np.mean(np.sum(g_in**2, axis=1)))

    # tangent pass along u = 2 g / B, masks frozen
    masks = [
        (cache.preacts[i] > 0) if net.activations[i] == "relu" else None
        for i in range(len(net.weights))
    ]
    t = 2.0 * g_in / batch
    tangents = [t]
    for i, w in enumerate(net.weights):
        t = t @ w.T
        if masks[i] is not None:
            t = t * masks[i]
        tangents.append(t)
    grads = Gradients.zeros_like(net)
    delta = np.ones((x.shape[0], 1))
    for i in range(len(net.weights) - 1, -1, -1):
        if masks[i] is not None:
            delta = delta * masks[i]
        grads.weights[i] += delta.T @ tangents[i]
        delta = delta @ net.weights[i]
    return penalty, grads


# ---------------------------------------------------------------------------
# Adaptive moment optimizer


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m_w: list[np.ndarray] = field(default_factory=list)
    v_w: list[np.ndarray] = field(default_factory=list)
    m_b: list[np.ndarray] = field(default_factory=list)
    v_b: list[np.ndarray] = field(default_factory=list)

    @staticmethod
    def for_network(net: Network, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return AdamState(
            lr=lr,
            beta1=beta1,
            beta2=beta2,
            eps=eps,
            m_w=[np.zeros_like(w) for w in net.weights],
            v_w=[np.zeros_like(w) for w in net.weights],
            m_b=[np.zeros_like(b) for b in net.biases],
            v_b=[np.zeros_like(b) for b in net.biases],
        )


def opt_step(net: Network, grads: Gradients, state: AdamState) -> tuple[Network, AdamState]:
    """One Adam update with bias correction.  Copy-on-update: inputs untouched."""
    for g in grads.weights + grads.biases:
        if not np.all(np.isfinite(g)):
            raise ValidationError("non-finite gradient; parameters unchanged")
    new = net.copy()
    st = AdamState(
        lr=state.lr,
        beta1=state.beta1,
        beta2=state.beta2,
        eps=state.eps,
        step=state.step + 1,
        m_w=[m.copy() for m in state.m_w],
        v_w=[v.copy() for v in state.v_w],
        m_b=[m.copy() for m in state.m_b],
        v_b=[v.copy() for v in state.v_b],
    )
    bc1 = 1.0 - state.beta1**st.step
    bc2 = 1.0 - state.beta2**st.step
    for i in range(len(new.weights)):
        for params, grad, m, v in (
            (new.weights, grads.weights, st.m_w, st.v_w),
            (new.biases, grads.biases, st.m_b, st.v_b),
        ):
            m[i] *= state.beta1
            m[i] += (1.0 - state.beta1) * grad[i]
            v[i] *= state.beta2
            v[i] += (1.0 - state.beta2) * grad[i] ** 2
            params[i] = params[i] - state.lr * (m[i] / bc1) / (np.sqrt(v[i] / bc2) + state.eps)
    return new, st


def adam_update_array(
    param: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    step: int,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Adam for a standalone parameter array (e.g. a policy log-std vector)."""
    if not np.all(np.isfinite(grad)):
        raise ValidationError("non-finite gradient; parameter unchanged")
    m = beta1 * m + (1.0 - beta1) * grad
    v = beta2 * v + (1.0 - beta2) * grad**2
    mhat = m / (1.0 - beta1**step)
    vhat = v / (1.0 - beta2**step)
    return param - lr * mhat / (np.sqrt(vhat) + eps), m, v


# ---------------------------------------------------------------------------
# Checkpoints


def save_checkpoint(
    path: str | Path,
    net: Network,
    opt: AdamState | None = None,
    extra_arrays: dict[str, np.ndarray] | None = None,
    meta: dict | None = None,
) -> None:
    """Flat binary checkpoint (.npz) with a versioned JSON header."""
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "sizes": net.sizes,
        "activations": net.activations,
        "has_optimizer": opt is not None,
        "meta": meta or {},
    }
    if opt is not None:
        header["optimizer"] = {
            "lr": opt.lr,
            "beta1": opt.beta1,
            "beta2": opt.beta2,
            "eps": opt.eps,
            "step": opt.step,
        }
    arrays: dict[str, np.ndarray] = {"__header__": np.frombuffer(json.dumps(header).encode(), dtype=np.uint8)}
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
        if opt is not None:
            arrays[f"mw{i}"] = opt.m_w[i]
            arrays[f"vw{i}"] = opt.v_w[i]
            arrays[f"mb{i}"] = opt.m_b[i]
            arrays[f"vb{i}"] = opt.v_b[i]
    for name, arr in (extra_arrays or {}).items():
        arrays[f"x_{name}"] = arr
    np.savez(path, **arrays)


def load_checkpoint(path: str | Path) -> tuple[Network, AdamState | None, dict[str, np.ndarray], dict]:
    with np.load(path) as data:
        header = json.loads(bytes(data["__header__"]).decode())
        if header.get("format") != CHECKPOINT_FORMAT:
            raise ValidationError(f"{path}: not a tinynet checkpoint")
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValidationError(f"{path}: unsupported checkpoint version {header.get('version')}")
        n_layers = len(header["sizes"]) - 1
        net = Network(
            [data[f"w{i}"] for i in range(n_layers)],
            [data[f"b{i}"] for i in range(n_layers)],
            list(header["activations"]),
        )
        net.validate()
        opt = None
        if header["has_optimizer"]:
            cfg = header["optimizer"]
            opt = AdamState(
                lr=cfg["lr"],
                beta1=cfg["beta1"],
                beta2=cfg["beta2"],
                eps=cfg["eps"],
                step=cfg["step"],
                m_w=[data[f"mw{i}"] for i in range(n_layers)],
                v_w=[data[f"vw{i}"] for i in range(n_layers)],
                m_b=[data[f"mb{i}"] for i in range(n_layers)],
                v_b=[data[f"vb{i}"] for i in range(n_layers)],
            )
        extra = {k[2:]: data[k] for k in data.files if k.startswith("x_")}
    return net, opt, extra, header.get("meta", {})
