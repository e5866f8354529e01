"""Small fully-connected classifier with analytic gradients and momentum SGD.

The backward pass takes a per-sample 0/1 mask: a masked-out sample contributes
exactly zero loss and zero gradient, so individual samples can be dropped from
a batch without re-batching. The learning rate follows a polynomial decay,
``lr = lr_init * (1 - epoch/total_epochs) ** power``, updated once per epoch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .numerics import PROB_FLOOR, NonFiniteError, as_matrix, matmul, require_finite, softmax


@dataclass(frozen=True)
class NetworkConfig:
    input_dim: int
    hidden_sizes: tuple[int, ...] = (64, 64, 64)
    output_dim: int = 2


@dataclass
class Mlp:
    """Layer weights and biases; ReLU between layers, linear output."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def copy(self) -> "Mlp":
        return Mlp([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def layer_dims(self) -> list[tuple[int, int]]:
        return [w.shape for w in self.weights]


def init_model(config: NetworkConfig, seed) -> Mlp:
    """Seeded init: He-uniform hidden layers, zero output layer.

    The zero output layer makes the initial logits exactly zero, so the first
    predictions sit at maximum uncertainty (all classes 0.5 in the binary
    case) instead of inheriting arbitrary confidence from random weights.
    """
    rng = np.random.default_rng(seed)
    dims = (config.input_dim, *config.hidden_sizes, config.output_dim)
    weights: list[np.ndarray] = []
    biases: list[np.ndarray] = []
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        if i == len(dims) - 2:
            w = np.zeros((fan_in, fan_out))
        else:
            bound = math.sqrt(6.0 / fan_in)
            w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return Mlp(weights, biases)


def _forward_cached(model: Mlp, features) -> tuple[np.ndarray, list[np.ndarray]]:
    """Forward pass returning logits and the input to every layer."""
    x = as_matrix(features, "features")
    expected = model.weights[0].shape[0]
    if x.shape[1] != expected:
        raise ValueError(f"feature dim {x.shape[1]} does not match first layer input {expected}")
    inputs = [x]
    h = x
    last = model.n_layers - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = matmul(h, w) + b
        if i == last:
            h = z
        else:
            h = np.maximum(z, 0.0)
            inputs.append(h)
    return require_finite(h, "logits"), inputs


def forward(model: Mlp, features) -> np.ndarray:
    """Batch logits, shape (B, output_dim)."""
    logits, _ = _forward_cached(model, features)
    return logits


def _check_labels(labels: np.ndarray, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ValueError(f"labels must be 1-D, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"labels must lie in [0, {n_classes}), got range "
                         f"[{labels.min()}, {labels.max()}]")
    return labels.astype(np.intp)


def _backward_from_cache(model: Mlp, logits: np.ndarray, inputs: list[np.ndarray],
                         labels: np.ndarray, mask: np.ndarray):
    n = logits.shape[0]
    probs = softmax(logits, axis=-1)
    picked = probs[np.arange(n), labels]
    per_sample = -np.log(np.maximum(picked, PROB_FLOOR))
    loss = float(np.sum(per_sample * mask))

    delta = probs
    delta[np.arange(n), labels] -= 1.0
    delta *= mask[:, None]

    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * model.n_layers  # type: ignore[list-item]
    for i in range(model.n_layers - 1, -1, -1):
        grads[i] = (inputs[i].T @ delta, delta.sum(axis=0))
        if i:
            delta = (delta @ model.weights[i].T) * (inputs[i] > 0)
    return grads, loss


def backward_masked(model: Mlp, features, labels, mask):
    """Masked batch loss and gradients.

    Returns ``(grads, loss)`` where ``grads[i] = (dW_i, db_i)`` and ``loss``
    is the *sum* of per-sample cross-entropies over samples with mask 1.
    Samples with mask 0 contribute exactly zero to both.
    """
    logits, inputs = _forward_cached(model, features)
    labels = _check_labels(labels, logits.shape[1])
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != (logits.shape[0],):
        raise ValueError(f"mask length {mask.shape} does not match batch size {logits.shape[0]}")
    return _backward_from_cache(model, logits, inputs, labels, mask)


@dataclass
class SgdOptimizer:
    """Momentum SGD state plus the polynomial learning-rate schedule position."""

    initial_lr: float = 1e-3
    momentum: float = 0.9
    power: float = 0.9
    total_epochs: int = 50
    current_epoch: int = 0
    velocities: list[tuple[np.ndarray, np.ndarray]] | None = field(default=None, repr=False)


def poly_lr(opt: SgdOptimizer) -> float:
    """lr_init * (1 - epoch/total_epochs) ** power; zero at the final epoch."""
    if opt.total_epochs <= 0:
        raise ValueError("total_epochs must be positive")
    if opt.current_epoch > opt.total_epochs:
        raise ValueError("current_epoch exceeds total_epochs")
    frac = opt.current_epoch / opt.total_epochs
    return opt.initial_lr * (1.0 - frac) ** opt.power


def sgd_step(model: Mlp, opt: SgdOptimizer, grads) -> Mlp:
    """One in-place momentum update: v <- m*v + g, p <- p - lr*v."""
    lr = poly_lr(opt)
    if opt.velocities is None:
        opt.velocities = [(np.zeros_like(w), np.zeros_like(b))
                          for w, b in zip(model.weights, model.biases)]
    for i, (dw, db) in enumerate(grads):
        if not (np.isfinite(dw).all() and np.isfinite(db).all()):
            raise NonFiniteError(f"non-finite gradient for layer {i}")
        if dw.shape != model.weights[i].shape or db.shape != model.biases[i].shape:
            raise ValueError(f"gradient shape mismatch for layer {i}")
        vw, vb = opt.velocities[i]
        vw *= opt.momentum
        vw += dw
        vb *= opt.momentum
        vb += db
        model.weights[i] -= lr * vw
        model.biases[i] -= lr * vb
    return model


def save_checkpoint(model: Mlp, path) -> None:
    """Plain-text checkpoint: layer shapes followed by row-major parameters.

    Layout: one ``layers <n>`` header, then per layer a ``layer <in> <out>``
    line, ``<in>`` weight rows of ``<out>`` values each, and one bias row.
    Values use 17 significant digits so float64 round-trips exactly.
    """
    lines = [f"layers {model.n_layers}"]
    for w, b in zip(model.weights, model.biases):
        lines.append(f"layer {w.shape[0]} {w.shape[1]}")
        for row in w:
            lines.append(" ".join(f"{v:.17g}" for v in row))
        lines.append(" ".join(f"{v:.17g}" for v in b))
    Path(path).write_text("\n".join(lines) + "\n")


def load_checkpoint(path) -> Mlp:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("layers "):
        raise ValueError(f"{path}: not a checkpoint file")
    n_layers = int(lines[0].split()[1])
    weights, biases = [], []
    pos = 1
    for _ in range(n_layers):
        tag, rows, cols = lines[pos].split()
        if tag != "layer":
            raise ValueError(f"{path}: expected layer header at line {pos + 1}")
        rows, cols = int(rows), int(cols)
        pos += 1
        w = np.array([[float(v) for v in lines[pos + r].split()] for r in range(rows)])
        if w.shape != (rows, cols):
            raise ValueError(f"{path}: malformed weight block at line {pos + 1}")
        pos += rows
        b = np.array([float(v) for v in lines[pos].split()])
        if b.shape != (cols,):
            raise ValueError(f"{path}: malformed bias row at line {pos + 1}")
        pos += 1
        weights.append(w)
        biases.append(b)
    return Mlp(weights, biases)
