"""Fully connected ReLU network with a softmax head, trained with minibatch ADAM.

All weights and biases live in one flat float64 buffer; the per-layer arrays
are views into it.  This keeps the ADAM update to a handful of vectorised
operations, which matters because feature selection trains hundreds of
these networks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..data_model import FeatureMatrix
from ._common import as_rows, normalize_log_joint


@dataclass(frozen=True)
class MlpConfig:
    hidden_units: int = 32
    hidden_layers: int = 2
    learning_rate: float = 0.001
    batch_size: int = 64
    epochs: int = 100
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def layer_sizes(self, n_features: int) -> list[tuple[int, int]]:
        widths = [n_features] + [self.hidden_units] * self.hidden_layers + [2]
        return list(zip(widths[:-1], widths[1:]))


def n_parameters(sizes) -> int:
    return sum(a * b + b for a, b in sizes)


def unpack(flat: np.ndarray, sizes) -> list[np.ndarray]:
    """Views ``[W1, b1, W2, b2, ...]`` into ``flat``."""
    out, offset = [], 0
    for a, b in sizes:
        out.append(flat[offset:offset + a * b].reshape(a, b))
        offset += a * b
        out.append(flat[offset:offset + b])
        offset += b
    return out


def init_parameters(sizes, rng: np.random.Generator) -> np.ndarray:
    flat = np.empty(n_parameters(sizes))
    offset = 0
    for a, b in sizes:
        bound = 1.0 / np.sqrt(a)
        flat[offset:offset + a * b + b] = rng.uniform(-bound, bound, a * b + b)
        offset += a * b + b
    return flat


def forward_logits(params: list[np.ndarray], X: np.ndarray) -> np.ndarray:
    h = X
    n_layers = len(params) // 2
    for layer in range(n_layers):
        h = h @ params[2 * layer] + params[2 * layer + 1]
        if layer < n_layers - 1:
            h = np.maximum(h, 0.0)
    return h


def mlp_loss_grad(flat: np.ndarray, sizes, X: np.ndarray, y: np.ndarray,
                  out: np.ndarray | None = None):
    """Mean categorical cross-entropy and its gradient w.r.t. ``flat``."""
    params = unpack(flat, sizes)
    grad = np.zeros_like(flat) if out is None else out
    gparams = unpack(grad, sizes)
    n_layers = len(sizes)
    acts, pre = [X], []
    for layer in range(n_layers):
        z = acts[-1] @ params[2 * layer] + params[2 * layer + 1]
        pre.append(z)
        acts.append(np.maximum(z, 0.0) if layer < n_layers - 1 else z)
    logits = acts[-1]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(len(y))
    loss = float(np.mean(log_norm - shifted[rows, y]))

    delta = np.exp(shifted - log_norm[:, None])
    delta[rows, y] -= 1.0
    delta /= len(y)
    for layer in reversed(range(n_layers)):
        np.matmul(acts[layer].T, delta, out=gparams[2 * layer])
        gparams[2 * layer + 1][:] = delta.sum(axis=0)
        if layer:
            delta = (delta @ params[2 * layer].T) * (pre[layer - 1] > 0)
    return loss, grad


@dataclass(frozen=True)
class MlpModel:
    sizes: tuple
    flat: np.ndarray
    config: MlpConfig = field(default_factory=MlpConfig)

    kind = "mlp"

    @property
    def n_features(self):
        return self.sizes[0][0]

    @property
    def parameters(self) -> list[np.ndarray]:
        return unpack(self.flat, self.sizes)

    def predict_proba(self, X) -> np.ndarray:
        return normalize_log_joint(forward_logits(self.parameters, as_rows(X, self.n_features)))

    def predict(self, X) -> np.ndarray:
        logits = forward_logits(self.parameters, as_rows(X, self.n_features))
        return (logits[:, 1] > logits[:, 0]).astype(np.int64)

    def to_params(self) -> dict:
        return {"sizes": [list(s) for s in self.sizes], "flat": self.flat}


def fit_mlp_adam(matrix: FeatureMatrix, config: MlpConfig | None = None,
                 seed: int = 0) -> MlpModel:
    config = config or MlpConfig()
    X, y = matrix.rows, matrix.labels
    if X.shape[1] < 1:
        raise ValueError("need at least one feature")
    rng = np.random.default_rng(seed)
    sizes = tuple(config.layer_sizes(X.shape[1]))
    flat = init_parameters(sizes, rng)
    grad = np.zeros_like(flat)
    m = np.zeros_like(flat)
    v = np.zeros_like(flat)
    b1, b2, lr = config.beta1, config.beta2, config.learning_rate
    step = 0
    for _ in range(config.epochs):
        order = rng.permutation(len(y))
        for start in range(0, len(y), config.batch_size):
            batch = order[start:start + config.batch_size]
            mlp_loss_grad(flat, sizes, X[batch], y[batch], out=grad)
            step += 1
            m *= b1
            m += (1.0 - b1) * grad
            v *= b2
            v += (1.0 - b2) * grad * grad
            lr_t = lr * np.sqrt(1.0 - b2**step) / (1.0 - b1**step)
            flat -= lr_t * m / (np.sqrt(v) + config.eps)
    return MlpModel(sizes, flat, config)
