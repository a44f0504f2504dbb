from __future__ import annotations

import numpy as np

from ..errors import DataError


def as_rows(X, n_features: int) -> np.ndarray:
    X = np.asarray(getattr(X, "rows", X), dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != n_features:
        raise ValueError(
            f"dimension mismatch: model expects {n_features} features, got {X.shape[1]}"
        )
    return X


def check_two_classes(y: np.ndarray, minimum: int = 1):
    for c in (0, 1):
        n = int((np.asarray(y) == c).sum())
        if n < minimum:
            raise DataError(
                f"degenerate training set: class {c} has {n} rows, need at least {minimum}"
            )


def normalize_log_joint(jll: np.ndarray) -> np.ndarray:
    top = jll.max(axis=1, keepdims=True)
    p = np.exp(jll - top)
    return p / p.sum(axis=1, keepdims=True)


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out
