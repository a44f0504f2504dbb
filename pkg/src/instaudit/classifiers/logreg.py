"""L2-regularised logistic regression fitted by truncated Newton (Newton-CG).

The objective is the summed log-loss plus ``||w||^2 / (2C)``; the bias is
not penalised.  Each Newton direction solves ``H p = -g`` approximately with
conjugate gradient using Hessian-vector products, followed by a backtracking
line search.  Iteration stops once ``max|g| <= tol``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data_model import FeatureMatrix
from ..errors import DataError
from ._common import as_rows, check_two_classes, sigmoid


@dataclass(frozen=True)
class LogRegModel:
    weights: np.ndarray
    bias: float
    C: float = 1000.0
    tol: float = 0.1
    n_iter: int = 0

    kind = "logreg"

    @property
    def n_features(self):
        return self.weights.shape[0]

    def decision_function(self, X) -> np.ndarray:
        return as_rows(X, self.n_features) @ self.weights + self.bias

    def predict_proba(self, X) -> np.ndarray:
        p1 = sigmoid(self.decision_function(X))
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(np.int64)

    def to_params(self) -> dict:
        return {"weights": self.weights, "bias": self.bias}


def _augment(X):
    return np.hstack([X, np.ones((X.shape[0], 1))])


def logreg_loss_grad(theta: np.ndarray, X: np.ndarray, y: np.ndarray, C: float):
    """Objective and gradient at ``theta = [w, b]`` for 0/1 labels ``y``."""
    Xa = _augment(X)
    z = Xa @ theta
    # log(1 + exp(-s z)) with s = 2y - 1, evaluated stably.
    s = 2.0 * y - 1.0
    loss = np.sum(np.logaddexp(0.0, -s * z)) + 0.5 * theta[:-1] @ theta[:-1] / C
    grad = Xa.T @ (sigmoid(z) - y)
    grad[:-1] += theta[:-1] / C
    return float(loss), grad


def _hess_vec(Xa, curvature, v, C):
    hv = Xa.T @ (curvature * (Xa @ v))
    hv[:-1] += v[:-1] / C
    return hv


def _conjugate_gradient(hvp, g, max_iter):
    # Truncated CG with the usual min(0.5, sqrt|g|) forcing term.
    gnorm = np.linalg.norm(g)
    stop = min(0.5, np.sqrt(gnorm)) * gnorm
    p = np.zeros_like(g)
    r = -g.copy()
    d = r.copy()
    rr = r @ r
    for _ in range(max_iter):
        if np.sqrt(rr) <= stop:
            break
        hd = hvp(d)
        curv = d @ hd
        if curv <= 0:
            break
        step = rr / curv
        p += step * d
        r -= step * hd
        rr_new = r @ r
        d = r + (rr_new / rr) * d
        rr = rr_new
    return p if p.any() else -g


def fit_logreg_ncg(matrix: FeatureMatrix, C: float = 1000.0, tol: float = 0.1,
                   max_iter: int = 100) -> LogRegModel:
    X, y = matrix.rows, matrix.labels.astype(float)
    check_two_classes(matrix.labels, minimum=1)
    if not np.isfinite(X).all():
        raise DataError("non-finite features")
    if C <= 0:
        raise ValueError("C must be positive")
    Xa = _augment(X)
    theta = np.zeros(Xa.shape[1])
    loss, grad = logreg_loss_grad(theta, X, y, C)
    n_iter = 0
    while n_iter < max_iter and np.max(np.abs(grad)) > tol:
        p = sigmoid(Xa @ theta)
        curvature = p * (1.0 - p)
        direction = _conjugate_gradient(
            lambda v: _hess_vec(Xa, curvature, v, C), grad, max_iter=2 * Xa.shape[1] + 10
        )
        slope = grad @ direction
        if slope >= 0:
            direction, slope = -grad, -(grad @ grad)
        step = 1.0
        while True:
            candidate = theta + step * direction
            new_loss, new_grad = logreg_loss_grad(candidate, X, y, C)
            if new_loss <= loss + 1e-4 * step * slope or step < 1e-10:
                break
            step *= 0.5
        theta, loss, grad = candidate, new_loss, new_grad
        n_iter += 1
    return LogRegModel(theta[:-1].copy(), float(theta[-1]), C=C, tol=tol, n_iter=n_iter)
