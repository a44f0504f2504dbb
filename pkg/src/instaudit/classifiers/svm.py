"""Soft-margin RBF SVM trained with sequential minimal optimization.

Dual problem, in minimisation form::

    min_a  1/2 a^T Q a - sum(a)   s.t.  0 <= a_i <= C,  sum(y_i a_i) = 0
    Q_ij = y_i y_j K(x_i, x_j),   y in {-1, +1}

Every step picks the pair that violates the KKT conditions the most (second
order selection for the partner), solves the two-variable subproblem in
closed form and clips it to the box.  Training stops when the largest
violation drops to ``tol`` or the iteration cap is hit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data_model import FeatureMatrix
from ._common import as_rows, check_two_classes

TAU = 1e-12


def rbf_kernel(x, y, gamma: float) -> float:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("dimension mismatch")
    return float(np.exp(-gamma * np.sum((x - y) ** 2)))


def rbf_gram(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = np.sum(A**2, axis=1)[:, None] + np.sum(B**2, axis=1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass(frozen=True)
class SvmModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i
    bias: float
    gamma: float = 1.0
    C: float = 100.0
    n_iter: int = 0

    kind = "svm_rbf"

    @property
    def n_features(self):
        return self.support_vectors.shape[1]

    def decision_function(self, X) -> np.ndarray:
        X = as_rows(X, self.n_features)
        if len(self.dual_coef) == 0:
            return np.full(X.shape[0], self.bias)
        return rbf_gram(X, self.support_vectors, self.gamma) @ self.dual_coef + self.bias

    def predict(self, X) -> np.ndarray:
        # Decision value exactly 0 goes to the positive class.
        return (self.decision_function(X) >= 0).astype(np.int64)

    def predict_proba(self, X):
        raise TypeError("probabilities unsupported for SVM models")

    def to_params(self) -> dict:
        return {"support_vectors": self.support_vectors, "dual_coef": self.dual_coef,
                "bias": self.bias}


@dataclass(frozen=True)
class SmoSolution:
    alpha: np.ndarray
    bias: float
    n_iter: int
    converged: bool


def solve_smo(K: np.ndarray, y: np.ndarray, C: float, tol: float = 1e-3,
              max_iter: int = 200_000) -> SmoSolution:
    """Solve the dual for a precomputed kernel matrix and labels in {-1, +1}."""
    n = len(y)
    y = y.astype(float)
    Q = K * np.outer(y, y)
    diag = np.diag(Q).copy()
    alpha = np.zeros(n)
    grad = -np.ones(n)
    converged = False
    n_iter = 0
    while n_iter < max_iter:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        score = -y * grad
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        m = score[i]
        if m - score[low].min() < tol:
            converged = True
            break
        # Partner: largest guaranteed decrease among the violating low set.
        cand = low & (score < m)
        b = m - score[cand]
        a = diag[i] + diag[cand] - 2.0 * y[i] * y[cand] * Q[i, cand]
        a = np.where(a > 0, a, TAU)
        j = int(np.flatnonzero(cand)[np.argmin(-(b * b) / a)])

        old_i, old_j = alpha[i], alpha[j]
        quad = max(diag[i] + diag[j] - 2.0 * y[i] * y[j] * Q[i, j], TAU)
        if y[i] != y[j]:
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0 and alpha[j] < 0:
                alpha[j], alpha[i] = 0.0, diff
            elif diff <= 0 and alpha[i] < 0:
                alpha[i], alpha[j] = 0.0, -diff
            if diff > 0 and alpha[i] > C:
                alpha[i], alpha[j] = C, C - diff
            elif diff <= 0 and alpha[j] > C:
                alpha[j], alpha[i] = C, C + diff
        else:
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C and alpha[i] > C:
                alpha[i], alpha[j] = C, total - C
            elif total <= C and alpha[j] < 0:
                alpha[j], alpha[i] = 0.0, total
            if total > C and alpha[j] > C:
                alpha[j], alpha[i] = C, total - C
            elif total <= C and alpha[i] < 0:
                alpha[i], alpha[j] = 0.0, total
        grad += Q[:, i] * (alpha[i] - old_i) + Q[:, j] * (alpha[j] - old_j)
        n_iter += 1

    return SmoSolution(alpha, _bias(alpha, grad, y, C), n_iter, converged)


def _bias(alpha, grad, y, C) -> float:
    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = yg[free].mean()
    else:
        upper = ((y < 0) & (alpha >= C)) | ((y > 0) & (alpha <= 0))
        lower = ((y > 0) & (alpha >= C)) | ((y < 0) & (alpha <= 0))
        hi = yg[upper].min() if upper.any() else np.inf
        lo = yg[lower].max() if lower.any() else -np.inf
        rho = 0.5 * (hi + lo) if np.isfinite(hi) and np.isfinite(lo) else (
            hi if np.isfinite(hi) else lo
        )
    return float(-rho)


def dual_objective(alpha: np.ndarray, K: np.ndarray, y: np.ndarray) -> float:
    """Dual objective in maximisation form, ``sum(a) - 1/2 a^T Q a``."""
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)


def fit_svm_smo(matrix: FeatureMatrix, C: float = 100.0, gamma: float = 1.0,
                tol: float = 1e-3, max_iter: int = 200_000) -> SvmModel:
    X, labels = matrix.rows, matrix.labels
    check_two_classes(labels, minimum=1)
    if C <= 0 or gamma <= 0:
        raise ValueError("C and gamma must be positive")
    y = np.where(labels == 1, 1.0, -1.0)
    sol = solve_smo(rbf_gram(X, X, gamma), y, C, tol=tol, max_iter=max_iter)
    sv = sol.alpha > 0
    return SvmModel(X[sv].copy(), (sol.alpha * y)[sv], sol.bias, gamma=gamma, C=C,
                    n_iter=sol.n_iter)
