"""Gaussian and Bernoulli naive Bayes, computed in log space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data_model import ColumnKind, FeatureMatrix
from ._common import as_rows, check_two_classes, normalize_log_joint

VAR_FLOOR_RATIO = 1e-9
MIN_VAR_FLOOR = 1e-12


@dataclass(frozen=True)
class GaussianNbModel:
    priors: np.ndarray  # (2,)
    means: np.ndarray  # (2, d)
    variances: np.ndarray  # (2, d)

    kind = "gaussian_nb"

    @property
    def n_features(self):
        return self.means.shape[1]

    def joint_log_likelihood(self, X) -> np.ndarray:
        X = as_rows(X, self.n_features)
        out = np.empty((X.shape[0], 2))
        for c in (0, 1):
            var = self.variances[c]
            ll = -0.5 * np.sum(np.log(2.0 * np.pi * var)) - 0.5 * np.sum(
                (X - self.means[c]) ** 2 / var, axis=1
            )
            out[:, c] = np.log(self.priors[c]) + ll
        return out

    def predict_proba(self, X) -> np.ndarray:
        return normalize_log_joint(self.joint_log_likelihood(X))

    def predict(self, X) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        return (jll[:, 1] > jll[:, 0]).astype(np.int64)

    def to_params(self) -> dict:
        return {"priors": self.priors, "means": self.means, "variances": self.variances}


def fit_gaussian_nb(matrix: FeatureMatrix) -> GaussianNbModel:
    X, y = matrix.rows, matrix.labels
    check_two_classes(y, minimum=2)
    means = np.stack([X[y == c].mean(axis=0) for c in (0, 1)])
    variances = np.stack([X[y == c].var(axis=0) for c in (0, 1)])
    floor = max(VAR_FLOOR_RATIO * float(X.var(axis=0).max()), MIN_VAR_FLOOR)
    priors = np.array([np.mean(y == 0), np.mean(y == 1)])
    return GaussianNbModel(priors, means, np.maximum(variances, floor))


@dataclass(frozen=True)
class BernoulliNbModel:
    priors: np.ndarray  # (2,)
    theta: np.ndarray  # (2, d), P(x_j = 1 | class)
    thresholds: np.ndarray  # (d,), NaN for binary columns

    kind = "bernoulli_nb"

    @property
    def n_features(self):
        return self.theta.shape[1]

    def binarize(self, X) -> np.ndarray:
        X = as_rows(X, self.n_features)
        cut = ~np.isnan(self.thresholds)
        out = X.copy()
        out[:, cut] = (X[:, cut] > self.thresholds[cut]).astype(float)
        return out

    def joint_log_likelihood(self, X) -> np.ndarray:
        B = self.binarize(X)
        log_t, log_1mt = np.log(self.theta), np.log1p(-self.theta)
        return np.log(self.priors) + B @ log_t.T + (1.0 - B) @ log_1mt.T

    def predict_proba(self, X) -> np.ndarray:
        return normalize_log_joint(self.joint_log_likelihood(X))

    def predict(self, X) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        return (jll[:, 1] > jll[:, 0]).astype(np.int64)

    def to_params(self) -> dict:
        thresholds = [None if np.isnan(t) else float(t) for t in self.thresholds]
        return {"priors": self.priors, "theta": self.theta, "thresholds": thresholds}


def fit_bernoulli_nb(matrix: FeatureMatrix, alpha: float = 1.0) -> BernoulliNbModel:
    """Laplace-smoothed Bernoulli NB.

    Continuous columns are binarized as ``x > median`` with the median taken
    on the training rows; binary columns pass through.
    """
    X, y = matrix.rows, matrix.labels
    check_two_classes(y, minimum=1)
    thresholds = np.array([
        np.nan if kind is ColumnKind.BINARY else float(np.median(X[:, j]))
        for j, kind in enumerate(matrix.column_kinds)
    ])
    model = BernoulliNbModel(np.ones(2) / 2, np.full((2, X.shape[1]), 0.5), thresholds)
    B = model.binarize(X)
    theta = np.stack([
        (B[y == c].sum(axis=0) + alpha) / ((y == c).sum() + 2.0 * alpha) for c in (0, 1)
    ])
    priors = np.array([np.mean(y == 0), np.mean(y == 1)])
    return BernoulliNbModel(priors, theta, thresholds)
