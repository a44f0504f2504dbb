"""Min-max scaling, stratified train/test splits and stratified k-fold."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data_model import ColumnKind, FeatureMatrix
from .errors import InsufficientSupport


@dataclass(frozen=True)
class MinMaxScaler:
    column_names: tuple
    applies_to: tuple
    mins: np.ndarray
    maxs: np.ndarray

    def to_dict(self) -> dict:
        return {
            "column_names": list(self.column_names),
            "applies_to": list(self.applies_to),
            "mins": self.mins.tolist(),
            "maxs": self.maxs.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MinMaxScaler":
        return cls(tuple(d["column_names"]), tuple(d["applies_to"]),
                   np.asarray(d["mins"], dtype=float), np.asarray(d["maxs"], dtype=float))


def fit_minmax(matrix: FeatureMatrix) -> MinMaxScaler:
    """Record min/max of the continuous columns; binary columns are left out."""
    if matrix.n_rows == 0:
        raise ValueError("cannot fit a scaler on an empty matrix")
    cols = tuple(j for j, k in enumerate(matrix.column_kinds) if k is ColumnKind.CONTINUOUS)
    sub = matrix.rows[:, list(cols)]
    return MinMaxScaler(matrix.column_names, cols, sub.min(axis=0), sub.max(axis=0))


def apply_minmax(scaler: MinMaxScaler, matrix: FeatureMatrix) -> FeatureMatrix:
    if tuple(matrix.column_names) != scaler.column_names:
        raise ValueError("scaler/matrix incompatible")
    return matrix.replace(rows=scale_rows(scaler, matrix.rows), integer_columns=frozenset())


def scale_rows(scaler: MinMaxScaler, rows: np.ndarray) -> np.ndarray:
    rows = np.array(rows, dtype=float, copy=True)
    if rows.shape[1] != len(scaler.column_names):
        raise ValueError("scaler/matrix incompatible")
    cols = list(scaler.applies_to)
    span = scaler.maxs - scaler.mins
    constant = span == 0
    scaled = (rows[:, cols] - scaler.mins) / np.where(constant, 1.0, span)
    # Constant training columns carry no information and map to 0.
    scaled[:, constant] = 0.0
    rows[:, cols] = np.clip(scaled, 0.0, 1.0)
    return rows


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    seed: int = 42
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _require_support(labels: np.ndarray, minimum: int):
    for cls in (0, 1):
        count = int((labels == cls).sum())
        if count < minimum:
            raise InsufficientSupport(
                f"insufficient class support: class {cls} has {count} rows, need {minimum}"
            )


def split_indices(labels: np.ndarray, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    labels = np.asarray(labels)
    _require_support(labels, 2)
    rng = np.random.default_rng(spec.seed)
    if spec.stratified:
        train = []
        for cls in (0, 1):
            idx = rng.permutation(np.flatnonzero(labels == cls))
            n_train = min(max(_round_half_up(spec.train_fraction * len(idx)), 1), len(idx) - 1)
            train.append(idx[:n_train])
        train = np.concatenate(train)
    else:
        perm = rng.permutation(len(labels))
        n_train = min(max(_round_half_up(spec.train_fraction * len(labels)), 1), len(labels) - 1)
        train = perm[:n_train]
    train = np.sort(train)
    test = np.setdiff1d(np.arange(len(labels)), train)
    return train, test


def train_test_split(matrix: FeatureMatrix, spec: SplitSpec) -> tuple[FeatureMatrix, FeatureMatrix]:
    train, test = split_indices(matrix.labels, spec)
    return matrix.take(train), matrix.take(test)


def stratified_kfold(matrix_or_labels, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Return ``k`` (train, validation) index pairs with per-class balanced folds.

    Accepts a :class:`FeatureMatrix` or a bare label vector.
    """
    labels = getattr(matrix_or_labels, "labels", matrix_or_labels)
    labels = np.asarray(labels)
    if k < 2:
        raise ValueError("k must be >= 2")
    _require_support(labels, k)
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(k)]
    for cls in (0, 1):
        chunks = np.array_split(rng.permutation(np.flatnonzero(labels == cls)), k)
        # Class 1 fills folds in reverse so the larger chunks do not stack up.
        order = range(k) if cls == 0 else reversed(range(k))
        for fold, chunk in zip(order, chunks):
            folds[fold].append(chunk)
    everything = np.arange(len(labels))
    out = []
    for parts in folds:
        val = np.sort(np.concatenate(parts))
        out.append((np.setdiff1d(everything, val), val))
    return out
