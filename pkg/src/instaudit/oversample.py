"""SMOTE-NC oversampling for matrices mixing continuous and binary columns.

Synthetic rows interpolate continuous coordinates between a minority sample
and one of its k nearest minority neighbours, and take the majority vote of
the k neighbours for every categorical column.  Distances penalise each
categorical mismatch by the squared median of the class's continuous
standard deviations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .data_model import ColumnKind, FeatureMatrix

MATCH_MAJORITY = "match-majority"


@dataclass(frozen=True)
class SmoteConfig:
    k: int = 5
    target_per_class: Union[int, str] = MATCH_MAJORITY
    seed: int = 42

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.target_per_class != MATCH_MAJORITY and (
            isinstance(self.target_per_class, str) or self.target_per_class < 1
        ):
            raise ValueError("target_per_class must be a positive count or 'match-majority'")


class MetricUndefined(ValueError):
    pass


def _continuous(kinds) -> np.ndarray:
    return np.array([ColumnKind(k) is ColumnKind.CONTINUOUS for k in kinds])


def median_std(matrix: FeatureMatrix, class_label: int) -> float:
    cont = _continuous(matrix.column_kinds)
    if not cont.any():
        raise MetricUndefined("metric undefined: no continuous columns")
    rows = matrix.rows[matrix.labels == class_label]
    if len(rows) < 2:
        raise ValueError(f"class {class_label} needs at least 2 rows")
    return float(np.median(rows[:, cont].std(axis=0)))


def smotenc_distance(a, b, kinds, med: float) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape or a.shape != (len(kinds),):
        raise ValueError("layout mismatch")
    cont = _continuous(kinds)
    sq = np.sum((a[cont] - b[cont]) ** 2) + med**2 * np.count_nonzero(a[~cont] != b[~cont])
    return float(np.sqrt(sq))


def pairwise_distances(rows: np.ndarray, cont: np.ndarray, med: float) -> np.ndarray:
    xc = rows[:, cont]
    sq = np.sum(xc**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * xc @ xc.T
    if (~cont).any():
        xb = rows[:, ~cont]
        mismatches = (xb[:, None, :] != xb[None, :, :]).sum(axis=2)
        d2 = d2 + med**2 * mismatches
    return np.sqrt(np.maximum(d2, 0.0))


def nearest_neighbors(dist: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest other rows; ties go to the lower index."""
    n = dist.shape[0]
    d = dist.copy()
    d[np.arange(n), np.arange(n)] = np.inf
    return np.argsort(d, axis=1, kind="stable")[:, :k]


@dataclass(frozen=True)
class SyntheticBatch:
    """New rows plus where they came from (indices into the source matrix)."""

    rows: np.ndarray
    base: np.ndarray
    neighbor: np.ndarray
    neighbor_sets: np.ndarray


def _vote(values: np.ndarray, own: float) -> float:
    uniq, counts = np.unique(values, return_counts=True)
    best = uniq[counts == counts.max()]
    if len(best) > 1 and own in best:
        return own
    return float(best[0])


def smotenc_generate(matrix: FeatureMatrix, class_label: int, n_new: int, k: int,
                     rng: np.random.Generator) -> SyntheticBatch:
    members = np.flatnonzero(matrix.labels == class_label)
    if len(members) <= k:
        raise ValueError(
            f"too few minority samples: class {class_label} has {len(members)}, need more than k={k}"
        )
    cont = _continuous(matrix.column_kinds)
    rows = matrix.rows[members]
    med = median_std(matrix, class_label)
    if (~cont).any() and med == 0.0:
        raise MetricUndefined("metric undefined: median continuous std is 0")
    nn = nearest_neighbors(pairwise_distances(rows, cont, med), k)

    cat_cols = np.flatnonzero(~cont)
    voted = rows.copy()
    for i in range(len(rows)):
        for j in cat_cols:
            voted[i, j] = _vote(rows[nn[i], j], rows[i, j])

    base = rng.integers(0, len(rows), n_new)
    pick = rng.integers(0, k, n_new)
    gaps = rng.random(n_new)
    nbr = nn[base, pick]
    new = voted[base].copy()
    new[:, cont] = rows[base][:, cont] + gaps[:, None] * (rows[nbr][:, cont] - rows[base][:, cont])
    int_cols = [matrix.index_of(c) for c in matrix.integer_columns]
    if int_cols:
        new[:, int_cols] = np.rint(new[:, int_cols])
    return SyntheticBatch(new, members[base], members[nbr], members[nn[base]])


def smotenc_balance(matrix: FeatureMatrix, config: SmoteConfig) -> FeatureMatrix:
    """Append synthetic rows until every class reaches the target count.

    Bases and neighbours are drawn with replacement so any exact target is
    reachable.  Original rows come first, unchanged.
    """
    counts = matrix.class_counts()
    target = max(counts) if config.target_per_class == MATCH_MAJORITY else int(config.target_per_class)
    if target < max(counts):
        raise ValueError("target_per_class is below the majority class size")
    rng = np.random.default_rng(config.seed)
    rows, labels = [matrix.rows], [matrix.labels]
    for cls in (0, 1):
        deficit = target - counts[cls]
        if deficit <= 0:
            continue
        batch = smotenc_generate(matrix, cls, deficit, config.k, rng)
        rows.append(batch.rows)
        labels.append(np.full(deficit, cls))
    if len(rows) == 1:
        return matrix
    return matrix.replace(rows=np.vstack(rows), labels=np.concatenate(labels))
