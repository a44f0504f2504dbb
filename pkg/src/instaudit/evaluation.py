"""Confusion counts, precision/recall/F-scores, macro F1, k-fold grid search
and the report objects the CLI writes out."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .classifiers import ClassifierSpec, fit
from .data_model import FeatureMatrix
from .parallel import map_ordered
from .preprocess import stratified_kfold


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def swapped(self) -> "ConfusionMatrix":
        """Counts with the roles of the two classes exchanged."""
        return ConfusionMatrix(tp=self.tn, fp=self.fn, tn=self.tp, fn=self.fp)


def confusion(labels, predictions) -> ConfusionMatrix:
    y, p = np.asarray(labels), np.asarray(predictions)
    if y.shape != p.shape:
        raise ValueError("labels and predictions differ in length")
    if y.size == 0:
        raise ValueError("need at least one row")
    return ConfusionMatrix(
        tp=int(np.sum((y == 1) & (p == 1))),
        fp=int(np.sum((y == 0) & (p == 1))),
        tn=int(np.sum((y == 0) & (p == 0))),
        fn=int(np.sum((y == 1) & (p == 0))),
    )


@dataclass(frozen=True)
class Scores:
    precision: float
    recall: float
    f1: float
    f2: float
    zero_division: bool = False

    def __iter__(self):
        return iter((self.precision, self.recall, self.f1, self.f2))


def _ratio(num, den):
    return (num / den, False) if den else (0.0, True)


def f_beta(precision: float, recall: float, beta: float) -> float:
    b2 = beta * beta
    den = b2 * precision + recall
    return (1.0 + b2) * precision * recall / den if den else 0.0


def metrics(cm: ConfusionMatrix) -> Scores:
    """Precision, recall, F1 and F2 for the positive class.

    Any ratio whose denominator is zero is reported as 0 and the
    ``zero_division`` flag is set.
    """
    if cm.total <= 0:
        raise ValueError("empty confusion matrix")
    precision, z1 = _ratio(cm.tp, cm.tp + cm.fp)
    recall, z2 = _ratio(cm.tp, cm.tp + cm.fn)
    f1 = f_beta(precision, recall, 1.0)
    f2 = f_beta(precision, recall, 2.0)
    return Scores(precision, recall, f1, f2, zero_division=z1 or z2 or (precision + recall == 0))


def macro_f1_from_confusion(cm: ConfusionMatrix) -> float:
    return 0.5 * (metrics(cm).f1 + metrics(cm.swapped()).f1)


def macro_f1(labels, predictions) -> float:
    y = np.asarray(labels)
    if not (np.any(y == 0) and np.any(y == 1)):
        raise ValueError("macro F1 needs both classes in the labels")
    return macro_f1_from_confusion(confusion(y, predictions))


def f2_percent(labels, predictions) -> float:
    return 100.0 * metrics(confusion(labels, predictions)).f2


@dataclass(frozen=True)
class EvalReport:
    confusion: ConfusionMatrix
    precision: float
    recall: float
    f1: float
    f2: float
    macro_f1: float
    classifier: str
    params: dict
    seed: int
    dataset: str
    zero_division: bool = False

    def to_dict(self) -> dict:
        return {
            "tp": self.confusion.tp,
            "fp": self.confusion.fp,
            "tn": self.confusion.tn,
            "fn": self.confusion.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "f2": self.f2,
            "macro_f1": self.macro_f1,
            "classifier": self.classifier,
            "params": self.params,
            "seed": self.seed,
            "dataset": self.dataset,
            "zero_division": self.zero_division,
        }


def report_from_predictions(labels, predictions, classifier: str = "", params=None,
                            seed: int = 0, dataset: str = "") -> EvalReport:
    cm = confusion(labels, predictions)
    s = metrics(cm)
    macro = macro_f1_from_confusion(cm)
    return EvalReport(cm, s.precision, s.recall, s.f1, s.f2, macro, classifier,
                      dict(params or {}), seed, dataset,
                      zero_division=s.zero_division or metrics(cm.swapped()).zero_division)


def evaluate(model, test: FeatureMatrix, classifier: str | None = None, params=None,
             seed: int = 0, dataset: str = "") -> EvalReport:
    predictions = model.predict(test.rows)
    return report_from_predictions(test.labels, predictions, classifier or model.kind,
                                   params, seed, dataset)


@dataclass(frozen=True)
class GridResult:
    cells: list  # list of hyperparameter dicts in evaluation order
    mean_scores: list
    fold_scores: list  # per cell, per fold macro F1
    fold_predictions: list  # per cell, per fold predicted labels
    folds: list  # (train_idx, val_idx) pairs shared by every cell
    best_index: int

    @property
    def best_params(self) -> dict:
        return self.cells[self.best_index]

    @property
    def best_score(self) -> float:
        return self.mean_scores[self.best_index]


def grid_cells(grid: dict[str, Sequence]) -> list[dict]:
    """Cartesian product in lexicographic order of the listed values."""
    if not grid:
        return [{}]
    names = list(grid)
    if any(len(grid[n]) == 0 for n in names):
        raise ValueError("every hyperparameter needs at least one candidate")
    return [dict(zip(names, combo)) for combo in itertools.product(*(grid[n] for n in names))]


def grid_search(kind: str, grid: dict[str, Sequence], matrix: FeatureMatrix, k: int = 10,
                seed: int = 42, threads: int = 1,
                transform: Callable[[FeatureMatrix, FeatureMatrix], tuple] | None = None
                ) -> GridResult:
    """Mean validation macro-F1 over ``k`` stratified folds for every grid cell.

    ``transform(train, val) -> (train, val)`` runs inside each fold before
    fitting (used for fold-local scaling).  Ties go to the earliest cell.
    """
    cells = grid_cells(grid)
    folds = stratified_kfold(matrix, k, seed)

    def run_cell(cell):
        spec = ClassifierSpec(kind, cell, seed=seed)
        preds, scores = [], []
        for train_idx, val_idx in folds:
            train, val = matrix.take(train_idx), matrix.take(val_idx)
            if transform is not None:
                train, val = transform(train, val)
            p = fit(spec, train).predict(val.rows)
            preds.append(p)
            scores.append(macro_f1(val.labels, p))
        return preds, scores

    results = map_ordered(run_cell, cells, threads)
    fold_predictions = [r[0] for r in results]
    fold_scores = [r[1] for r in results]
    means = [float(np.mean(s)) for s in fold_scores]
    best = int(np.argmax(means))
    return GridResult(cells, means, fold_scores, fold_predictions, folds, best)


def markdown_table(headers: Sequence[str], rows: Sequence[Sequence]) -> str:
    lines = ["| " + " | ".join(headers) + " |", "|" + "---|" * len(headers)]
    for row in rows:
        lines.append("| " + " | ".join(str(c) for c in row) + " |")
    return "\n".join(lines) + "\n"
