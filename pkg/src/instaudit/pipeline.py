"""End-to-end experiment runs shared by the CLI and the acceptance suite.

Every stochastic stage draws its seed from the master seed and a fixed stage
tag, so a stage can be rerun in isolation with the same randomness.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import classifiers
from .classifiers import DISPLAY_NAMES, KINDS, ClassifierSpec
from .data_model import Dataset, FeatureMatrix, Schema, generate_synthetic_dataset, to_matrix
from .evaluation import EvalReport, evaluate, markdown_table
from .feature_select import (
    GaConfig,
    MlpF2Evaluator,
    cost_table,
    evolve,
    reduce,
    selected_columns,
    total_cost,
)
from .oversample import SmoteConfig, smotenc_balance
from .preprocess import SplitSpec, apply_minmax, fit_minmax, train_test_split

STAGES = {"split": 1, "smote": 2, "ga": 3, "model": 4, "synthetic": 5}

PUBLISHED_SIZES = {Schema.FAKE: (1002, 201), Schema.AUTOMATED: (700, 700)}


def stage_seed(master: int, stage: str) -> int:
    return int(np.random.SeedSequence([master, STAGES[stage]]).generate_state(1)[0])


def synthetic_dataset(schema: Schema | str, seed: int) -> Dataset:
    schema = Schema(schema)
    n_real, n_pos = PUBLISHED_SIZES[schema]
    return generate_synthetic_dataset(schema, n_real, n_pos, stage_seed(seed, "synthetic"))


@dataclass(frozen=True)
class PreparedSplit:
    train: FeatureMatrix
    test: FeatureMatrix
    scaler: object


def prepare_split(matrix: FeatureMatrix, seed: int, oversample: bool = False,
                  paper_mode: bool = False, train_fraction: float = 0.7,
                  smote_k: int = 5) -> PreparedSplit:
    """Split 70/30, optionally balance with SMOTE-NC, then min-max scale.

    By default only the training part is oversampled.  ``paper_mode``
    oversamples the whole matrix before splitting, which lets synthetic rows
    built from test-set neighbours leak into training.
    """
    smote = SmoteConfig(k=smote_k, seed=stage_seed(seed, "smote"))
    split = SplitSpec(train_fraction, stage_seed(seed, "split"))
    if oversample and paper_mode:
        matrix = smotenc_balance(matrix, smote)
    train, test = train_test_split(matrix, split)
    if oversample and not paper_mode:
        train = smotenc_balance(train, smote)
    scaler = fit_minmax(train)
    return PreparedSplit(apply_minmax(scaler, train), apply_minmax(scaler, test), scaler)


def run_classifier(kind: str, prepared: PreparedSplit, seed: int, dataset: str = "",
                   hyperparameters: dict | None = None) -> EvalReport:
    spec = ClassifierSpec(kind, hyperparameters or {}, seed=stage_seed(seed, "model"))
    model = classifiers.fit(spec, prepared.train)
    return evaluate(model, prepared.test, spec.kind, spec.hyperparameters, seed, dataset)


def fake_table(matrix: FeatureMatrix, seed: int, paper_mode: bool = False,
               dataset: str = "", kinds=KINDS) -> dict:
    plain = prepare_split(matrix, seed)
    balanced = prepare_split(matrix, seed, oversample=True, paper_mode=paper_mode)
    rows = []
    for kind in kinds:
        without = run_classifier(kind, plain, seed, dataset)
        with_ = run_classifier(kind, balanced, seed, dataset)
        rows.append({
            "classifier": kind,
            "name": DISPLAY_NAMES[kind],
            "f1_without_oversampling": without.macro_f1,
            "f1_with_oversampling": with_.macro_f1,
            "report_without_oversampling": without.to_dict(),
            "report_with_oversampling": with_.to_dict(),
        })
    return {"table": "fake", "dataset": dataset, "seed": seed, "paper_mode": paper_mode,
            "metric": "macro_f1", "rows": rows}


def automated_table(matrix: FeatureMatrix, seed: int, ga: GaConfig | None = None,
                    dataset: str = "", kinds=KINDS, threads: int | None = 1) -> dict:
    ga = ga or GaConfig()
    ga = GaConfig(ga.population_size, ga.generations, ga.mutation_rate, ga.tournament_size,
                  ga.cost_weight, stage_seed(seed, "ga"))
    prepared = prepare_split(matrix, seed)
    costs = cost_table(prepared.train.column_names)
    result = evolve(prepared.train, costs, ga, MlpF2Evaluator(), threads=threads)
    reduced = PreparedSplit(reduce(prepared.train, result.best), reduce(prepared.test, result.best),
                            prepared.scaler)
    rows = []
    for kind in kinds:
        report = run_classifier(kind, reduced, seed, dataset)
        rows.append({
            "classifier": kind,
            "name": DISPLAY_NAMES[kind],
            "precision": report.precision,
            "recall": report.recall,
            "f1": report.f1,
            "report": report.to_dict(),
        })
    return {
        "table": "automated",
        "dataset": dataset,
        "seed": seed,
        "metric": "positive_class",
        "selected_features": selected_columns(prepared.train, result.best),
        "selected_cost": total_cost(result.best, costs),
        "ga_trace": result.trace.to_list(),
        "rows": rows,
    }


def _pct(x: float) -> str:
    return f"{100.0 * x:.1f}%"


def table_markdown(table: dict) -> str:
    if table["table"] == "fake":
        body = [(r["name"], _pct(r["f1_without_oversampling"]), _pct(r["f1_with_oversampling"]))
                for r in table["rows"]]
        return markdown_table(
            ["Classifier", "F1 score without oversampling", "F1 score with oversampling"], body)
    body = [(r["name"], _pct(r["precision"]), _pct(r["recall"]), _pct(r["f1"]))
            for r in table["rows"]]
    text = markdown_table(["Classifier", "Precision", "Recall", "F1-Score"], body)
    return text + f"\nSelected features: {', '.join(table['selected_features'])} " \
                  f"(total cost {table['selected_cost']})\n"


def load_matrix(path: str | Path, schema: Schema | str | None = None) -> tuple[FeatureMatrix, str]:
    from .io import read_dataset

    dataset = read_dataset(path, schema)
    return to_matrix(dataset), dataset.source
