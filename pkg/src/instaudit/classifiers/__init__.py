"""The five classifiers, a uniform fit/predict front end and JSON serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np

from ..data_model import FeatureMatrix
from .logreg import LogRegModel, fit_logreg_ncg, logreg_loss_grad
from .mlp import MlpConfig, MlpModel, fit_mlp_adam, mlp_loss_grad
from .naive_bayes import BernoulliNbModel, GaussianNbModel, fit_bernoulli_nb, fit_gaussian_nb
from .svm import SvmModel, fit_svm_smo, rbf_kernel

TrainedModel = Union[GaussianNbModel, BernoulliNbModel, LogRegModel, SvmModel, MlpModel]

KINDS = ("svm_rbf", "bernoulli_nb", "gaussian_nb", "logreg", "mlp")

# Command-line spelling -> kind tag.
CLI_NAMES = {
    "gaussian-nb": "gaussian_nb",
    "bernoulli-nb": "bernoulli_nb",
    "logreg": "logreg",
    "svm": "svm_rbf",
    "mlp": "mlp",
}

DISPLAY_NAMES = {
    "svm_rbf": "Support Vector Machine",
    "bernoulli_nb": "Naive Bayes (Bernoulli Dist.)",
    "gaussian_nb": "Naive Bayes (Gaussian Dist.)",
    "logreg": "Logistic Regression",
    "mlp": "Neural Network",
}

DEFAULT_HYPERPARAMETERS: dict[str, dict[str, Any]] = {
    "gaussian_nb": {},
    "bernoulli_nb": {"alpha": 1.0},
    "logreg": {"C": 1000.0, "tol": 0.1},
    "svm_rbf": {"C": 100.0, "gamma": 1.0, "tol": 1e-3},
    "mlp": {"hidden_units": 32, "hidden_layers": 2, "learning_rate": 0.001,
            "batch_size": 64, "epochs": 100},
}


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 42

    def __post_init__(self):
        kind = CLI_NAMES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise ValueError(f"unknown classifier kind {self.kind!r}")
        params = {**DEFAULT_HYPERPARAMETERS[kind], **dict(self.hyperparameters)}
        unknown = set(params) - set(DEFAULT_HYPERPARAMETERS[kind]) - {"max_iter"}
        if unknown:
            raise ValueError(f"invalid hyperparameters for {kind}: {sorted(unknown)}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "hyperparameters", params)


def fit(spec: ClassifierSpec, matrix: FeatureMatrix) -> TrainedModel:
    hp = spec.hyperparameters
    if spec.kind == "gaussian_nb":
        return fit_gaussian_nb(matrix)
    if spec.kind == "bernoulli_nb":
        return fit_bernoulli_nb(matrix, **hp)
    if spec.kind == "logreg":
        return fit_logreg_ncg(matrix, **hp)
    if spec.kind == "svm_rbf":
        return fit_svm_smo(matrix, **hp)
    return fit_mlp_adam(matrix, MlpConfig(**hp), seed=spec.seed)


def predict(model: TrainedModel, matrix) -> np.ndarray:
    return model.predict(matrix)


def predict_proba(model: TrainedModel, matrix) -> np.ndarray:
    return model.predict_proba(matrix)


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def model_to_dict(model: TrainedModel, hyperparameters: dict | None = None) -> dict:
    params = {k: _jsonable(v) for k, v in model.to_params().items()}
    if isinstance(model, LogRegModel):
        hyperparameters = {"C": model.C, "tol": model.tol, **(hyperparameters or {})}
    elif isinstance(model, SvmModel):
        hyperparameters = {"C": model.C, "gamma": model.gamma, **(hyperparameters or {})}
    elif isinstance(model, MlpModel):
        hyperparameters = {**model.config.__dict__, **(hyperparameters or {})}
    return {"kind": model.kind, "hyperparameters": hyperparameters or {}, "parameters": params}


def model_from_dict(d: dict) -> TrainedModel:
    kind, p, hp = d["kind"], d["parameters"], d.get("hyperparameters", {})
    arr = lambda key: np.asarray(p[key], dtype=float)  # noqa: E731
    if kind == "gaussian_nb":
        return GaussianNbModel(arr("priors"), arr("means"), arr("variances"))
    if kind == "bernoulli_nb":
        thresholds = np.array([np.nan if t is None else t for t in p["thresholds"]], dtype=float)
        return BernoulliNbModel(arr("priors"), arr("theta"), thresholds)
    if kind == "logreg":
        return LogRegModel(arr("weights"), float(p["bias"]), C=hp.get("C", 1000.0),
                           tol=hp.get("tol", 0.1))
    if kind == "svm_rbf":
        sv = np.asarray(p["support_vectors"], dtype=float)
        return SvmModel(sv.reshape(len(sv), -1), arr("dual_coef"), float(p["bias"]),
                        gamma=hp.get("gamma", 1.0), C=hp.get("C", 100.0))
    if kind == "mlp":
        sizes = tuple(tuple(s) for s in p["sizes"])
        config = MlpConfig(**{k: v for k, v in hp.items() if k in MlpConfig.__dataclass_fields__})
        return MlpModel(sizes, arr("flat"), config)
    raise ValueError(f"unknown model kind {kind!r}")


def dumps_model(model: TrainedModel, **extra) -> str:
    payload = model_to_dict(model)
    payload.update(extra)
    return json.dumps(payload)


__all__ = [
    "BernoulliNbModel", "ClassifierSpec", "GaussianNbModel", "LogRegModel", "MlpConfig",
    "MlpModel", "SvmModel", "TrainedModel", "fit", "fit_bernoulli_nb", "fit_gaussian_nb",
    "fit_logreg_ncg", "fit_mlp_adam", "fit_svm_smo", "logreg_loss_grad", "mlp_loss_grad",
    "model_from_dict", "model_to_dict", "predict", "predict_proba", "rbf_kernel",
]
