"""Acceptance criteria, each at its stated tolerance.

Criteria 1 and 3 compare against the published percentages and need the
public dataset snapshot; point ``AUDIT_FAKE_DATASET`` / ``AUDIT_AUTOMATED_DATASET``
at the file(s) (several paths separated by ``os.pathsep``).  Without them the
remaining criteria run on the synthetic generator.
"""

import itertools
import os
import time
from fractions import Fraction

import numpy as np
import pytest

from instaudit.classifiers import KINDS, logreg_loss_grad, mlp_loss_grad
from instaudit.classifiers.mlp import MlpConfig, init_parameters
from instaudit.classifiers.svm import dual_objective, rbf_gram, solve_smo
from instaudit.cli import run
from instaudit.data_model import FeatureMatrix, to_matrix
from instaudit.evaluation import ConfusionMatrix, macro_f1_from_confusion, metrics
from instaudit.feature_select import (
    GaConfig,
    MlpF2Evaluator,
    DEFAULT_COSTS,
    cost_table,
    evolve,
    selected_columns,
    total_cost,
)
from instaudit.io import read_dataset
from instaudit.oversample import SmoteConfig, median_std, smotenc_balance, smotenc_generate
from instaudit.pipeline import (
    automated_table,
    fake_table,
    prepare_split,
    stage_seed,
    synthetic_dataset,
)

pytestmark = pytest.mark.acceptance
SEEDS = range(5)


def _dataset_paths(var):
    value = os.environ.get(var, "")
    return [p for p in value.split(os.pathsep) if p]


def real_matrix(schema):
    paths = _dataset_paths(f"AUDIT_{schema.upper()}_DATASET")
    return to_matrix(read_dataset(paths, schema)) if paths else None


def matrix_for(schema, seed):
    real = real_matrix(schema)
    return real if real is not None else to_matrix(synthetic_dataset(schema, seed))


def need_real(schema):
    m = real_matrix(schema)
    if m is None:
        pytest.skip(f"public {schema} dataset not provided (set AUDIT_{schema.upper()}_DATASET)")
    return m


# -- 1 -----------------------------------------------------------------------

@pytest.mark.criterion(1, "fake table: SVM and MLP macro-F1 >= 0.89 in paper mode, <= 2 min")
def test_c1_fake_table_reproduction():
    matrix = need_real("fake")
    start = time.perf_counter()
    scores = {"svm_rbf": [], "mlp": []}
    for seed in SEEDS:
        table = fake_table(matrix, seed, paper_mode=True, kinds=tuple(scores))
        for row in table["rows"]:
            scores[row["classifier"]].append(row["f1_with_oversampling"])
    elapsed = time.perf_counter() - start
    means = {k: float(np.mean(v)) for k, v in scores.items()}
    print(f"criterion 1: mean macro-F1 {means}, {elapsed:.1f}s")
    assert all(v >= 0.89 for v in means.values()), means
    assert elapsed <= 120.0


# -- 2 -----------------------------------------------------------------------

@pytest.mark.criterion(2, "oversampling never lowers mean macro-F1 (5 classifiers, 5 seeds)")
def test_c2_oversampling_monotonicity():
    without = {k: [] for k in KINDS}
    with_ = {k: [] for k in KINDS}
    for seed in SEEDS:
        table = fake_table(matrix_for("fake", seed), seed, paper_mode=True)
        for row in table["rows"]:
            without[row["classifier"]].append(row["f1_without_oversampling"])
            with_[row["classifier"]].append(row["f1_with_oversampling"])
    for kind in KINDS:
        a, b = np.mean(without[kind]), np.mean(with_[kind])
        print(f"criterion 2: {kind:13s} without {a:.4f} with {b:.4f}")
        assert b >= a, kind


# -- 3 -----------------------------------------------------------------------

@pytest.mark.criterion(3, "automated table: SVM/MLP F1 within 0.86 +- 0.05, GNB recall >= 0.90 "
                          "and precision <= 0.65")
def test_c3_automated_table_reproduction():
    matrix = need_real("automated")
    rows = {}
    for seed in SEEDS:
        for row in automated_table(matrix, seed)["rows"]:
            rows.setdefault(row["classifier"], []).append(row)
    mean = lambda kind, key: float(np.mean([r[key] for r in rows[kind]]))  # noqa: E731
    for kind in ("svm_rbf", "mlp"):
        assert abs(mean(kind, "f1") - 0.86) <= 0.05, (kind, mean(kind, "f1"))
    assert mean("gaussian_nb", "recall") >= 0.90
    assert mean("gaussian_nb", "precision") <= 0.65


# -- 4 -----------------------------------------------------------------------

def _evaluators():
    def constant(reduced, seed):
        return 50.0

    def width(reduced, seed):
        return 9.0 * reduced.n_features

    def noise(reduced, seed):
        return float(np.random.default_rng(seed).uniform(0, 100))

    def column_bonus(reduced, seed):
        return 30.0 * ("avg_recent_hashtag_count" in reduced.column_names) + 5.0 * reduced.n_features

    def negative(reduced, seed):
        return -float(np.random.default_rng(seed).uniform(0, 10))

    return [("constant", constant), ("width", width), ("noise", noise),
            ("column-bonus", column_bonus), ("negative", negative), ("mlp-f2", MlpF2Evaluator())]


@pytest.mark.criterion(4, "GA best-fitness trace is non-decreasing (20 evaluator/seed pairs)")
def test_c4_ga_elitism():
    rng = np.random.default_rng(2024)
    evaluators = _evaluators()
    small = to_matrix(synthetic_dataset("automated", 0)).take(np.r_[0:100, 700:800])
    pairs = [(evaluators[i % len(evaluators)], int(rng.integers(0, 2**31))) for i in range(20)]
    for (name, evaluator), seed in pairs:
        cfg = GaConfig(seed=seed, generations=10 if name == "mlp-f2" else 25,
                       mutation_rate=float(rng.uniform(0.0, 1.0)))
        trace = evolve(small, cost_table(small.column_names), cfg, evaluator).trace.best_fitness
        assert all(b >= a for a, b in zip(trace, trace[1:])), (name, seed, trace)


# -- 5 -----------------------------------------------------------------------

@pytest.mark.criterion(5, "GA cost weight 2 selects cheaper subsets than weight 0; "
                          "no cost-4 feature in the majority")
def test_c5_ga_cost_sensitivity():
    costs_by_weight = {}
    chosen = []
    for weight in (2.0, 0.0):
        for seed in SEEDS:
            train = prepare_split(matrix_for("automated", seed), seed).train
            costs = cost_table(train.column_names)
            cfg = GaConfig(cost_weight=weight, seed=stage_seed(seed, "ga"))
            result = evolve(train, costs, cfg, MlpF2Evaluator())
            costs_by_weight.setdefault(weight, []).append(total_cost(result.best, costs))
            if weight == 2.0:
                chosen.append(set(selected_columns(train, result.best)))
    print(f"criterion 5: costs {costs_by_weight}")
    assert np.mean(costs_by_weight[2.0]) < np.mean(costs_by_weight[0.0])
    for name in (c for c, cost in DEFAULT_COSTS.items() if cost == 4):
        assert sum(name in s for s in chosen) <= len(chosen) // 2, name


# -- 6 -----------------------------------------------------------------------

def _random_mixed_matrix(rng):
    while True:
        m, k, d_cont = _draw_mixed_matrix(rng)
        # A zero median std leaves the mixed distance undefined; that case
        # raises by design and is covered by the unit tests.
        if d_cont == m.n_features or median_std(m, 1) > 0:
            return m, k, d_cont


def _draw_mixed_matrix(rng):
    k = int(rng.integers(1, 6))
    n_min = int(rng.integers(k + 1, k + 15))
    n_maj = int(rng.integers(n_min, n_min + 30))
    d_cont = int(rng.integers(1, 4))
    d_bin = int(rng.integers(0, 3))
    n = n_min + n_maj
    cont = rng.normal(0, rng.uniform(0.5, 20), (n, d_cont))
    if rng.random() < 0.5:
        cont[:, 0] = np.rint(np.abs(cont[:, 0]))  # integer count column
    rows = np.column_stack([cont, rng.integers(0, 2, (n, d_bin))])
    names = tuple(f"c{j}" for j in range(d_cont + d_bin))
    kinds = ("continuous",) * d_cont + ("binary",) * d_bin
    labels = np.array([1] * n_min + [0] * n_maj)
    rng.shuffle(labels)
    integer = (names[0],) if np.array_equal(cont[:, 0], np.rint(cont[:, 0])) else ()
    return FeatureMatrix(names, kinds, rows, labels, integer_columns=integer), k, d_cont


@pytest.mark.criterion(6, "SMOTE-NC geometry over 1000 random generations, exact")
def test_c6_smotenc_geometry():
    rng = np.random.default_rng(6)
    for _ in range(1000):
        m, k, d_cont = _random_mixed_matrix(rng)
        counts = m.class_counts()
        deficit = counts[0] - counts[1]
        batch = smotenc_generate(m, 1, max(deficit, 1), k, np.random.default_rng(rng.integers(2**32)))
        for new, base, nbr, nset in zip(batch.rows, batch.base, batch.neighbor, batch.neighbor_sets):
            assert m.labels[base] == 1 and np.all(m.labels[nset] == 1)
            assert nbr in nset and base not in nset
            lo = np.minimum(m.rows[base, :d_cont], m.rows[nbr, :d_cont])
            hi = np.maximum(m.rows[base, :d_cont], m.rows[nbr, :d_cont])
            assert np.all((new[:d_cont] >= lo) & (new[:d_cont] <= hi))
            for j in range(d_cont, m.n_features):
                assert new[j] in m.rows[nset, j]
        target = counts[0] + int(rng.integers(0, 5))
        out = smotenc_balance(m, SmoteConfig(k=k, target_per_class=target, seed=int(rng.integers(1000))))
        assert out.class_counts() == (target, target)
        assert np.array_equal(out.rows[: m.n_rows], m.rows)


# -- 7 -----------------------------------------------------------------------

def _max_relative_error(analytic, f, theta, h=1e-5):
    fd = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        fd[i] = (f(theta + e) - f(theta - e)) / (2 * h)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), 1e-8)
    return float(np.max(np.abs(analytic - fd) / scale))


@pytest.mark.criterion(7, "MLP and logistic-regression gradients match central differences, "
                          "max rel err <= 1e-4")
def test_c7_gradient_oracles():
    rng = np.random.default_rng(7)
    worst = {"logreg": 0.0, "mlp": 0.0}
    for _ in range(50):
        n, d = int(rng.integers(3, 12)), int(rng.integers(1, 5))
        X = rng.normal(size=(n, d))
        y = rng.integers(0, 2, n)
        C = float(10 ** rng.uniform(-1, 3))
        theta = rng.normal(size=d + 1)
        _, g = logreg_loss_grad(theta, X, y, C)
        err = _max_relative_error(g, lambda t: logreg_loss_grad(t, X, y, C)[0], theta)
        worst["logreg"] = max(worst["logreg"], err)

        cfg = MlpConfig(hidden_units=int(rng.integers(2, 6)), hidden_layers=int(rng.integers(1, 3)))
        sizes = cfg.layer_sizes(d)
        flat = init_parameters(sizes, rng)
        _, g = mlp_loss_grad(flat, sizes, X, y)
        err = _max_relative_error(g, lambda t: mlp_loss_grad(t, sizes, X, y)[0], flat)
        worst["mlp"] = max(worst["mlp"], err)
    print(f"criterion 7: worst relative errors {worst}")
    assert max(worst.values()) <= 1e-4


# -- 8 -----------------------------------------------------------------------

SMO_CORPUS = np.array([[0, 0], [1, 1], [0, 1], [1, 0], [0, 0], [0.5, 0.2], [0.3, 0.9]])
SMO_LABELS = np.array([1, 1, -1, -1, -1, 1, -1], dtype=float)


def enumerate_dual_optimum(K, y, C):
    """Exact optimum: solve the KKT system on every face of the box."""
    n = len(y)
    Q = K * np.outer(y, y)
    best = -np.inf
    for state in itertools.product((0, 1, 2), repeat=n):
        state = np.array(state)
        free = np.flatnonzero(state == 1)
        fixed = np.flatnonzero(state != 1)
        alpha = np.where(state == 2, C, 0.0)
        if len(free):
            f = len(free)
            A = np.zeros((f + 1, f + 1))
            A[:f, :f] = Q[np.ix_(free, free)]
            A[:f, f] = y[free]
            A[f, :f] = y[free]
            rhs = np.append(1.0 - Q[np.ix_(free, fixed)] @ alpha[fixed], -(y[fixed] @ alpha[fixed]))
            alpha[free] = np.linalg.lstsq(A, rhs, rcond=None)[0][:f]
        if alpha.min() < -1e-12 or alpha.max() > C + 1e-12 or abs(alpha @ y) > 1e-9:
            continue
        best = max(best, dual_objective(np.clip(alpha, 0, C), K, y))
    return best


def max_kkt_violation(alpha, K, y, C):
    grad = (K * np.outer(y, y)) @ alpha - 1.0
    score = -y * grad
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
    if not up.any() or not low.any():
        return 0.0
    return max(0.0, float(score[up].max() - score[low].min()))


@pytest.mark.criterion(8, "SMO matches the enumerated dual optimum within 1e-3 and meets KKT within tol")
def test_c8_smo_oracle():
    tol = 1e-3
    checked = 0
    for C in (1.0, 100.0):
        for size in (2, 3, 4):
            for subset in itertools.combinations(range(len(SMO_LABELS)), size):
                idx = list(subset)
                y = SMO_LABELS[idx]
                if len(set(y)) < 2:
                    continue
                K = rbf_gram(SMO_CORPUS[idx], SMO_CORPUS[idx], 1.0)
                sol = solve_smo(K, y, C, tol=tol)
                assert sol.converged
                assert abs(dual_objective(sol.alpha, K, y) - enumerate_dual_optimum(K, y, C)) <= 1e-3
                assert abs(sol.alpha @ y) <= 1e-9
                assert sol.alpha.min() >= 0 and sol.alpha.max() <= C
                assert max_kkt_violation(sol.alpha, K, y, C) < tol
                checked += 1
    assert checked > 100


# -- 9 -----------------------------------------------------------------------

def _exact_f(p, r, beta):
    b2 = Fraction(beta) ** 2
    return (1 + b2) * p * r / (b2 * p + r) if (b2 * p + r) else Fraction(0)


@pytest.mark.criterion(9, "metric identities on 1000 random confusion matrices, exact to 1e-12")
def test_c9_metric_identities():
    s = metrics(ConfusionMatrix(tp=91, fp=9, tn=0, fn=20))
    assert abs(s.precision - 0.91) <= 1e-12
    assert abs(s.recall - 91 / 111) <= 1e-12
    from instaudit.evaluation import f_beta

    f1 = f_beta(0.91, 0.82, 1.0)
    assert abs(f1 - float(_exact_f(Fraction(91, 100), Fraction(82, 100), 1))) <= 1e-12
    assert round(f1, 4) == 0.8627 and round(100 * f1) == 86

    rng = np.random.default_rng(9)
    for _ in range(1000):
        tp, fp, tn, fn = (int(v) for v in rng.integers(0, 60, 4))
        if tp + fp + tn + fn == 0:
            tn = 1
        cm = ConfusionMatrix(tp, fp, tn, fn)
        s = metrics(cm)
        p = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
        r = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
        assert abs(s.precision - float(p)) <= 1e-12
        assert abs(s.recall - float(r)) <= 1e-12
        assert abs(s.f1 - float(_exact_f(p, r, 1))) <= 1e-12
        assert abs(s.f2 - float(_exact_f(p, r, 2))) <= 1e-12
        assert s.f1 <= max(s.precision, s.recall) + 1e-12
        if s.recall > s.precision:
            assert s.f2 >= s.f1 - 1e-12
        elif s.recall < s.precision:
            assert s.f2 <= s.f1 + 1e-12
        assert abs(macro_f1_from_confusion(cm) - macro_f1_from_confusion(cm.swapped())) <= 1e-12


# -- 10 ----------------------------------------------------------------------

@pytest.mark.criterion(10, "reproduce twice gives byte-identical JSON")
@pytest.mark.parametrize("schema", ["fake", "automated"])
def test_c10_end_to_end_determinism(schema, tmp_path):
    argv = ["reproduce", "--schema", schema, "--seed", "11"]
    argv += [a for p in _dataset_paths(f"AUDIT_{schema.upper()}_DATASET") for a in ("--dataset", p)]
    outputs = []
    for name in ("first.json", "second.json"):
        out = tmp_path / name
        assert run(argv + ["--out", str(out)]) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
