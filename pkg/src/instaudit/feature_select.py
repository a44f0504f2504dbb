"""Cost-sensitive genetic feature selection.

An individual is a 0/1 mask over the matrix columns.  Its fitness is the F2
score (percent) of a classifier trained on the selected columns minus
``cost_weight`` times the summed feature costs.  Each generation keeps the
fittest individual, adds one fresh random individual, fills the rest with
uniform crossover between tournament winners and mutates one non-elite
individual.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .classifiers import MlpConfig, fit_mlp_adam
from .data_model import FeatureMatrix
from .evaluation import f2_percent
from .parallel import map_ordered
from .preprocess import SplitSpec, train_test_split

DEFAULT_COSTS = {
    "media_count": 2,
    "follower_count": 4,
    "following_count": 4,
    "has_highlight_reel": 2,
    "has_external_url": 2,
    "tagged_photo_count": 3,
    "avg_recent_hashtag_count": 2,
    "has_no_media": 1,
    "lcr": 2,
    "ffr": 4,
}


def cost_table(column_names: Sequence[str], costs: dict | None = None) -> np.ndarray:
    costs = DEFAULT_COSTS if costs is None else costs
    missing = [c for c in column_names if c not in costs]
    if missing:
        raise KeyError(f"no cost for column(s) {missing}")
    return np.array([costs[c] for c in column_names], dtype=np.int64)


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 20
    generations: int = 10
    mutation_rate: float = 0.05
    tournament_size: int = 3
    cost_weight: float = 2.0
    seed: int = 42

    def __post_init__(self):
        if self.population_size < 3:
            raise ValueError("population_size must be >= 3")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if self.tournament_size < 1 or self.generations < 0:
            raise ValueError("tournament_size >= 1 and generations >= 0 required")


class FitnessEvaluator(Protocol):
    def __call__(self, reduced: FeatureMatrix, seed: int) -> float:
        """Score in percent (0-100) for a matrix holding only selected columns."""


@dataclass(frozen=True)
class MlpF2Evaluator:
    """Train the network on a 70/30 split and score F2 (percent) on the 30%."""

    config: MlpConfig = field(default_factory=MlpConfig)
    train_fraction: float = 0.7

    def __call__(self, reduced: FeatureMatrix, seed: int) -> float:
        split_seed, init_seed = np.random.SeedSequence(seed).generate_state(2)
        train, test = train_test_split(reduced, SplitSpec(self.train_fraction, int(split_seed)))
        model = fit_mlp_adam(train, self.config, seed=int(init_seed))
        return f2_percent(test.labels, model.predict(test.rows))


def mask_seed(seed: int, mask) -> int:
    """Evaluator seed for a mask: identical masks always score identically."""
    bits = [int(b) for b in mask]
    return int(np.random.SeedSequence([seed, len(bits), *bits]).generate_state(1)[0])


def total_cost(mask, costs) -> int:
    mask, costs = np.asarray(mask), np.asarray(costs)
    if mask.shape != costs.shape:
        raise ValueError("mask and cost table differ in length")
    return int(np.dot(mask.astype(np.int64), costs))


def reduce(matrix: FeatureMatrix, mask) -> FeatureMatrix:
    mask = np.asarray(mask).astype(bool)
    if mask.shape != (matrix.n_features,):
        raise ValueError("mask length does not match the column count")
    if not mask.any():
        raise ValueError("mask selects no features")
    keep = np.flatnonzero(mask)
    return FeatureMatrix(
        tuple(matrix.column_names[j] for j in keep),
        tuple(matrix.column_kinds[j] for j in keep),
        matrix.rows[:, keep],
        matrix.labels,
        integer_columns=matrix.integer_columns,
    )


def fitness(mask, matrix: FeatureMatrix, costs, config: GaConfig,
            evaluator: FitnessEvaluator) -> float:
    mask = np.asarray(mask)
    if not mask.any():
        return -math.inf
    score = evaluator(reduce(matrix, mask), mask_seed(config.seed, mask))
    return float(score) - config.cost_weight * total_cost(mask, costs)


def _rng(source) -> np.random.Generator:
    return source if isinstance(source, np.random.Generator) else np.random.default_rng(source)


def random_mask(d: int, rng: np.random.Generator) -> np.ndarray:
    while True:
        mask = (rng.random(d) < 0.5).astype(np.int8)
        if mask.any():
            return mask


def init_population(d: int, config: GaConfig, rng=None) -> list[np.ndarray]:
    if d < 1:
        raise ValueError("need at least one feature")
    rng = _rng(config.seed if rng is None else rng)
    return [random_mask(d, rng) for _ in range(config.population_size)]


def _tournament(fitnesses: np.ndarray, size: int, rng) -> int:
    entrants = np.sort(rng.choice(len(fitnesses), size=min(size, len(fitnesses)), replace=False))
    return int(entrants[np.argmax(fitnesses[entrants])])


def tournament_crossover(population, fitnesses, config: GaConfig, rng=None) -> list[np.ndarray]:
    if len(population) != len(fitnesses):
        raise ValueError("population and fitnesses differ in length")
    rng = _rng(config.seed if rng is None else rng)
    fitnesses = np.asarray(fitnesses, dtype=float)
    children = []
    for _ in range(config.population_size - 2):
        a = population[_tournament(fitnesses, config.tournament_size, rng)]
        b = population[_tournament(fitnesses, config.tournament_size, rng)]
        children.append(np.where(rng.random(len(a)) < 0.5, a, b).astype(np.int8))
    return children


def mutate(mask, rate: float, rng=None) -> np.ndarray:
    rng = _rng(rng)
    out = np.array(mask, dtype=np.int8, copy=True)
    if rng.random() < rate:
        j = rng.integers(len(out))
        out[j] = 1 - out[j]
    return out


@dataclass
class GaTrace:
    best_fitness: list = field(default_factory=list)
    best_masks: list = field(default_factory=list)

    def record(self, fitness_value: float, mask: np.ndarray):
        self.best_fitness.append(float(fitness_value))
        self.best_masks.append([int(b) for b in mask])

    def to_list(self) -> list[dict]:
        return [
            {"generation": g, "best_fitness": f, "best_mask": m}
            for g, (f, m) in enumerate(zip(self.best_fitness, self.best_masks))
        ]

    def to_json(self) -> str:
        return json.dumps(self.to_list(), indent=1)


@dataclass(frozen=True)
class GaResult:
    best: np.ndarray
    best_fitness: float
    trace: GaTrace
    fitness_log: dict  # mask bytes -> fitness, every individual ever scored


def evolve(matrix: FeatureMatrix, costs, config: GaConfig,
           evaluator: FitnessEvaluator | None = None, threads: int | None = 1) -> GaResult:
    evaluator = evaluator or MlpF2Evaluator()
    costs = np.asarray(costs)
    d = matrix.n_features
    if costs.shape != (d,):
        raise ValueError("cost table does not match the column count")
    rng = np.random.default_rng(config.seed)
    cache: dict[bytes, float] = {}

    def score_all(population):
        todo = []
        for mask in population:
            key = mask.tobytes()
            if key not in cache and key not in todo:
                todo.append(key)
        values = map_ordered(
            lambda key: fitness(np.frombuffer(key, dtype=np.int8), matrix, costs, config, evaluator),
            todo, threads,
        )
        cache.update(zip(todo, values))
        return np.array([cache[m.tobytes()] for m in population])

    population = init_population(d, config, rng)
    scores = score_all(population)
    trace = GaTrace()
    best_idx = int(np.argmax(scores))
    best, best_fit = population[best_idx].copy(), scores[best_idx]
    trace.record(best_fit, best)

    for _ in range(config.generations):
        elite = population[int(np.argmax(scores))].copy()
        fresh = random_mask(d, rng)
        children = tournament_crossover(population, scores, config, rng)
        population = [elite, fresh, *children]
        target = int(rng.integers(1, len(population)))
        population[target] = mutate(population[target], config.mutation_rate, rng)
        scores = score_all(population)
        gen_idx = int(np.argmax(scores))
        if scores[gen_idx] > best_fit:
            best, best_fit = population[gen_idx].copy(), scores[gen_idx]
        trace.record(scores[gen_idx], population[gen_idx])

    return GaResult(best, float(best_fit), trace, dict(cache))


def selected_columns(matrix: FeatureMatrix, mask) -> list[str]:
    return [name for name, bit in zip(matrix.column_names, mask) if bit]
