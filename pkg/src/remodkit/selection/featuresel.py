"""Genetic search for the feature subset whose PCA space best separates winners."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import DegenerateLabelsError, UsageError
from .pca import InstanceSpace, pca_project
from .svm import one_vs_rest_predict


@dataclass(frozen=True)
class FeatureGAParams:
    population: int = 50
    generations: int = 60
    crossover_rate: float = 0.8
    mutation_rate: float | None = None   # None means 1/d
    elitism: int = 2
    min_size: int = 3
    max_size: int = 12
    size_penalty: float = 0.02           # per feature outside [min_size, max_size]
    splits: int = 3
    test_fraction: float = 0.3
    C: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.population < 2 or self.generations < 0:
            raise UsageError("population must be >= 2 and generations >= 0")
        if not 0 <= self.elitism < self.population:
            raise UsageError("elitism must be smaller than the population")
        if not 0 < self.test_fraction < 1:
            raise UsageError("test_fraction must be in (0, 1)")
        if self.splits < 1:
            raise UsageError("need at least one evaluation split")

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class FeatureSelection:
    selected: tuple
    space: InstanceSpace
    fitness: float
    accuracy: float
    history: list = field(default_factory=list)   # best fitness per generation


def stratified_split(labels, test_fraction: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Per-class shuffle; each class with >= 2 members puts at least one row in each side."""
    labels = np.asarray(labels)
    train, test = [], []
    for cls in sorted(np.unique(labels).tolist()):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(len(idx))]
        n_test = int(round(test_fraction * len(idx)))
        if len(idx) >= 2:
            n_test = min(max(n_test, 1), len(idx) - 1)
        else:
            n_test = 0
        test.extend(idx[:n_test].tolist())
        train.extend(idx[n_test:].tolist())
    return np.array(sorted(train), dtype=int), np.array(sorted(test), dtype=int)


class _Fitness:
    def __init__(self, x, labels, params: FeatureGAParams, seed: int):
        self.x = x
        self.labels = labels
        self.params = params
        self.splits = [stratified_split(labels, params.test_fraction, np.random.default_rng([seed, 20, s]))
                       for s in range(params.splits)]
        self.cache: dict[bytes, tuple[float, float]] = {}

    def penalty(self, size: int) -> float:
        p = self.params
        short = max(0, min(p.min_size, self.x.shape[1]) - size)
        over = max(0, size - p.max_size)
        return p.size_penalty * (short + over)

    def __call__(self, mask: np.ndarray) -> tuple[float, float]:
        key = np.packbits(mask).tobytes()
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        size = int(mask.sum())
        if size < 2:
            out = (-1.0, 0.0)
        else:
            pts = pca_project(self.x[:, mask]).points
            accs = []
            for train, test in self.splits:
                pred = one_vs_rest_predict(pts[train], self.labels[train], pts[test],
                                           self.params.C, self.params.gamma)
                accs.append(float(np.mean(pred == self.labels[test])))
            acc = float(np.mean(accs))
            out = (acc - self.penalty(size), acc)
        self.cache[key] = out
        return out


def _random_mask(d: int, params: FeatureGAParams, rng) -> np.ndarray:
    lo = min(params.min_size, d)
    hi = min(params.max_size, d)
    size = int(rng.integers(lo, hi + 1))
    mask = np.zeros(d, dtype=bool)
    mask[rng.choice(d, size=size, replace=False)] = True
    return mask


def ga_select_features(
    x,
    names: Sequence[str],
    best_config: Sequence[str],
    params: FeatureGAParams | None = None,
    seed: int = 0,
) -> FeatureSelection:
    """Search bit-mask feature subsets.

    Fitness is the mean held-out accuracy, over a few fixed stratified splits,
    of a one-vs-rest RBF SVM predicting each row's best configuration from its
    2-D PCA coordinates, minus a soft penalty for subset sizes outside
    ``[min_size, max_size]``. The best subset seen in any generation is kept.
    """
    params = params or FeatureGAParams()
    x = np.asarray(x, dtype=float)
    labels = np.asarray(list(best_config))
    n, d = x.shape
    if len(names) != d:
        raise UsageError("feature name count does not match the matrix")
    if d < 2:
        raise UsageError("feature selection needs at least two candidate features")
    if n < 6:
        raise UsageError(f"feature selection needs at least six rows, got {n}")
    if len(labels) != n:
        raise UsageError("one best configuration per row is required")
    if len(np.unique(labels)) < 2:
        raise DegenerateLabelsError("every row has the same best configuration")

    rng = np.random.default_rng([seed, 21])
    mut = params.mutation_rate if params.mutation_rate is not None else 1.0 / d
    fitness = _Fitness(x, labels, params, seed)

    if d == 2:
        mask = np.ones(2, dtype=bool)
        fit, acc = fitness(mask)
        return FeatureSelection(tuple(names), pca_project(x, list(names)), fit, acc, [fit])

    pop = [_random_mask(d, params, rng) for _ in range(params.population)]
    scores = [fitness(m) for m in pop]
    best_i = int(np.argmax([s[0] for s in scores]))
    best_mask, best_score = pop[best_i].copy(), scores[best_i]
    history = [best_score[0]]

    def pick():
        a, b = rng.integers(0, len(pop), size=2)
        return pop[a] if scores[a][0] >= scores[b][0] else pop[b]

    for _ in range(params.generations):
        order = sorted(range(len(pop)), key=lambda i: -scores[i][0])
        nxt = [pop[i].copy() for i in order[: params.elitism]]
        while len(nxt) < params.population:
            p1, p2 = pick(), pick()
            if rng.random() < params.crossover_rate:
                swap = rng.random(d) < 0.5
                c1 = np.where(swap, p2, p1)
                c2 = np.where(swap, p1, p2)
            else:
                c1, c2 = p1.copy(), p2.copy()
            for child in (c1, c2):
                flip = rng.random(d) < mut
                child ^= flip
                if len(nxt) < params.population:
                    nxt.append(child)
        pop = nxt
        scores = [fitness(m) for m in pop]
        i = int(np.argmax([s[0] for s in scores]))
        if scores[i][0] > best_score[0]:
            best_mask, best_score = pop[i].copy(), scores[i]
        history.append(best_score[0])

    selected = [nm for nm, keep in zip(names, best_mask) if keep]
    space = pca_project(x[:, best_mask], selected)
    return FeatureSelection(tuple(selected), space, best_score[0], best_score[1], history)
