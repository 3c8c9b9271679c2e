"""Performance tables, good/bad labels, per-config footprints and recommendation."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from ..core import RunResult, csv_text
from ..errors import DegenerateLabelsError, InvariantError, MissingCellError, SchemaError, UsageError
from ..features import ProjectFeatureVector, Standardiser, standardise
from .featuresel import FeatureGAParams, FeatureSelection, ga_select_features
from .pca import InstanceSpace
from .svm import SVMClassifier, Scores, constant_classifier, train_svm, tune_and_score

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 70.0
MODEL_FORMAT = "remodkit-footprint"
MODEL_VERSION = 1
NONE_LABEL = "None"
METRICS_HEADER = ("Algorithm", "Accuracy", "Precision", "Recall")


@dataclass(frozen=True, eq=False)
class PerformanceTable:
    """Dense MoJoFM table: one row per (project, release), one column per config.

    Columns are kept in canonical (sorted) name order, so ``argmax`` ties
    resolve to the canonically first configuration.
    """

    rows: tuple
    configs: tuple
    cells: np.ndarray

    def __post_init__(self):
        cells = np.array(self.cells, dtype=float, copy=True)
        configs = tuple(self.configs)
        if list(configs) != sorted(configs) or len(set(configs)) != len(configs):
            raise InvariantError("configs must be unique and in canonical order")
        if cells.shape != (len(self.rows), len(configs)):
            raise InvariantError("cell matrix shape mismatch")
        if np.isnan(cells).any():
            gaps = [(f"{p}/{r}", configs[j]) for (i, j) in zip(*np.nonzero(np.isnan(cells)))
                    for p, r in [self.rows[i]]]
            raise MissingCellError(gaps)
        cells.setflags(write=False)
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        object.__setattr__(self, "configs", configs)
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_results(
        cls,
        results: Sequence[RunResult],
        configs: Optional[Sequence[str]] = None,
        rows: Optional[Sequence[tuple]] = None,
    ) -> "PerformanceTable":
        by_key: dict[tuple, float] = {}
        for r in results:
            key = (r.project, r.release, r.config.name)
            if key in by_key:
                raise InvariantError(f"duplicate result for {key}")
            by_key[key] = r.mojofm
        if configs is None:
            configs = sorted({k[2] for k in by_key})
        if rows is None:
            rows = sorted({(k[0], k[1]) for k in by_key})
        configs = sorted(configs)
        cells = np.full((len(rows), len(configs)), np.nan)
        for i, (p, rel) in enumerate(rows):
            for j, c in enumerate(configs):
                v = by_key.get((p, rel, c))
                if v is not None:
                    cells[i, j] = v
        return cls(tuple(rows), tuple(configs), cells)

    def best_configs(self) -> list[str]:
        return [self.configs[j] for j in np.argmax(self.cells, axis=1)]

    def prioritisation(self) -> dict[str, int]:
        """How many rows each configuration is the best for."""
        counts = {c: 0 for c in self.configs}
        for c in self.best_configs():
            counts[c] += 1
        return counts

    def to_csv(self) -> str:
        out = [[p, r] + [repr(float(v)) for v in row] for (p, r), row in zip(self.rows, self.cells)]
        return csv_text(out, ["project", "release", *self.configs])

    @classmethod
    def from_csv(cls, text: str) -> "PerformanceTable":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if not header or header[:2] != ["project", "release"]:
            raise SchemaError("performance table CSV must start with project,release columns")
        rows, cells = [], []
        for cells_row in reader:
            if not cells_row:
                continue
            rows.append((cells_row[0], cells_row[1]))
            cells.append([float(v) if v else np.nan for v in cells_row[2:]])
        return cls(tuple(rows), tuple(header[2:]), np.array(cells, dtype=float).reshape(len(rows), len(header) - 2))


@dataclass(frozen=True)
class Labels:
    good: Mapping[str, np.ndarray]   # config -> bool per row
    best: tuple                      # best config per row
    threshold: float


def label_runs(table: PerformanceTable, threshold: float = DEFAULT_THRESHOLD) -> Labels:
    good = {c: table.cells[:, j] >= threshold for j, c in enumerate(table.configs)}
    return Labels(good, tuple(table.best_configs()), float(threshold))


# ---------------------------------------------------------------------------
# Footprint model
# ---------------------------------------------------------------------------


@dataclass
class ConfigFootprint:
    config: str
    classifier: SVMClassifier
    accuracy: float
    precision: float
    recall: float
    degenerate: bool = False

    def __post_init__(self):
        for name in ("accuracy", "precision", "recall"):
            v = getattr(self, name)
            if not 0.0 <= v <= 100.0:
                raise InvariantError(f"{name} {v} outside [0, 100]")

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "degenerate": self.degenerate,
            "classifier": self.classifier.to_json(),
        }

    @classmethod
    def from_json(cls, doc) -> "ConfigFootprint":
        return cls(doc["config"], SVMClassifier.from_json(doc["classifier"]), float(doc["accuracy"]),
                   float(doc["precision"]), float(doc["recall"]), bool(doc["degenerate"]))


@dataclass
class FootprintModel:
    standardiser: Standardiser
    space: InstanceSpace
    footprints: dict            # config name -> ConfigFootprint, canonical order
    threshold: float = DEFAULT_THRESHOLD
    seed: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def configs(self) -> list[str]:
        return list(self.footprints)

    def locate(self, fv: ProjectFeatureVector) -> np.ndarray:
        missing = [n for n in self.space.selected_features if n not in fv.values]
        if missing:
            raise SchemaError(f"feature vector {fv.project}/{fv.release} lacks selected feature {missing[0]!r}")
        idx = [self.standardiser.names.index(n) for n in self.space.selected_features]
        raw = np.array([fv.values[n] for n in self.space.selected_features], dtype=float)
        safe = np.where(self.standardiser.std[idx] > 0, self.standardiser.std[idx], 1.0)
        z = np.where(self.standardiser.std[idx] > 0, (raw - self.standardiser.mean[idx]) / safe, 0.0)
        return self.space.project(z)

    def decision_values(self, points) -> np.ndarray:
        """Decision value of every config's classifier at each point (n x configs)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.column_stack([fp.classifier.decision_function(pts) for fp in self.footprints.values()])

    def select(self, points) -> list[str]:
        """One-vs-rest selection at each point, ``"None"`` where no config is predicted good."""
        dv = self.decision_values(points)
        names = self.configs
        out = []
        for row in dv:
            j = int(np.argmax(row))
            out.append(names[j] if row[j] > 0 else NONE_LABEL)
        return out

    def metrics_rows(self) -> list[list]:
        return [[c, f"{fp.accuracy:.1f}", f"{fp.precision:.1f}", f"{fp.recall:.1f}"]
                for c, fp in self.footprints.items()]

    def metrics_csv(self) -> str:
        return csv_text(self.metrics_rows(), METRICS_HEADER)

    def to_json(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "threshold": self.threshold,
            "seed": self.seed,
            "standardiser": self.standardiser.to_json(),
            "instance_space": self.space.to_json(),
            "points": self.space.points.tolist(),
            "footprints": [fp.to_json() for fp in self.footprints.values()],
            "meta": self.meta,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, doc) -> "FootprintModel":
        if doc.get("format") != MODEL_FORMAT:
            raise SchemaError("not a footprint model document")
        if doc.get("version") != MODEL_VERSION:
            raise SchemaError(f"unsupported footprint model version {doc.get('version')!r}")
        space = InstanceSpace.from_json(doc["instance_space"], doc.get("points"))
        fps = [ConfigFootprint.from_json(f) for f in doc["footprints"]]
        return cls(Standardiser.from_json(doc["standardiser"]), space,
                   {f.config: f for f in sorted(fps, key=lambda f: f.config)},
                   float(doc["threshold"]), int(doc["seed"]), dict(doc.get("meta", {})))

    @classmethod
    def loads(cls, text: str) -> "FootprintModel":
        return cls.from_json(json.loads(text))


def _constant_footprint(config: str, good: np.ndarray, reason: str) -> ConfigFootprint:
    majority = 1 if good.sum() > (~good).sum() else 0
    s = Scores.from_predictions(good.astype(int), np.full(len(good), majority))
    log.debug("config %s: %s; using a constant classifier", config, reason)
    return ConfigFootprint(config, constant_classifier(majority), s.accuracy, 0.0, 0.0, degenerate=True)


def fit_footprint(config: str, points, good, seed: int = 0, *, folds: int = 10,
                  allow_fewer_folds: bool = False) -> ConfigFootprint:
    good = np.asarray(good, dtype=bool)
    try:
        tuned = tune_and_score(points, good, seed, folds=folds, allow_fewer_folds=allow_fewer_folds)
    except DegenerateLabelsError as exc:
        return _constant_footprint(config, good, str(exc))
    clf = train_svm(points, good, tuned.C, tuned.gamma, seed)
    return ConfigFootprint(config, clf, tuned.accuracy, tuned.precision, tuned.recall)


@dataclass
class TrainingReport:
    model: FootprintModel
    table: PerformanceTable
    labels: Labels
    selection: FeatureSelection


def align_features(table: PerformanceTable, vectors: Sequence[ProjectFeatureVector]) -> list[ProjectFeatureVector]:
    by_row = {(v.project, v.release): v for v in vectors}
    missing = [r for r in table.rows if r not in by_row]
    if missing:
        raise SchemaError(f"no feature vector for {missing[0][0]}/{missing[0][1]}")
    return [by_row[r] for r in table.rows]


def train_footprints(
    table: PerformanceTable,
    vectors: Sequence[ProjectFeatureVector],
    *,
    threshold: float = DEFAULT_THRESHOLD,
    seed: int = 0,
    ga_params: FeatureGAParams | None = None,
    folds: int = 10,
    allow_fewer_folds: bool = False,
) -> TrainingReport:
    """Label, select features, project, and fit one classifier per configuration."""
    vectors = align_features(table, vectors)
    z, standardiser = standardise(vectors)
    labels = label_runs(table, threshold)
    # constant features cannot carry signal into the instance space
    keep = [i for i, n in enumerate(standardiser.names) if n not in standardiser.zero_variance]
    if len(keep) < 2:
        raise UsageError("fewer than two non-constant features")
    names = [standardiser.names[i] for i in keep]
    ga_params = ga_params or FeatureGAParams()
    sel = ga_select_features(z[:, keep], names, labels.best, ga_params, seed)
    points = sel.space.points
    footprints = {c: fit_footprint(c, points, labels.good[c], seed, folds=folds,
                                   allow_fewer_folds=allow_fewer_folds)
                  for c in table.configs}
    meta = {
        "explained_variance_ratio": sel.space.explained_variance_ratio,
        "ga_fitness": sel.fitness,
        "ga_accuracy": sel.accuracy,
        "ga_params": ga_params.to_json(),
        "rows": [list(r) for r in table.rows],
        "best_configs": list(labels.best),
    }
    model = FootprintModel(standardiser, sel.space, footprints, float(threshold), int(seed), meta)
    return TrainingReport(model, table, labels, sel)


@dataclass(frozen=True)
class Recommendation:
    ranking: tuple          # (config, decision value) pairs, best first
    point: tuple
    none: bool              # no configuration is predicted good

    @property
    def best(self) -> str:
        return NONE_LABEL if self.none else self.ranking[0][0]

    def to_json(self) -> dict:
        return {
            "recommended": self.best,
            "point": list(self.point),
            "ranking": [{"config": c, "decision": d, "good": d > 0} for c, d in self.ranking],
        }


def recommend(model: FootprintModel, fv: ProjectFeatureVector) -> Recommendation:
    """Rank every configuration at the instance-space location of ``fv``.

    Predicted-good configurations come first, each group ordered by decision
    value descending and then by name.
    """
    pt = model.locate(fv)
    dv = model.decision_values(pt)[0]
    pairs = [(c, float(v)) for c, v in zip(model.configs, dv)]
    ranking = sorted(pairs, key=lambda p: (not p[1] > 0, -p[1], p[0]))
    return Recommendation(tuple(ranking), (float(pt[0]), float(pt[1])), not any(v > 0 for _, v in pairs))
