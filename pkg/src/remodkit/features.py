"""Project-level feature vectors aggregated from class-level CK metrics."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import csv_text
from .errors import ParseError, SchemaError, UsageError

log = logging.getLogger(__name__)

AGGREGATES = ("max", "mean", "std", "sum")

# Columns the CK tool emits that are identifiers rather than metrics.
NON_METRIC_COLUMNS = ("file", "type")
CLASS_COLUMN = "class"

# Class-level metrics the CK tool reports; used by the synthetic corpus and as
# the documented inventory (real inputs may carry any subset).
CK_CLASS_METRICS = (
    "cbo", "wmc", "dit", "rfc", "tcc", "lcc", "loc",
    "totalMethods", "staticMethods", "publicMethods", "privateMethods",
    "protectedMethods", "defaultMethods", "abstractMethods", "finalMethods",
    "visibleMethods",
    "totalFields", "staticFields", "publicFields", "privateFields",
    "protectedFields", "defaultFields", "finalFields",
    "nosi", "returnQty", "loopQty", "comparisonsQty", "tryCatchQty",
    "parenthesizedExpsQty", "stringLiteralsQty", "numbersQty",
    "mathOperationsQty", "variablesQty", "maxNestedBlocks",
    "anonymousClassesQty", "subClassesQty", "lambdasQty",
    "uniqueWordsQty", "modifiers", "logStatementsQty",
)


@dataclass(frozen=True)
class ClassMetricsRow:
    class_name: str
    metrics: Mapping[str, float]


def parse_metrics_csv(
    text: str,
    *,
    class_column: str = CLASS_COLUMN,
    ignore: Sequence[str] = NON_METRIC_COLUMNS,
) -> list[ClassMetricsRow]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise SchemaError("metrics CSV is empty") from None
    if class_column not in header:
        raise SchemaError(f"metrics CSV has no {class_column!r} column")
    cls_idx = header.index(class_column)
    metric_cols = [(i, h) for i, h in enumerate(header) if i != cls_idx and h not in ignore]
    rows: dict[str, ClassMetricsRow] = {}
    for rowno, cells in enumerate(reader, start=2):
        if not any(c.strip() for c in cells):
            continue
        if len(cells) != len(header):
            raise ParseError(f"row {rowno}: {len(cells)} cells, header has {len(header)}", line=rowno)
        metrics = {}
        for i, name in metric_cols:
            raw = cells[i].strip()
            try:
                value = float(raw)
            except ValueError:
                value = math.nan
            if not math.isfinite(value):
                raise ParseError(f"row {rowno}, column {name!r}: non-numeric value {raw!r}",
                                 line=rowno, column=name)
            metrics[name] = value
        name = cells[cls_idx].strip()
        if name in rows:
            log.warning("duplicate class %s in metrics CSV; keeping the last row", name)
        rows[name] = ClassMetricsRow(name, metrics)
    return list(rows.values())


@dataclass(frozen=True)
class ProjectFeatureVector:
    project: str
    release: str
    values: Mapping[str, float] = field(default_factory=dict)

    @property
    def names(self) -> list[str]:
        return list(self.values)

    def array(self, names: Sequence[str] | None = None) -> np.ndarray:
        names = self.names if names is None else names
        missing = [n for n in names if n not in self.values]
        if missing:
            raise SchemaError(f"feature vector lacks {missing[0]!r}")
        return np.array([self.values[n] for n in names], dtype=float)


def aggregate_metrics(rows: Sequence[ClassMetricsRow], project: str = "", release: str = "") -> ProjectFeatureVector:
    if not rows:
        raise UsageError("cannot aggregate an empty metrics table")
    names = list(rows[0].metrics)
    for r in rows:
        if set(r.metrics) != set(names):
            missing = sorted(set(names) ^ set(r.metrics))
            raise SchemaError(f"class {r.class_name!r} has inconsistent metrics: {missing}")
    data = np.array([[r.metrics[m] for m in names] for r in rows], dtype=float)
    values = {}
    for j, m in enumerate(names):
        col = data[:, j]
        mean = float(np.mean(col))
        values[f"{m}_max"] = float(np.max(col))
        values[f"{m}_mean"] = mean
        values[f"{m}_std"] = float(np.sqrt(np.mean((col - mean) ** 2)))
        values[f"{m}_sum"] = float(np.sum(col))
    return ProjectFeatureVector(project, release, values)


@dataclass(frozen=True)
class Standardiser:
    """Per-feature z-score transform fitted on a training matrix."""

    names: tuple
    mean: np.ndarray
    std: np.ndarray
    zero_variance: tuple

    # Relative spread below which a feature is treated as constant.
    ATOL = 1e-12

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        safe = np.where(self.std > 0, self.std, 1.0)
        z = (x - self.mean) / safe
        z[..., self.std == 0] = 0.0
        return z

    def transform_vector(self, fv: ProjectFeatureVector) -> np.ndarray:
        return self.transform(fv.array(self.names))

    def to_json(self) -> dict:
        return {
            "names": list(self.names),
            "mean": [float(v) for v in self.mean],
            "std": [float(v) for v in self.std],
            "zero_variance": list(self.zero_variance),
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "Standardiser":
        return cls(tuple(doc["names"]), np.array(doc["mean"], dtype=float),
                   np.array(doc["std"], dtype=float), tuple(doc["zero_variance"]))


def feature_matrix(vectors: Sequence[ProjectFeatureVector]) -> tuple[np.ndarray, list[str]]:
    names = vectors[0].names
    for v in vectors[1:]:
        if set(v.values) != set(names):
            diff = sorted(set(v.values) ^ set(names))
            raise SchemaError(f"{v.project}/{v.release} has a different feature set: {diff[:5]}")
    return np.array([v.array(names) for v in vectors]), names


def standardise(vectors: Sequence[ProjectFeatureVector]) -> tuple[np.ndarray, Standardiser]:
    if len(vectors) < 2:
        raise UsageError("standardisation needs at least two feature vectors")
    x, names = feature_matrix(vectors)
    mean = x.mean(axis=0)
    std = np.sqrt(((x - mean) ** 2).mean(axis=0))
    scale = np.maximum(np.abs(mean), 1.0)
    const = std <= Standardiser.ATOL * scale
    std = np.where(const, 0.0, std)
    flagged = tuple(n for n, c in zip(names, const) if c)
    t = Standardiser(tuple(names), mean, std, flagged)
    return t.transform(x), t


def write_feature_csv(vectors: Sequence[ProjectFeatureVector]) -> str:
    names = vectors[0].names if vectors else []
    rows = [[v.project, v.release] + [repr(float(v.values[n])) for n in names] for v in vectors]
    return csv_text(rows, ["project", "release"] + names)


def read_feature_csv(text: str) -> list[ProjectFeatureVector]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header[:2] != ["project", "release"]:
        raise SchemaError("feature CSV must start with project,release columns")
    out = []
    for rowno, cells in enumerate(reader, start=2):
        if not cells:
            continue
        try:
            vals = {n: float(c) for n, c in zip(header[2:], cells[2:])}
        except ValueError as exc:
            raise ParseError(f"row {rowno}: {exc}", line=rowno) from None
        out.append(ProjectFeatureVector(cells[0], cells[1], vals))
    return out
