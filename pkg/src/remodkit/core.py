"""Domain model and file formats shared by the whole pipeline.

Entities are plain strings (class or file identifiers). A
:class:`DependencyMatrix` holds the symmetric aggregated dependency weights
between them and a :class:`Decomposition` is a flat partition into named
clusters; both are immutable once built.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import InvariantError, ParseError, SchemaError, UnknownEntityError

log = logging.getLogger(__name__)

EntityId = str

DEPENDENCY_KINDS = (
    "Import",
    "Contain",
    "Parameter",
    "Call",
    "Return",
    "Throw",
    "Implement",
    "Extend",
    "Create",
    "Use",
    "Cast",
    "ImplLink",
    "Annotation",
    "Mixin",
)
_KIND_SET = frozenset(DEPENDENCY_KINDS)

DISTANCES = ("euclidean", "manhattan", "cosine")
LINKAGES = ("single", "average", "complete")
DEFAULT_DIVISORS = (5, 7, 10, 15, 20, 25)
BUNCH_SEARCHES = ("hillclimbing", "ga", "exhaustive")
BUNCH_CALCULATORS = ("basicmq", "turbomq", "turbomqw", "turbomqincr", "turbomqincrw")


# ---------------------------------------------------------------------------
# Dependencies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DependencyRecord:
    src: EntityId
    dest: EntityId
    counts: Mapping[str, int]

    def __post_init__(self):
        if not self.src or not self.dest:
            raise SchemaError("dependency endpoints must be non-empty names")
        if self.src == self.dest:
            raise SchemaError(f"self-dependency on {self.src!r}")
        for kind, value in self.counts.items():
            if kind not in _KIND_SET:
                raise SchemaError(f"unknown dependency kind {kind!r}")
            if value < 0:
                raise SchemaError(f"negative count for {kind} on {self.src}->{self.dest}")

    @property
    def total(self) -> int:
        return sum(self.counts.values())


@dataclass(frozen=True, eq=False)
class DependencyMatrix:
    """Symmetric, zero-diagonal weight matrix over canonically ordered entities."""

    entities: tuple[EntityId, ...]
    weights: np.ndarray

    def __post_init__(self):
        ents = tuple(self.entities)
        w = np.array(self.weights, dtype=float, copy=True)
        n = len(ents)
        if n < 1:
            raise InvariantError("a dependency matrix needs at least one entity")
        if list(ents) != sorted(set(ents)):
            raise InvariantError("entities must be unique and in sorted order")
        if w.shape != (n, n):
            raise InvariantError(f"weights shape {w.shape} does not match {n} entities")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InvariantError("weights must be finite and non-negative")
        if np.any(np.diag(w) != 0):
            raise InvariantError("diagonal must be zero")
        if not np.array_equal(w, w.T):
            raise InvariantError("weights must be symmetric")
        w.setflags(write=False)
        object.__setattr__(self, "entities", ents)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return len(self.entities)

    def index(self) -> dict[EntityId, int]:
        return {e: i for i, e in enumerate(self.entities)}

    def weight(self, a: EntityId, b: EntityId) -> float:
        idx = self.index()
        return float(self.weights[idx[a], idx[b]])

    def __eq__(self, other):
        if not isinstance(other, DependencyMatrix):
            return NotImplemented
        return self.entities == other.entities and np.array_equal(self.weights, other.weights)

    def restrict(self, keep: Iterable[EntityId]) -> "DependencyMatrix":
        keep = set(keep)
        idx = [i for i, e in enumerate(self.entities) if e in keep]
        return DependencyMatrix(
            tuple(self.entities[i] for i in idx), self.weights[np.ix_(idx, idx)]
        )


def _line_col_to_byte(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def parse_depends_output(text: Union[str, bytes]) -> list[DependencyRecord]:
    """Read a Depends JSON export into dependency records.

    Cells whose source and destination coincide are dropped with a warning.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = _line_col_to_byte(text, exc.pos)
        raise ParseError(f"malformed Depends JSON at byte {offset}: {exc.msg}", offset=offset) from None
    if not isinstance(doc, dict) or "variables" not in doc:
        raise SchemaError("Depends export must be an object with a 'variables' array")
    names = doc["variables"]
    cells = doc.get("cells", [])
    if not isinstance(names, list) or not isinstance(cells, list):
        raise SchemaError("'variables' and 'cells' must be arrays")
    records = []
    for k, cell in enumerate(cells):
        try:
            src, dest, values = cell["src"], cell["dest"], cell.get("values", {})
        except (TypeError, KeyError):
            raise SchemaError(f"cell {k} lacks src/dest") from None
        for idx in (src, dest):
            if not isinstance(idx, int) or not 0 <= idx < len(names):
                raise SchemaError(f"cell {k}: index {idx!r} out of range for {len(names)} variables")
        counts = {}
        for kind, value in values.items():
            if kind not in _KIND_SET:
                raise SchemaError(f"cell {k}: unknown dependency kind {kind!r}")
            if not isinstance(value, (int, float)) or value < 0 or value != int(value):
                raise SchemaError(f"cell {k}: {kind} count must be a non-negative integer, got {value!r}")
            counts[kind] = int(value)
        if src == dest:
            log.warning("dropping self-dependency on %s", names[src])
            continue
        records.append(DependencyRecord(str(names[src]), str(names[dest]), counts))
    return records


def depends_variables(text: Union[str, bytes]) -> list[EntityId]:
    """Entity names declared in a Depends export (including isolated ones)."""
    doc = json.loads(text)
    return [str(v) for v in doc.get("variables", [])]


def aggregate_dependencies(
    records: Iterable[DependencyRecord], universe: Iterable[EntityId]
) -> DependencyMatrix:
    """Sum all dependency kinds in both directions into a symmetric matrix."""
    entities = tuple(sorted(set(universe)))
    idx = {e: i for i, e in enumerate(entities)}
    w = np.zeros((len(entities), len(entities)))
    for rec in records:
        for end in (rec.src, rec.dest):
            if end not in idx:
                raise UnknownEntityError(f"dependency references unknown entity {end!r}")
        i, j = idx[rec.src], idx[rec.dest]
        t = rec.total
        w[i, j] += t
        w[j, i] += t
    return DependencyMatrix(entities, w)


def parse_mdg(text: str) -> DependencyMatrix:
    """Parse a Bunch-style MDG: ``src dest [weight]`` per line.

    A line with a single token declares an isolated entity; ``#`` starts a
    comment.
    """
    edges: dict[tuple[str, str], float] = {}
    names: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) == 1:
            names.add(parts[0])
            continue
        if len(parts) > 3:
            raise ParseError(f"line {lineno}: expected 'src dest [weight]'", line=lineno)
        src, dest = parts[0], parts[1]
        weight = 1.0
        if len(parts) == 3:
            try:
                weight = float(parts[2])
            except ValueError:
                raise ParseError(f"line {lineno}: non-numeric weight {parts[2]!r}", line=lineno) from None
            if not np.isfinite(weight):
                raise ParseError(f"line {lineno}: non-finite weight", line=lineno)
            if weight < 0:
                raise ValueError(f"line {lineno}: negative weight {weight}")
        names.update((src, dest))
        if src == dest:
            continue
        key = (min(src, dest), max(src, dest))
        edges[key] = edges.get(key, 0.0) + weight
    if not names:
        raise ParseError("MDG declares no entities", line=0)
    entities = tuple(sorted(names))
    idx = {e: i for i, e in enumerate(entities)}
    w = np.zeros((len(entities), len(entities)))
    for (a, b), weight in edges.items():
        w[idx[a], idx[b]] = w[idx[b], idx[a]] = weight
    return DependencyMatrix(entities, w)


def write_mdg(m: DependencyMatrix) -> str:
    lines = []
    connected = set()
    for i in range(m.n):
        for j in range(i + 1, m.n):
            weight = m.weights[i, j]
            if weight > 0:
                lines.append(f"{m.entities[i]} {m.entities[j]} {weight:g}")
                connected.update((i, j))
    lines.extend(m.entities[i] for i in range(m.n) if i not in connected)
    return "".join(line + "\n" for line in lines)


# ---------------------------------------------------------------------------
# Decompositions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Decomposition:
    """A flat partition of entities into labelled, non-empty clusters."""

    clusters: Mapping[str, frozenset]

    def __post_init__(self):
        frozen = {}
        seen: dict[EntityId, str] = {}
        for label, members in self.clusters.items():
            if not isinstance(label, str) or not label:
                raise InvariantError("cluster labels must be non-empty strings")
            members = frozenset(members)
            if not members:
                raise InvariantError(f"cluster {label!r} is empty")
            for e in members:
                if e in seen:
                    raise InvariantError(f"entity {e!r} is in both {seen[e]!r} and {label!r}")
                seen[e] = label
            frozen[label] = members
        object.__setattr__(self, "clusters", dict(sorted(frozen.items())))

    @classmethod
    def from_assignment(cls, assignment: Mapping[EntityId, str]) -> "Decomposition":
        groups: dict[str, set] = {}
        for entity, label in assignment.items():
            groups.setdefault(label, set()).add(entity)
        return cls(groups)

    @classmethod
    def from_groups(cls, groups: Iterable[Iterable[EntityId]], prefix: str = "c") -> "Decomposition":
        return cls({f"{prefix}{i}": frozenset(g) for i, g in enumerate(groups)})

    @property
    def entities(self) -> frozenset:
        return frozenset().union(*self.clusters.values()) if self.clusters else frozenset()

    def __len__(self):
        return len(self.clusters)

    def assignment(self) -> dict[EntityId, str]:
        return {e: label for label, members in self.clusters.items() for e in members}

    def restrict(self, keep: Iterable[EntityId]) -> "Decomposition":
        keep = set(keep)
        out = {}
        for label, members in self.clusters.items():
            sub = members & keep
            if sub:
                out[label] = sub
        return Decomposition(out)

    def blocks(self) -> frozenset:
        """Label-free view, for comparing partitions up to relabelling."""
        return frozenset(self.clusters.values())

    def to_json(self) -> dict:
        return {label: sorted(members) for label, members in self.clusters.items()}


def write_decomposition(d: Decomposition) -> str:
    rows = sorted((label, e) for label, members in d.clusters.items() for e in members)
    return "".join(f"{label}\t{e}\n" for label, e in rows)


def read_decomposition(text: str) -> Decomposition:
    assignment: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        parts = raw.split("\t")
        if len(parts) != 2:
            raise ParseError(f"line {lineno}: expected '<label>\\t<entity>'", line=lineno)
        label, entity = parts[0], parts[1]
        if not label:
            raise ParseError(f"line {lineno}: empty cluster label", line=lineno)
        if not entity:
            raise ParseError(f"line {lineno}: empty entity name", line=lineno)
        if entity in assignment and assignment[entity] != label:
            raise InvariantError(
                f"line {lineno}: entity {entity!r} already assigned to {assignment[entity]!r}"
            )
        assignment[entity] = label
    return Decomposition.from_assignment(assignment)


# ---------------------------------------------------------------------------
# Algorithm configurations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class HierarchicalConfig:
    distance: str
    linkage: str
    divisor: int

    def __post_init__(self):
        if self.distance not in DISTANCES:
            raise SchemaError(f"unknown distance {self.distance!r}")
        if self.linkage not in LINKAGES:
            raise SchemaError(f"unknown linkage {self.linkage!r}")
        if int(self.divisor) != self.divisor or self.divisor < 1:
            raise SchemaError(f"divisor must be a positive integer, got {self.divisor!r}")

    family = "hierarchical"

    @property
    def name(self) -> str:
        return f"{self.distance}_{self.linkage}_{self.divisor}"


@dataclass(frozen=True, order=True)
class BunchConfig:
    search: str
    calculator: str

    def __post_init__(self):
        if self.search not in BUNCH_SEARCHES:
            raise SchemaError(f"unknown bunch search {self.search!r}")
        if self.calculator not in BUNCH_CALCULATORS:
            raise SchemaError(f"unknown bunch calculator {self.calculator!r}")

    family = "bunch"

    @property
    def name(self) -> str:
        return f"{self.search}_{self.calculator}"


AlgorithmConfig = Union[HierarchicalConfig, BunchConfig]


def parse_config_name(name: str) -> AlgorithmConfig:
    parts = name.strip().lower().split("_")
    if len(parts) == 3:
        try:
            divisor = int(parts[2])
        except ValueError:
            raise SchemaError(f"bad divisor in {name!r}") from None
        return HierarchicalConfig(parts[0], parts[1], divisor)
    if len(parts) == 2:
        return BunchConfig(parts[0], parts[1])
    raise SchemaError(f"unrecognised configuration name {name!r}")


def expand_matrix(
    distances: Sequence[str] = DISTANCES,
    linkages: Sequence[str] = LINKAGES,
    divisors: Sequence[int] = DEFAULT_DIVISORS,
    searches: Sequence[str] = BUNCH_SEARCHES,
    calculators: Sequence[str] = BUNCH_CALCULATORS,
) -> list[AlgorithmConfig]:
    cells: list[AlgorithmConfig] = [
        HierarchicalConfig(d, l, k) for d in distances for l in linkages for k in divisors
    ]
    cells += [BunchConfig(s, c) for s in searches for c in calculators]
    return sorted(cells, key=lambda c: c.name)


@dataclass(frozen=True)
class RunResult:
    project: str
    release: str
    config: AlgorithmConfig
    mojofm: float
    decomposition: Decomposition
    seed: int
    wall_time_ms: int = 0
    extra: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.mojofm <= 100.0:
            raise InvariantError(f"mojofm {self.mojofm} outside [0, 100]")
        if self.wall_time_ms < 0:
            raise InvariantError("wall time must be non-negative")

    @property
    def key(self) -> tuple:
        return (self.project, self.release, self.config.name, self.seed)

    def to_json(self) -> dict:
        """Persistent form; wall time is kept out so stores are reproducible."""
        return {
            "project": self.project,
            "release": self.release,
            "config": self.config.name,
            "seed": self.seed,
            "mojofm": round(self.mojofm, 10),
            **{k: self.extra[k] for k in sorted(self.extra)},
            "decomposition": self.decomposition.to_json(),
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "RunResult":
        extra = {k: v for k, v in doc.items()
                 if k not in {"project", "release", "config", "seed", "mojofm", "decomposition"}}
        return cls(
            project=doc["project"],
            release=doc["release"],
            config=parse_config_name(doc["config"]),
            mojofm=float(doc["mojofm"]),
            decomposition=Decomposition({k: frozenset(v) for k, v in doc["decomposition"].items()}),
            seed=int(doc["seed"]),
            extra=extra,
        )


def read_path_list(text: str) -> list[str]:
    return [line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")]


def csv_text(rows: Sequence[Sequence], header: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()
