"""End-to-end orchestration: config parsing, the run matrix and its result store.

Config files are plain text. Top-level ``key = value`` lines set options and a
``[releases]`` section lists one release per line as whitespace-separated
columns ``project version depends metrics tree``. Paths are relative to the
config file. Releases of a project are evaluated in the order listed.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import re
import shlex
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import bunch, hclust
from .core import (
    BUNCH_CALCULATORS,
    BUNCH_SEARCHES,
    DEFAULT_DIVISORS,
    DISTANCES,
    LINKAGES,
    AlgorithmConfig,
    Decomposition,
    DependencyMatrix,
    HierarchicalConfig,
    RunResult,
    aggregate_dependencies,
    csv_text,
    depends_variables,
    expand_matrix,
    parse_depends_output,
    parse_mdg,
)
from .errors import CapacityError, RemodError, SchemaError, UsageError
from .features import ProjectFeatureVector, aggregate_metrics, parse_metrics_csv
from .groundtruth import DEFAULT_SUFFIXES, DEFAULT_WINDOW, ReleaseTree, reference_for
from .mojo import mojofm

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReleaseSpec:
    project: str
    version: str
    depends: Path
    metrics: Path
    tree: Path


@dataclass(frozen=True)
class ProjectSpec:
    name: str
    releases: tuple


_LIST_KEYS = {"distances", "linkages", "divisors", "bunch_searches", "bunch_calculators", "suffixes"}
_INT_KEYS = {
    "seed", "ground_truth_window", "cv_folds", "bunch_restarts", "bunch_population",
    "bunch_generations", "exhaustive_limit", "selection_population", "selection_generations",
    "selection_min_size", "selection_max_size", "selection_splits",
}
_FLOAT_KEYS = {"threshold", "bunch_crossover_rate", "bunch_mutation_rate", "selection_penalty"}
_STR_KEYS = {"out"}


@dataclass(frozen=True)
class PipelineConfig:
    projects: tuple
    distances: tuple = DISTANCES
    linkages: tuple = LINKAGES
    divisors: tuple = DEFAULT_DIVISORS
    bunch_searches: tuple = BUNCH_SEARCHES
    bunch_calculators: tuple = BUNCH_CALCULATORS
    ground_truth_window: int = DEFAULT_WINDOW
    threshold: float = 70.0
    seed: int = 0
    suffixes: tuple = DEFAULT_SUFFIXES
    cv_folds: int = 10
    bunch_restarts: int = 10
    bunch_population: int = 100
    bunch_generations: int = 200
    bunch_crossover_rate: float = 0.8
    bunch_mutation_rate: float = 0.004
    exhaustive_limit: int = 12
    selection_population: int = 50
    selection_generations: int = 60
    selection_min_size: int = 3
    selection_max_size: int = 12
    selection_penalty: float = 0.02
    selection_splits: int = 3
    out: Optional[Path] = None

    def __post_init__(self):
        if not self.projects:
            raise SchemaError("config lists no projects")
        if not self.matrix():
            raise SchemaError("the run matrix is empty")
        if self.ground_truth_window < 1:
            raise SchemaError("ground_truth_window must be at least 1")
        if self.seed < 0:
            raise SchemaError("seed must be non-negative")
        for p in self.projects:
            if len(p.releases) <= self.ground_truth_window:
                raise SchemaError(
                    f"project {p.name!r} has {len(p.releases)} releases; "
                    f"at least {self.ground_truth_window + 1} are needed for a window of {self.ground_truth_window}"
                )

    def matrix(self) -> list[AlgorithmConfig]:
        return expand_matrix(self.distances, self.linkages, self.divisors,
                             self.bunch_searches, self.bunch_calculators)

    def search_params(self, seed: int) -> bunch.SearchParams:
        return bunch.SearchParams(
            seed=seed,
            restarts=self.bunch_restarts,
            population=self.bunch_population,
            generations=self.bunch_generations,
            crossover_rate=self.bunch_crossover_rate,
            mutation_rate=self.bunch_mutation_rate,
            exhaustive_limit=self.exhaustive_limit,
        )

    def evaluated(self) -> list[tuple[ProjectSpec, int]]:
        """(project, release index) for every release with a full window of predecessors."""
        return [(p, i) for p in self.projects for i in range(self.ground_truth_window, len(p.releases))]

    def releases(self) -> list[ReleaseSpec]:
        return [r for p in self.projects for r in p.releases]


def _split_list(value: str) -> list[str]:
    return [v for v in re.split(r"[,\s]+", value.strip()) if v]


def _strip_comment(line: str) -> str:
    return re.sub(r"(^|\s)#.*$", "", line).strip()


def parse_config(text: str, base: Path | str = ".") -> PipelineConfig:
    base = Path(base)
    opts: dict = {}
    releases: dict[str, list[ReleaseSpec]] = {}
    seen = set()
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        m = re.fullmatch(r"\[(\w+)\]", line)
        if m:
            section = m.group(1).lower()
            if section != "releases":
                raise SchemaError(f"line {lineno}: unknown section [{section}]")
            continue
        if section == "releases":
            cols = shlex.split(line)
            if len(cols) != 5:
                raise SchemaError(f"line {lineno}: expected 'project version depends metrics tree', got {len(cols)} columns")
            project, version, dep, met, tree = cols
            if (project, version) in seen:
                raise SchemaError(f"line {lineno}: duplicate release {project} {version}")
            seen.add((project, version))
            releases.setdefault(project, []).append(
                ReleaseSpec(project, version, base / dep, base / met, base / tree))
            continue
        if "=" not in line:
            raise SchemaError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key not in _LIST_KEYS | _INT_KEYS | _FLOAT_KEYS | _STR_KEYS:
            raise SchemaError(f"line {lineno}: unknown option {key!r}")
        try:
            if key in _LIST_KEYS:
                items = _split_list(value)
                opts[key] = tuple(int(v) for v in items) if key == "divisors" else tuple(v.lower() if key != "suffixes" else v for v in items)
            elif key in _INT_KEYS:
                opts[key] = int(value)
            elif key in _FLOAT_KEYS:
                opts[key] = float(value)
            else:
                opts[key] = base / value
        except ValueError:
            raise SchemaError(f"line {lineno}: bad value for {key}: {value!r}") from None
    projects = tuple(ProjectSpec(name, tuple(rs)) for name, rs in releases.items())
    try:
        return PipelineConfig(projects=projects, **opts)
    except RemodError:
        raise
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(exc)) from None


def load_config(path) -> PipelineConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), path.parent)


# ---------------------------------------------------------------------------
# Input loading
# ---------------------------------------------------------------------------


def align_entities(names: Iterable[str], paths: Iterable[str]) -> dict[str, str]:
    """Map dependency-tool entity names onto release-relative file paths.

    A name matches a path when it equals it or ends with ``/`` + path; the
    longest matching path wins. Unmatched names are left out.
    """
    paths = set(paths)
    by_base: dict[str, list[str]] = {}
    for p in paths:
        by_base.setdefault(p.rsplit("/", 1)[-1], []).append(p)
    out = {}
    for name in names:
        n = name.replace("\\", "/")
        if n in paths:
            out[name] = n
            continue
        cands = [p for p in by_base.get(n.rsplit("/", 1)[-1], []) if n.endswith("/" + p)]
        if cands:
            out[name] = max(cands, key=lambda p: (len(p), p))
    return out


def load_tree(path: Path, release: str, suffixes: Sequence[str]) -> ReleaseTree:
    path = Path(path)
    if path.is_dir():
        return ReleaseTree.from_directory(release, path, suffixes)
    return ReleaseTree.from_path_list(release, path.read_text(encoding="utf-8"), suffixes)


def load_dependencies(path: Path, tree: Optional[ReleaseTree] = None) -> DependencyMatrix:
    """A Depends JSON export or an MDG file, with entities aligned to ``tree`` paths."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        records = parse_depends_output(text)
        names = set(depends_variables(text)) | {r.src for r in records} | {r.dest for r in records}
        if tree is None:
            return aggregate_dependencies(records, names)
        mapping = align_entities(names, tree.paths)
        dropped = len(names) - len(mapping)
        if dropped:
            log.warning("%s: %d entities do not match any file in the tree", path, dropped)
        kept = [replace(r, src=mapping[r.src], dest=mapping[r.dest])
                for r in records if r.src in mapping and r.dest in mapping]
        return aggregate_dependencies(kept, mapping.values())
    m = parse_mdg(text)
    if tree is None:
        return m
    mapping = align_entities(m.entities, tree.paths)
    sub = m.restrict([e for e in m.entities if e in mapping])
    order = sorted(range(sub.n), key=lambda i: mapping[sub.entities[i]])
    return DependencyMatrix(tuple(mapping[sub.entities[i]] for i in order),
                            np.asarray(sub.weights)[np.ix_(order, order)])


def load_features(spec: ReleaseSpec) -> ProjectFeatureVector:
    rows = parse_metrics_csv(Path(spec.metrics).read_text(encoding="utf-8"))
    return aggregate_metrics(rows, spec.project, spec.version)


# ---------------------------------------------------------------------------
# Result store
# ---------------------------------------------------------------------------


def _safe(s: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "-", s)


class ResultStore:
    """One JSON document per cell plus a CSV index, under ``root``."""

    INDEX = "index.csv"

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path_for(self, project: str, release: str, config: str, seed: int) -> Path:
        return self.root / f"{_safe(project)}__{_safe(release)}__{config}__{seed}.json"

    def has(self, project, release, config, seed) -> bool:
        p = self.path_for(project, release, config, seed)
        if not p.exists():
            return False
        try:
            json.loads(p.read_text(encoding="utf-8"))
        except (OSError, ValueError):
            log.warning("discarding unreadable result %s", p)
            return False
        return True

    def put(self, result: RunResult):
        p = self.path_for(*result.key)
        tmp = p.with_suffix(".tmp")
        tmp.write_text(json.dumps(result.to_json(), indent=1, sort_keys=True) + "\n", encoding="utf-8")
        tmp.replace(p)

    def get(self, project, release, config, seed) -> RunResult:
        return RunResult.from_json(json.loads(self.path_for(project, release, config, seed).read_text(encoding="utf-8")))

    def load_all(self) -> list[RunResult]:
        out = []
        for p in sorted(self.root.glob("*.json")):
            out.append(RunResult.from_json(json.loads(p.read_text(encoding="utf-8"))))
        return out

    def write_index(self) -> Path:
        rows = [[r.project, r.release, r.config.name, r.seed, repr(round(r.mojofm, 10)), self.path_for(*r.key).name]
                for r in sorted(self.load_all(), key=lambda r: r.key)]
        path = self.root / self.INDEX
        path.write_text(csv_text(rows, ["project", "release", "config", "seed", "mojofm", "file"]), encoding="utf-8")
        return path


# ---------------------------------------------------------------------------
# Run matrix
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Gap:
    project: str
    release: str
    stage: str
    config: str
    reason: str

    def row(self) -> list:
        return [self.project, self.release, self.stage, self.config, self.reason]


GAP_HEADER = ["project", "release", "stage", "config", "reason"]


def cell_seed(seed: int, project: str, release: str, config: str) -> int:
    """Independent random stream per matrix cell, derived from the master seed."""
    tag = zlib.crc32(f"{project}/{release}/{config}".encode("utf-8"))
    return int(np.random.SeedSequence([seed, tag]).generate_state(1, dtype=np.uint32)[0])


def evaluate(result: Decomposition, reference: Decomposition):
    """MoJoFM over the entities both decompositions cover."""
    shared = result.entities & reference.entities
    if not shared:
        raise UsageError("result and reference share no entities")
    return mojofm(result.restrict(shared), reference.restrict(shared)), len(shared)


def run_cell(m: DependencyMatrix, config: AlgorithmConfig, params: bunch.SearchParams) -> tuple[Decomposition, dict]:
    """Cluster one MDG with one configuration."""
    if isinstance(config, HierarchicalConfig):
        return hclust.cluster(m, config.distance, config.linkage, config.divisor), {}
    res = bunch.run_search(m, config.search, config.calculator, params)
    return res.partition.to_decomposition(m.entities), {"mq": round(res.mq, 12)}


@dataclass
class _ReleaseTask:
    spec: ReleaseSpec
    window: tuple
    configs: tuple
    cfg: PipelineConfig


@dataclass
class _ReleaseOutcome:
    results: list = field(default_factory=list)
    timings: list = field(default_factory=list)
    gaps: list = field(default_factory=list)


def _run_release(task: _ReleaseTask) -> _ReleaseOutcome:
    spec, cfg = task.spec, task.cfg
    out = _ReleaseOutcome()
    try:
        tree = load_tree(spec.tree, spec.version, cfg.suffixes)
        m = load_dependencies(spec.depends, tree)
        reference = reference_for([load_tree(w.tree, w.version, cfg.suffixes) for w in task.window])
    except (OSError, RemodError, ValueError) as exc:
        reason = f"{type(exc).__name__}: {exc}"
        out.gaps = [Gap(spec.project, spec.version, "input", c.name, reason) for c in task.configs]
        return out
    dendrograms = {}
    for config in task.configs:
        t0 = time.perf_counter()
        try:
            if isinstance(config, HierarchicalConfig):
                key = (config.distance, config.linkage)
                if key not in dendrograms:
                    dendrograms[key] = hclust.agglomerate(hclust.distance_matrix(m, config.distance), config.linkage)
                decomp, extra = hclust.cut(dendrograms[key], m.entities, config.divisor), {}
            else:
                params = cfg.search_params(cell_seed(cfg.seed, spec.project, spec.version, config.name))
                decomp, extra = run_cell(m, config, params)
            report, shared = evaluate(decomp, reference)
        except (CapacityError, UsageError) as exc:
            out.gaps.append(Gap(spec.project, spec.version, "cluster", config.name, f"{type(exc).__name__}: {exc}"))
            continue
        ms = int(round((time.perf_counter() - t0) * 1000))
        extra = {**extra, "mno": report.mno, "max_mno": report.max_mno, "entities": m.n,
                 "evaluated_entities": shared, "clusters": len(decomp.clusters)}
        out.results.append(RunResult(spec.project, spec.version, config, report.mojofm, decomp,
                                     cfg.seed, wall_time_ms=ms, extra=extra))
        out.timings.append([spec.project, spec.version, config.name, ms])
    return out


@dataclass
class MatrixReport:
    computed: int
    skipped: int
    gaps: list

    @property
    def complete(self) -> bool:
        return not self.gaps


def _map(fn, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def run_matrix(cfg: PipelineConfig, store: ResultStore, jobs: int = 1, timings_path: Optional[Path] = None) -> MatrixReport:
    """Cluster and score every (project, evaluated release, config) cell.

    Cells already in ``store`` are skipped. Failures become gaps while the
    remaining cells still run.
    """
    configs = cfg.matrix()
    tasks, skipped = [], 0
    for project, idx in cfg.evaluated():
        spec = project.releases[idx]
        todo = tuple(c for c in configs if not store.has(spec.project, spec.version, c.name, cfg.seed))
        skipped += len(configs) - len(todo)
        if todo:
            window = tuple(project.releases[i] for i in range(idx - cfg.ground_truth_window, idx))
            tasks.append(_ReleaseTask(spec, window, todo, cfg))
    computed, gaps, timings = 0, [], []
    for outcome in _map(_run_release, tasks, jobs):
        for r in outcome.results:
            store.put(r)
        computed += len(outcome.results)
        gaps.extend(outcome.gaps)
        timings.extend(outcome.timings)
    store.write_index()
    if timings_path is not None and timings:
        timings_path = Path(timings_path)
        new = not timings_path.exists()
        with timings_path.open("a", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if new:
                w.writerow(["project", "release", "config", "wall_time_ms"])
            w.writerows(timings)
    log.info("run matrix: %d computed, %d already stored, %d gaps", computed, skipped, len(gaps))
    return MatrixReport(computed, skipped, gaps)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Stability:
    config: str
    releases: int
    mean: float
    std: float


def stability_report(results: Sequence[RunResult], config: str) -> Stability:
    """Mean and population standard deviation of MoJoFM across releases."""
    values = [r.mojofm for r in results if r.config.name == config]
    if len(values) < 2:
        raise UsageError(f"stability of {config} needs at least two evaluated releases, got {len(values)}")
    v = np.array(values, dtype=float)
    return Stability(config, len(v), float(v.mean()), float(np.sqrt(np.mean((v - v.mean()) ** 2))))


def stability_csv(results: Sequence[RunResult]) -> str:
    groups: dict[tuple, list] = {}
    for r in results:
        groups.setdefault((r.project, r.config.name), []).append(r)
    rows = []
    for (project, config), rs in sorted(groups.items()):
        if len(rs) < 2:
            continue
        s = stability_report(rs, config)
        rows.append([project, config, s.releases, f"{s.mean:.4f}", f"{s.std:.4f}"])
    return csv_text(rows, ["project", "config", "releases", "mean_mojofm", "std_mojofm"])


def gaps_csv(gaps: Sequence[Gap]) -> str:
    return csv_text([g.row() for g in sorted(gaps, key=lambda g: g.row())], GAP_HEADER)


def read_gaps_csv(text: str) -> list[Gap]:
    reader = csv.reader(io.StringIO(text))
    next(reader, None)
    return [Gap(*row) for row in reader if row]


__all__ = [
    "Gap", "MatrixReport", "PipelineConfig", "ProjectSpec", "ReleaseSpec", "ResultStore", "Stability",
    "align_entities", "cell_seed", "evaluate", "gaps_csv", "load_config", "load_dependencies",
    "load_features", "load_tree", "parse_config", "read_gaps_csv", "run_cell", "run_matrix",
    "stability_csv", "stability_report",
]
