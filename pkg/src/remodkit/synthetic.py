"""Synthetic multi-release corpus for smoke tests and demos.

Each project is a set of Java-like files spread over packages. Releases
evolve by adding and occasionally removing files. Dependencies are dense
inside packages and sparse across them, except for projects flagged
``noisy`` whose dependencies ignore the package layout entirely; no
clustering configuration recovers such a project, which plants a region of
the instance space where nothing is predicted good. Class metrics are
derived from the dependency graph plus a project-specific profile.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import DEPENDENCY_KINDS, csv_text
from .features import CK_CLASS_METRICS


@dataclass(frozen=True)
class ProjectProfile:
    name: str
    packages: int
    classes_per_package: int
    p_intra: float
    p_inter: float
    noisy: bool = False
    size_scale: float = 1.0


DEFAULT_PROFILES = (
    ProjectProfile("alpha", packages=6, classes_per_package=8, p_intra=0.55, p_inter=0.01, size_scale=1.0),
    ProjectProfile("beta", packages=4, classes_per_package=11, p_intra=0.35, p_inter=0.03, size_scale=2.5),
    ProjectProfile("gamma", packages=5, classes_per_package=9, p_intra=0.08, p_inter=0.08, noisy=True,
                   size_scale=5.0),
)

SYNTH_CONFIG_OPTIONS = {
    "divisors": "5 7 10 15 20 25",
    "bunch_searches": "hillclimbing ga",
    "bunch_calculators": "basicmq turbomq turbomqw turbomqincr turbomqincrw",
    "bunch_restarts": "3",
    "bunch_population": "30",
    "bunch_generations": "40",
    "bunch_mutation_rate": "0.02",
    "selection_population": "30",
    "selection_generations": "25",
}


class _Project:
    def __init__(self, profile: ProjectProfile, rng: np.random.Generator):
        self.profile = profile
        self.rng = rng
        self.counter = 0
        self.files: dict[str, int] = {}       # path -> package index
        self.edges: dict[tuple, dict] = {}    # (src, dest) -> kind counts
        for pkg in range(profile.packages):
            for _ in range(profile.classes_per_package):
                self._add(pkg)
        self.traits = {m: float(rng.lognormal(0.0, 0.6)) * profile.size_scale for m in CK_CLASS_METRICS}

    def _path(self, pkg: int) -> str:
        self.counter += 1
        return f"src/main/java/org/{self.profile.name}/pkg{pkg}/Class{self.counter:03d}.java"

    def _kinds(self) -> dict:
        kinds = self.rng.choice(len(DEPENDENCY_KINDS), size=int(self.rng.integers(1, 4)), replace=False)
        return {DEPENDENCY_KINDS[k]: int(self.rng.integers(1, 6)) for k in sorted(kinds)}

    def _add(self, pkg: int):
        new = self._path(pkg)
        p = self.profile
        for other, opkg in list(self.files.items()):
            prob = p.p_intra if (opkg == pkg and not p.noisy) else p.p_inter
            if self.rng.random() < prob:
                pair = (new, other) if self.rng.random() < 0.5 else (other, new)
                self.edges[pair] = self._kinds()
        self.files[new] = pkg

    def _remove(self, path: str):
        del self.files[path]
        self.edges = {k: v for k, v in self.edges.items() if path not in k}

    def evolve(self):
        for _ in range(int(self.rng.integers(1, 3))):
            self._add(int(self.rng.integers(0, self.profile.packages)))
        if self.rng.random() < 0.4 and len(self.files) > 10:
            victims = sorted(self.files)
            self._remove(victims[int(self.rng.integers(0, len(victims)))])

    def depends_json(self, prefix: str) -> str:
        names = sorted(self.files)
        idx = {n: i for i, n in enumerate(names)}
        cells = [{"src": idx[s], "dest": idx[d], "values": v} for (s, d), v in sorted(self.edges.items())]
        doc = {"schemaVersion": "1.0", "name": self.profile.name,
               "variables": [f"{prefix}/{n}" for n in names], "cells": cells}
        return json.dumps(doc, indent=1) + "\n"

    def tree_text(self) -> str:
        extras = [f"src/main/resources/{self.profile.name}.properties", "README.md"]
        return "\n".join(sorted(list(self.files) + extras)) + "\n"

    def metrics_csv(self) -> str:
        names = sorted(self.files)
        degree = {n: 0 for n in names}
        weight = {n: 0 for n in names}
        for (s, d), v in self.edges.items():
            total = sum(v.values())
            for e in (s, d):
                degree[e] += 1
                weight[e] += total
        rows = []
        for n in names:
            cls = n[len("src/main/java/"):-len(".java")].replace("/", ".")
            vals = []
            for m in CK_CLASS_METRICS:
                base = self.traits[m]
                if m == "cbo":
                    v = degree[n]
                elif m == "rfc":
                    v = weight[n] + self.rng.poisson(3 * base)
                elif m in ("tcc", "lcc"):
                    v = round(float(self.rng.beta(2, 2)), 4)
                else:
                    v = int(self.rng.poisson(5 * base))
                vals.append(v)
            rows.append([n, cls, "class", *vals])
        return csv_text(rows, ["file", "class", "type", *CK_CLASS_METRICS])


def generate_corpus(out_dir, seed: int = 0, releases: int = 12, window: int = 3,
                    profiles=DEFAULT_PROFILES, options: dict | None = None) -> Path:
    """Write the corpus under ``out_dir`` and return the path of its pipeline config."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for k, prof in enumerate(profiles):
        proj = _Project(prof, np.random.default_rng([seed, k]))
        for r in range(releases):
            if r:
                proj.evolve()
            version = f"1.{r}.0"
            rel = Path(prof.name) / version
            (out / rel).mkdir(parents=True, exist_ok=True)
            (out / rel / "depends.json").write_text(
                proj.depends_json(f"/work/{prof.name}-{version}"), encoding="utf-8")
            (out / rel / "tree.txt").write_text(proj.tree_text(), encoding="utf-8")
            (out / rel / "metrics.csv").write_text(proj.metrics_csv(), encoding="utf-8")
            rows.append(f"{prof.name} {version} {rel.as_posix()}/depends.json "
                        f"{rel.as_posix()}/metrics.csv {rel.as_posix()}/tree.txt")
    opts = {"seed": str(seed), "threshold": "70", "ground_truth_window": str(window),
            **SYNTH_CONFIG_OPTIONS, **(options or {})}
    lines = ["# synthetic remodkit corpus", *(f"{k} = {v}" for k, v in opts.items()), "", "[releases]",
             "# project version depends metrics tree", *rows]
    cfg = out / "pipeline.cfg"
    cfg.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return cfg
