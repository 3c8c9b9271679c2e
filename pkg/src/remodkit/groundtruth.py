"""Reference decompositions built from directory structure shared by releases."""

from __future__ import annotations

import logging
import os
import posixpath
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .core import Decomposition
from .errors import InvariantError, UsageError

log = logging.getLogger(__name__)

ROOT_LABEL = "<root>"
DEFAULT_SUFFIXES = (".java",)
DEFAULT_WINDOW = 10


def normalise_path(path: str) -> str:
    p = path.replace("\\", "/").strip()
    p = posixpath.normpath(p).lstrip("/")
    if p in ("", ".") or p.startswith("../") or p == "..":
        raise ValueError(f"not a relative file path: {path!r}")
    return p


@dataclass(frozen=True)
class ReleaseTree:
    release: str
    paths: frozenset

    def __post_init__(self):
        object.__setattr__(self, "paths", frozenset(normalise_path(p) for p in self.paths))

    @classmethod
    def from_directory(cls, release: str, root, suffixes: Sequence[str] = DEFAULT_SUFFIXES) -> "ReleaseTree":
        root = Path(root)
        paths = []
        for dirpath, dirnames, filenames in os.walk(root):
            dirnames.sort()
            for fn in filenames:
                if _keep(fn, suffixes):
                    paths.append(Path(dirpath, fn).relative_to(root).as_posix())
        return cls(release, frozenset(paths))

    @classmethod
    def from_path_list(cls, release: str, text: str, suffixes: Sequence[str] = DEFAULT_SUFFIXES) -> "ReleaseTree":
        lines = (ln.strip() for ln in text.splitlines())
        return cls(release, frozenset(ln for ln in lines if ln and not ln.startswith("#") and _keep(ln, suffixes)))


def _keep(name: str, suffixes: Sequence[str]) -> bool:
    return not suffixes or name.endswith(tuple(suffixes))


def common_paths(trees: Sequence[ReleaseTree]) -> frozenset:
    if not trees:
        raise UsageError("common_paths needs at least one release tree")
    out = set(trees[0].paths)
    for t in trees[1:]:
        out &= t.paths
    return frozenset(out)


@dataclass(frozen=True)
class NestedDecomposition:
    """Directory forest over the retained files.

    Nodes are identified by their full relative path so that equally named
    directories in different places stay distinct. (``contains`` holds
    directory-to-directory edges; ``leaves`` maps each directory that holds
    files to those files.)
    """

    contains: frozenset
    leaves: dict

    def __post_init__(self):
        parent = {}
        for p, c in self.contains:
            if c in parent and parent[c] != p:
                raise InvariantError(f"{c!r} has two parents")
            parent[c] = p
        for start in parent:
            seen = {start}
            node = start
            while node in parent:
                node = parent[node]
                if node in seen:
                    raise InvariantError(f"cycle through {node!r}")
                seen.add(node)
        for leaf, files in self.leaves.items():
            if not files:
                raise InvariantError(f"directory {leaf!r} holds no files")

    @property
    def roots(self) -> set:
        children = {c for _, c in self.contains}
        nodes = {p for p, _ in self.contains} | children | set(self.leaves)
        return nodes - children

    @property
    def files(self) -> frozenset:
        return frozenset().union(*self.leaves.values()) if self.leaves else frozenset()

    def named_pairs(self) -> set:
        """``(parent, child)`` pairs by base name, files included."""
        pairs = {(_base(p), _base(c)) for p, c in self.contains}
        for d, files in self.leaves.items():
            pairs |= {(_base(d), _base(f)) for f in files}
        return pairs


def _base(path: str) -> str:
    return path.rsplit("/", 1)[-1]


def build_reference(paths: Iterable[str]) -> NestedDecomposition:
    paths = sorted({normalise_path(p) for p in paths})
    if not paths:
        raise UsageError("build_reference needs at least one path")
    contains = set()
    leaves: dict[str, set] = {}
    for path in paths:
        parts = path.split("/")
        if len(parts) == 1:
            log.warning("file %s has no directory; placing it under %s", path, ROOT_LABEL)
            leaves.setdefault(ROOT_LABEL, set()).add(path)
            continue
        dirs = ["/".join(parts[: i + 1]) for i in range(len(parts) - 1)]
        contains.update(zip(dirs, dirs[1:]))
        leaves.setdefault(dirs[-1], set()).add(path)
    return NestedDecomposition(frozenset(contains), {k: frozenset(v) for k, v in sorted(leaves.items())})


def flatten(n: NestedDecomposition) -> Decomposition:
    """Assign each file to its immediate parent directory (full-path label)."""
    return Decomposition(dict(n.leaves))


def reference_for(trees: Sequence[ReleaseTree]) -> Decomposition:
    return flatten(build_reference(common_paths(trees)))


def release_window(releases: Sequence[str], target: int, window: int = DEFAULT_WINDOW) -> list[int]:
    """Indices of the ``window`` releases immediately preceding ``target``."""
    if window < 1:
        raise UsageError("window must be at least 1")
    if target < window:
        raise UsageError(
            f"release {releases[target]!r} has only {target} predecessors, {window} required"
        )
    return list(range(target - window, target))
