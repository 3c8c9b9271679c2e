"""Agglomerative hierarchical clustering over dependency rows.

Each entity is described by its full row of the dependency matrix; rows are
compared with Euclidean, Manhattan or cosine distance and merged bottom-up
under single, average (UPGMA) or complete linkage. The dendrogram is cut to
``max(1, N // divisor)`` clusters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import DISTANCES, LINKAGES, Decomposition, DependencyMatrix, EntityId
from .errors import InvariantError, UsageError


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    entities: tuple[EntityId, ...]
    d: np.ndarray

    def __post_init__(self):
        d = np.array(self.d, dtype=float, copy=True)
        n = len(self.entities)
        if d.shape != (n, n):
            raise InvariantError("distance matrix shape mismatch")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise InvariantError("distances must be finite and non-negative")
        if np.any(np.diag(d) != 0) or not np.array_equal(d, d.T):
            raise InvariantError("distances must be symmetric with a zero diagonal")
        d.setflags(write=False)
        object.__setattr__(self, "entities", tuple(self.entities))
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return len(self.entities)


def distance_matrix(m: DependencyMatrix, metric: str) -> DistanceMatrix:
    x = np.asarray(m.weights, dtype=float)
    n = x.shape[0]
    if metric == "euclidean":
        d = np.empty((n, n))
        for i in range(n):
            d[i] = np.sqrt(np.sum((x - x[i]) ** 2, axis=1))
    elif metric == "manhattan":
        d = np.empty((n, n))
        for i in range(n):
            d[i] = np.sum(np.abs(x - x[i]), axis=1)
    elif metric == "cosine":
        norm = np.sqrt(np.sum(x * x, axis=1))
        denom = norm[:, None] * norm[None, :]
        with np.errstate(invalid="ignore", divide="ignore"):
            sim = np.where(denom > 0, (x @ x.T) / np.where(denom > 0, denom, 1.0), 0.0)
        d = 1.0 - np.clip(sim, -1.0, 1.0)
        d = np.maximum(d, 0.0)
    else:
        raise UsageError(f"unknown distance metric {metric!r}; expected one of {DISTANCES}")
    d = (d + d.T) / 2.0
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(m.entities, d)


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    height: float
    node: int


@dataclass(frozen=True)
class Dendrogram:
    n_leaves: int
    merges: tuple[Merge, ...]

    def to_tsv(self) -> str:
        lines = ["left\tright\theight\tnode\n"]
        lines += [f"{m.left}\t{m.right}\t{m.height!r}\t{m.node}\n" for m in self.merges]
        return "".join(lines)


def agglomerate(dm: DistanceMatrix, linkage: str) -> Dendrogram:
    """Bottom-up merging with Lance-Williams updates.

    The closest active pair is merged first; exact ties go to the pair with
    the smallest ``(lower node id, higher node id)``. The merged cluster gets
    node id ``N + step``.
    """
    if linkage not in LINKAGES:
        raise UsageError(f"unknown linkage {linkage!r}; expected one of {LINKAGES}")
    n = dm.n
    if n == 0:
        raise UsageError("cannot cluster an empty distance matrix")
    d = np.array(dm.d, dtype=float)
    np.fill_diagonal(d, np.inf)
    node_of = np.arange(n)  # slot -> current node id
    size = np.ones(n)
    active = np.ones(n, dtype=bool)
    merges = []
    for step in range(n - 1):
        live = np.flatnonzero(active)
        sub = d[np.ix_(live, live)]
        best = sub.min()
        ii, jj = np.nonzero(sub == best)
        # pick the lexicographically smallest node-id pair among exact ties
        a_nodes = node_of[live[ii]]
        b_nodes = node_of[live[jj]]
        lo, hi = np.minimum(a_nodes, b_nodes), np.maximum(a_nodes, b_nodes)
        k = np.lexsort((hi, lo))[0]
        si, sj = live[ii[k]], live[jj[k]]
        left, right = int(min(node_of[si], node_of[sj])), int(max(node_of[si], node_of[sj]))
        merges.append(Merge(left, right, float(best), n + step))

        di, dj = d[si], d[sj]
        if linkage == "single":
            new = np.minimum(di, dj)
        elif linkage == "complete":
            new = np.maximum(di, dj)
        else:
            new = (size[si] * di + size[sj] * dj) / (size[si] + size[sj])
        # slot si now holds the merged cluster; sj is retired
        d[si, :] = new
        d[:, si] = new
        d[si, si] = np.inf
        d[sj, :] = np.inf
        d[:, sj] = np.inf
        size[si] += size[sj]
        active[sj] = False
        node_of[si] = n + step
    return Dendrogram(n, tuple(merges))


def cut_count(n_entities: int, divisor: int) -> int:
    if divisor < 1:
        raise UsageError("divisor must be at least 1")
    return max(1, n_entities // divisor)


def cut_k(dendrogram: Dendrogram, k: int) -> list[list[int]]:
    """Leaf-index groups obtained by undoing the last ``k - 1`` merges."""
    n = dendrogram.n_leaves
    k = min(max(k, 1), n)
    parent = list(range(2 * n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for m in dendrogram.merges[: n - k]:
        parent[find(m.left)] = m.node
        parent[find(m.right)] = m.node
    groups: dict[int, list[int]] = {}
    for leaf in range(n):
        groups.setdefault(find(leaf), []).append(leaf)
    return sorted(groups.values(), key=lambda g: g[0])


def cut(dendrogram: Dendrogram, entities: Sequence[EntityId], divisor: int) -> Decomposition:
    """Cut to ``max(1, N // divisor)`` clusters.

    Clusters are labelled ``c0, c1, ...`` in order of their smallest member.
    """
    if len(entities) != dendrogram.n_leaves:
        raise UsageError("entity list does not match the dendrogram")
    groups = cut_k(dendrogram, cut_count(len(entities), divisor))
    return Decomposition({f"c{i}": frozenset(entities[j] for j in g) for i, g in enumerate(groups)})


def cluster(m: DependencyMatrix, distance: str, linkage: str, divisor: int) -> Decomposition:
    dm = distance_matrix(m, distance)
    return cut(agglomerate(dm, linkage), m.entities, divisor)
