"""Slow, independent reference implementations used only by the tests."""

from __future__ import annotations

import itertools
from collections import deque

import numpy as np


# -- partitions ---------------------------------------------------------------


def set_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for p in set_partitions(rest):
        for i in range(len(p)):
            yield p[:i] + [p[i] | {first}] + p[i + 1:]
        yield p + [frozenset({first})]


def canon(p):
    return frozenset(frozenset(c) for c in p if c)


def random_partition(items, rng):
    items = list(items)
    k = int(rng.integers(1, len(items) + 1))
    labels = rng.integers(0, k, size=len(items))
    groups = {}
    for e, c in zip(items, labels):
        groups.setdefault(int(c), set()).add(e)
    return [frozenset(g) for g in groups.values()]


# -- MoJo -----------------------------------------------------------------------


def _neighbours(p):
    cl = list(p)
    out = set()
    for i, c in enumerate(cl):
        rest = [d for k, d in enumerate(cl) if k != i]
        for x in c:
            rem = c - {x}
            base = rest + ([rem] if rem else [])
            out.add(canon(base + [frozenset({x})]))
            for j, d in enumerate(rest):
                out.add(canon(rest[:j] + [d | {x}] + rest[j + 1:] + ([rem] if rem else [])))
    for i, j in itertools.combinations(range(len(cl)), 2):
        out.add(canon([d for k, d in enumerate(cl) if k not in (i, j)] + [cl[i] | cl[j]]))
    out.discard(p)
    return out


def bfs_mno(a, b):
    a, b = canon(a), canon(b)
    dist = {a: 0}
    q = deque([a])
    while q:
        p = q.popleft()
        if p == b:
            return dist[p]
        for nb in _neighbours(p):
            if nb not in dist:
                dist[nb] = dist[p] + 1
                q.append(nb)
    raise AssertionError("unreachable")


# -- MQ ---------------------------------------------------------------------------


def mq_reference(w, labels, family, weighted):
    """Edge-loop MQ, independent of the matrix formulation."""
    n = len(labels)
    labels = list(labels)
    cl = sorted(set(labels))

    def wt(i, j):
        v = w[i][j]
        return v if weighted else (1.0 if v > 0 else 0.0)

    if family == "turbo":
        tot = 0.0
        for c in cl:
            mu = ext = 0.0
            for i in range(n):
                for j in range(i + 1, n):
                    e = wt(i, j)
                    if not e:
                        continue
                    ci, cj = labels[i] == c, labels[j] == c
                    if ci and cj:
                        mu += e
                    elif ci or cj:
                        ext += e
            tot += 0.0 if mu == 0 else 2 * mu / (2 * mu + ext)
        return tot
    size = {c: labels.count(c) for c in cl}
    k = len(cl)
    dens = []
    for c in cl:
        intra = sum(wt(i, j) for i in range(n) for j in range(i + 1, n) if labels[i] == c and labels[j] == c)
        pairs = size[c] * (size[c] - 1) / 2
        dens.append(intra / pairs if pairs else 0.0)
    if k == 1:
        return dens[0]
    inter = 0.0
    for a in range(k):
        for b in range(a + 1, k):
            ca, cb = cl[a], cl[b]
            e = sum(wt(i, j) for i in range(n) for j in range(n) if labels[i] == ca and labels[j] == cb)
            inter += e / (size[ca] * size[cb])
    return sum(dens) / k - inter / (k * (k - 1) / 2)


def rgs_partitions(n):
    """Every partition of range(n) as a label list."""
    for p in set_partitions(range(n)):
        labels = [0] * n
        for c, block in enumerate(p):
            for i in block:
                labels[i] = c
        yield labels


# -- hierarchical clustering --------------------------------------------------


def naive_agglomerate(d, linkage):
    """Recompute every inter-cluster distance from scratch at each step."""
    n = len(d)
    clusters = {i: [i] for i in range(n)}
    merges = []
    for step in range(n - 1):
        best = None
        ids = sorted(clusters)
        for a_i, a in enumerate(ids):
            for b in ids[a_i + 1:]:
                vals = [d[x][y] for x in clusters[a] for y in clusters[b]]
                if linkage == "single":
                    v = min(vals)
                elif linkage == "complete":
                    v = max(vals)
                else:
                    v = sum(vals) / len(vals)
                key = (v, a, b)
                if best is None or key < best:
                    best = key
        v, a, b = best
        new = n + step
        clusters[new] = clusters.pop(a) + clusters.pop(b)
        merges.append((a, b, v, new))
    return merges


def mst_weights(d):
    """Prim's algorithm; sorted edge weights of a minimum spanning tree."""
    d = np.asarray(d, dtype=float)
    n = len(d)
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = d[0].copy()
    out = []
    for _ in range(n - 1):
        cand = np.where(in_tree, np.inf, best)
        j = int(np.argmin(cand))
        out.append(float(cand[j]))
        in_tree[j] = True
        best = np.minimum(best, d[j])
    return sorted(out)


def random_distance_matrix(n, rng, integer=False):
    pts = rng.random((n, 3))
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    if integer:
        d = np.round(d * 10)
    np.fill_diagonal(d, 0.0)
    return (d + d.T) / 2
