"""MoJo distance and MoJoFM.

``mno(A, B)`` is the minimum number of Move and Join operations turning the
partition ``A`` into the reference ``B``. Every cluster ``A_i`` is tagged
with a reference cluster it overlaps most; objects outside that tag are
moved and clusters sharing a tag are joined. Choosing tags so that as many
distinct reference clusters as possible are used is a maximum bipartite
matching, which makes the count exact::

    mno(A, B) = sum_i (|A_i| - max_j |A_i & B_j|) + (m - matching size)

The MoJoFM denominator has the closed form
``n - min_k (k + b_{k+1})`` over the reference sizes sorted in decreasing
order (with ``b_{l+1} = 0``).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache

from .core import Decomposition
from .errors import CapacityError, UniverseError

ORACLE_LIMIT = 8


@dataclass(frozen=True)
class MojoReport:
    mno: int
    max_mno: int
    mojofm: float

    def to_json(self, **context) -> dict:
        return {**context, "mno": self.mno, "max_mno": self.max_mno, "mojofm": self.mojofm}


def _check_universe(a: Decomposition, b: Decomposition):
    ea, eb = a.entities, b.entities
    if ea != eb:
        raise UniverseError(ea - eb, eb - ea)


def _max_matching(adj: list[list[int]], n_right: int) -> int:
    match_right = [-1] * n_right

    def augment(u, seen):
        for v in adj[u]:
            if v in seen:
                continue
            seen.add(v)
            if match_right[v] < 0 or augment(match_right[v], seen):
                match_right[v] = u
                return True
        return False

    return sum(1 for u in range(len(adj)) if augment(u, set()))


def mno(a: Decomposition, b: Decomposition) -> int:
    _check_universe(a, b)
    b_index = {label: j for j, label in enumerate(b.clusters)}
    tag = {e: b_index[label] for e, label in b.assignment().items()}
    moves = 0
    adj = []
    for members in a.clusters.values():
        counts: dict[int, int] = {}
        for e in members:
            counts[tag[e]] = counts.get(tag[e], 0) + 1
        best = max(counts.values())
        moves += len(members) - best
        adj.append(sorted(j for j, c in counts.items() if c == best))
    joins = len(adj) - _max_matching(adj, len(b_index))
    return moves + joins


def max_mno(b: Decomposition) -> int:
    sizes = sorted((len(c) for c in b.clusters.values()), reverse=True) + [0]
    n = sum(sizes)
    return n - min(k + sizes[k] for k in range(len(sizes)))


def mojofm(a: Decomposition, b: Decomposition) -> MojoReport:
    """MoJoFM of result ``a`` against reference ``b`` in percent.

    A single-entity universe has no possible error and scores 100.
    """
    moves = mno(a, b)
    worst = max_mno(b)
    if worst == 0:
        return MojoReport(moves, 0, 100.0)
    score = (1.0 - moves / worst) * 100.0
    return MojoReport(moves, worst, min(100.0, max(0.0, score)))


# ---------------------------------------------------------------------------
# Exhaustive oracle
# ---------------------------------------------------------------------------


def _canon(blocks) -> tuple:
    return tuple(sorted(tuple(sorted(b)) for b in blocks if b))


def _neighbours(state: tuple) -> set:
    blocks = [frozenset(b) for b in state]
    out = set()
    for i, blk in enumerate(blocks):
        rest = blocks[:i] + blocks[i + 1:]
        for x in blk:
            remain = blk - {x}
            base = rest + ([remain] if remain else [])
            if remain:
                out.add(_canon(base + [frozenset({x})]))
            for j, other in enumerate(rest):
                moved = rest[:j] + [other | {x}] + rest[j + 1:] + ([remain] if remain else [])
                out.add(_canon(moved))
    for i in range(len(blocks)):
        for j in range(i + 1, len(blocks)):
            joined = [blk for k, blk in enumerate(blocks) if k not in (i, j)] + [blocks[i] | blocks[j]]
            out.add(_canon(joined))
    out.discard(state)
    return out


@lru_cache(maxsize=16)
def _graph(n: int) -> dict:
    """Move/Join adjacency over all partitions of ``range(n)``."""
    start = _canon([[i] for i in range(n)])
    graph, todo = {}, [start]
    while todo:
        s = todo.pop()
        if s in graph:
            continue
        graph[s] = tuple(sorted(_neighbours(s)))
        todo.extend(t for t in graph[s] if t not in graph)
    return graph


def _encode(d: Decomposition, index: dict) -> tuple:
    return _canon([[index[e] for e in members] for members in d.clusters.values()])


def mno_oracle(a: Decomposition, b: Decomposition) -> int:
    """Shortest Move/Join path from ``a`` to ``b`` by breadth-first search."""
    _check_universe(a, b)
    universe = sorted(a.entities)
    if len(universe) > ORACLE_LIMIT:
        raise CapacityError(f"oracle limited to {ORACLE_LIMIT} entities, got {len(universe)}")
    index = {e: i for i, e in enumerate(universe)}
    src, dst = _encode(a, index), _encode(b, index)
    if src == dst:
        return 0
    graph = _graph(len(universe))
    dist = {src: 0}
    queue = deque([src])
    while queue:
        s = queue.popleft()
        for t in graph[s]:
            if t not in dist:
                dist[t] = dist[s] + 1
                if t == dst:
                    return dist[t]
                queue.append(t)
    raise AssertionError("partition graph is connected; unreachable")


def all_partitions(universe) -> list[Decomposition]:
    """Every partition of a small universe (Bell-number many)."""
    items = sorted(universe)
    if len(items) > ORACLE_LIMIT:
        raise CapacityError(f"enumeration limited to {ORACLE_LIMIT} entities")
    graph = _graph(len(items))
    return [Decomposition.from_groups([[items[i] for i in blk] for blk in state]) for state in graph]
