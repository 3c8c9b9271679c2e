"""Search-based MDG partitioning in the style of the Bunch tool.

Fitness is Modularisation Quality (MQ). Two families are provided:

* BasicMQ: mean intra-cluster edge density minus mean inter-cluster edge
  density, over binarised edges.
* TurboMQ: sum of per-cluster factors ``2 mu / (2 mu + ext)`` where ``mu`` is
  the intra-cluster weight and ``ext`` the weight of edges leaving the
  cluster. The ``w`` calculators use raw weights, the others binarise.

The ``incr`` calculator names select incremental evaluation; they produce the
same values as their non-incremental counterparts.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import BUNCH_CALCULATORS, Decomposition, DependencyMatrix
from .errors import CapacityError, UsageError

# name -> (family, weighted)
CALCULATORS = {
    "basicmq": ("basic", False),
    "turbomq": ("turbo", False),
    "turbomqw": ("turbo", True),
    "turbomqincr": ("turbo", False),
    "turbomqincrw": ("turbo", True),
}
assert set(CALCULATORS) == set(BUNCH_CALCULATORS)

# Improvements at or below this are treated as no improvement.
IMPROVEMENT_EPS = 1e-12


def _calc(calculator: str) -> tuple[str, bool]:
    try:
        return CALCULATORS[calculator]
    except KeyError:
        raise UsageError(f"unknown MQ calculator {calculator!r}") from None


def canonical_labels(assignment) -> np.ndarray:
    """Relabel clusters 0..k-1 in order of first appearance."""
    a = np.asarray(assignment)
    _, first, inv = np.unique(a, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    return order[inv].astype(np.int64)


@dataclass(frozen=True, eq=False)
class MdgPartition:
    assignment: np.ndarray

    def __post_init__(self):
        a = canonical_labels(self.assignment) if len(self.assignment) else np.zeros(0, np.int64)
        a.setflags(write=False)
        object.__setattr__(self, "assignment", a)

    @property
    def k(self) -> int:
        return int(self.assignment.max()) + 1 if len(self.assignment) else 0

    def __eq__(self, other):
        return isinstance(other, MdgPartition) and np.array_equal(self.assignment, other.assignment)

    def __hash__(self):
        return hash(self.assignment.tobytes())

    def to_decomposition(self, entities) -> Decomposition:
        groups: dict[int, set] = {}
        for e, c in zip(entities, self.assignment):
            groups.setdefault(int(c), set()).add(e)
        return Decomposition({f"c{c}": frozenset(g) for c, g in sorted(groups.items())})


@dataclass(frozen=True)
class SearchParams:
    seed: int = 0
    restarts: int = 10
    population: int = 100
    generations: int = 200
    crossover_rate: float = 0.8
    mutation_rate: float = 0.004
    exhaustive_limit: int = 12
    tournament: int = 2
    elitism: int = 1

    def __post_init__(self):
        for name in ("crossover_rate", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise UsageError(f"{name} must lie in [0, 1]")
        for name in ("restarts", "population", "generations", "exhaustive_limit", "tournament"):
            if getattr(self, name) < 1:
                raise UsageError(f"{name} must be at least 1")
        if self.seed < 0:
            raise UsageError("seed must be non-negative")


def edge_weights(m: DependencyMatrix, weighted: bool) -> np.ndarray:
    w = np.asarray(m.weights, dtype=float)
    return w.copy() if weighted else (w > 0).astype(float)


def _cluster_matrix(w: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    onehot = np.zeros((len(labels), k))
    onehot[np.arange(len(labels)), labels] = 1.0
    return onehot.T @ w @ onehot


def _turbo_from_matrix(mm: np.ndarray) -> float:
    intra2 = np.diag(mm)
    ext = mm.sum(axis=1) - intra2
    denom = intra2 + ext
    cf = np.where(intra2 > 0, intra2 / np.where(denom > 0, denom, 1.0), 0.0)
    return float(cf.sum())


def _basic_from_matrix(mm: np.ndarray, sizes: np.ndarray) -> float:
    k = len(sizes)
    pairs = sizes * (sizes - 1) / 2.0
    intra = np.diag(mm) / 2.0
    a = np.where(pairs > 0, intra / np.where(pairs > 0, pairs, 1.0), 0.0)
    if k == 1:
        return float(a[0])
    e = mm / np.outer(sizes, sizes)
    iu = np.triu_indices(k, 1)
    return float(a.sum() / k - e[iu].sum() / (k * (k - 1) / 2.0))


def _score(w: np.ndarray, assignment, family: str) -> float:
    labels = canonical_labels(assignment)
    k = int(labels.max()) + 1
    mm = _cluster_matrix(w, labels, k)
    if family == "turbo":
        return _turbo_from_matrix(mm)
    return _basic_from_matrix(mm, np.bincount(labels, minlength=k).astype(float))


def basic_mq(m: DependencyMatrix, p: MdgPartition) -> float:
    _check(m, p)
    return _score(edge_weights(m, False), p.assignment, "basic")


def turbo_mq(m: DependencyMatrix, p: MdgPartition, weighted: bool = False) -> float:
    _check(m, p)
    return _score(edge_weights(m, weighted), p.assignment, "turbo")


def mq(m: DependencyMatrix, p: MdgPartition, calculator: str) -> float:
    family, weighted = _calc(calculator)
    if family == "basic":
        return basic_mq(m, p)
    return turbo_mq(m, p, weighted)


def _check(m: DependencyMatrix, p: MdgPartition):
    if len(p.assignment) != m.n:
        raise UsageError(f"partition covers {len(p.assignment)} entities, MDG has {m.n}")


# ---------------------------------------------------------------------------
# Incremental move evaluation
# ---------------------------------------------------------------------------


def _cf(mu2, ext):
    denom = mu2 + ext
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(mu2 > 0, mu2 / np.where(denom > 0, denom, 1.0), 0.0)


def _density(intra, n):
    pairs = n * (n - 1) / 2.0
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(pairs > 0, intra / np.where(pairs > 0, pairs, 1.0), 0.0)


def _ratio(num, den):
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


class MoveEvaluator:
    """Maintains cluster statistics so single-entity moves are cheap to score.

    Clusters live in ``N`` slots; empty slots stand for "a new cluster".
    ``mm`` is the slot-by-slot weight matrix ``C^T W C`` (its diagonal is
    twice the intra-cluster weight) and ``conn[x, c]`` the weight between
    entity ``x`` and slot ``c``.
    """

    def __init__(self, w: np.ndarray, assignment, family: str):
        self.w = np.asarray(w, dtype=float)
        self.family = family
        n = self.w.shape[0]
        self.n = n
        self.labels = canonical_labels(assignment).copy() if n else np.zeros(0, np.int64)
        onehot = np.zeros((n, n))
        onehot[np.arange(n), self.labels] = 1.0
        self.conn = self.w @ onehot
        self.mm = onehot.T @ self.conn
        self.sizes = onehot.sum(axis=0)
        self.deg = self.w.sum(axis=1)

    # -- bookkeeping -----------------------------------------------------
    @property
    def k(self) -> int:
        return int(np.count_nonzero(self.sizes))

    def partition(self) -> MdgPartition:
        return MdgPartition(self.labels.copy())

    def score(self) -> float:
        live = np.flatnonzero(self.sizes)
        mm = self.mm[np.ix_(live, live)]
        if self.family == "turbo":
            return _turbo_from_matrix(mm)
        return _basic_from_matrix(mm, self.sizes[live])

    def free_slot(self) -> int:
        return int(np.flatnonzero(self.sizes == 0)[0])

    def apply(self, x: int, target: int):
        s = int(self.labels[x])
        if target == s:
            return
        r = self.conn[x].copy()
        delta = np.zeros(self.n)
        delta[target] += 1.0
        delta[s] -= 1.0
        self.mm += np.outer(delta, r) + np.outer(r, delta)
        col = self.w[:, x]
        self.conn[:, s] -= col
        self.conn[:, target] += col
        self.sizes[s] -= 1
        self.sizes[target] += 1
        self.labels[x] = target

    # -- scoring ---------------------------------------------------------
    def delta(self, x: int, target: int) -> float:
        """MQ(after) - MQ(before) for moving ``x`` into slot ``target``."""
        s = int(self.labels[x])
        if target == s or (self.sizes[target] == 0 and self.sizes[s] == 1):
            return 0.0
        live = np.flatnonzero(self.sizes)
        if self.sizes[target] == 0:
            cols = np.append(live, target)
        else:
            cols = live
        d = self._deltas(np.array([x]), cols, include_empty=self.sizes[target] == 0)
        return float(d[0, int(np.flatnonzero(cols == target)[0])])

    def all_deltas(self) -> tuple[np.ndarray, np.ndarray]:
        """Deltas for every entity and every live cluster plus one new cluster.

        Returns ``(deltas, slots)``; invalid moves (to the current cluster, or
        a singleton to a new cluster) are ``-inf``.
        """
        live = np.flatnonzero(self.sizes)
        empty = np.flatnonzero(self.sizes == 0)
        cols = np.append(live, empty[0]) if len(empty) else live
        d = self._deltas(np.arange(self.n), cols, include_empty=len(empty) > 0)
        return d, cols

    def _deltas(self, xs: np.ndarray, cols: np.ndarray, include_empty: bool) -> np.ndarray:
        labels = self.labels[xs]
        live = np.flatnonzero(self.sizes)
        conn = self.conn[np.ix_(xs, cols)]               # (X, T)
        wxs = self.conn[xs, labels]                      # (X,)
        deg = self.deg[xs]
        is_s = cols[None, :] == labels[:, None]          # (X, T)
        if self.family == "turbo":
            out = self._turbo(labels, cols, conn, wxs, deg)
        else:
            out = self._basic(xs, labels, cols, live, conn, wxs)
        out = np.where(is_s, -np.inf, out)
        if include_empty:
            singleton = self.sizes[labels] == 1
            out[singleton, -1] = -np.inf
        return out

    def _turbo(self, labels, cols, conn, wxs, deg):
        mu2 = np.diag(self.mm)
        ext = self.mm.sum(axis=1) - mu2
        mu2_s, ext_s = mu2[labels], ext[labels]
        mu2_t, ext_t = mu2[cols][None, :], ext[cols][None, :]
        cf_s = _cf(mu2_s, ext_s)
        cf_t = _cf(mu2_t, ext_t)
        new_s = _cf(mu2_s - 2 * wxs, ext_s - (deg - wxs) + wxs)
        new_t = _cf(mu2_t + 2 * conn, ext_t - conn + (deg[:, None] - conn))
        return (new_s - cf_s)[:, None] + (new_t - cf_t)

    def _basic(self, xs, labels, cols, live, conn, wxs):
        sizes = self.sizes
        k = len(live)
        n_l = sizes[live]
        mm_l = self.mm[np.ix_(live, live)]
        intra_l = np.diag(mm_l) / 2.0
        a_l = _density(intra_l, n_l)
        e_l = mm_l / np.outer(n_l, n_l)
        np.fill_diagonal(e_l, 0.0)
        sum_a = a_l.sum()
        sum_e = e_l.sum() / 2.0
        mq_now = _basic_total(sum_a, sum_e, k)

        pos = {int(c): i for i, c in enumerate(live)}
        s_idx = np.array([pos[int(c)] for c in labels])        # (X,)
        X = len(xs)
        wl = self.conn[np.ix_(xs, live)]                          # (X, k) weight x->live cluster
        n_s = n_l[s_idx]
        intra_s = intra_l[s_idx]
        a_s = a_l[s_idx]
        # row sums of old pair densities touching s
        rs = e_l[s_idx].sum(axis=1)                            # (X,)
        # source row after removal of x, excluding the target column handled below
        n_s1 = n_s - 1
        inter_s = mm_l[s_idx]                                  # (X, k)
        e_s_new = _ratio(inter_s - wl, n_s1[:, None] * n_l[None, :])   # (X, k) for c != s,t
        e_s_new[np.arange(X), s_idx] = 0.0
        a_s_new = _density(intra_s - wxs, n_s1)
        vanish = n_s1 == 0

        out = np.empty((X, len(cols)))
        # targets among live clusters
        t_idx = np.arange(k)
        n_t = n_l[None, :]                                     # (1, k)
        wxt = wl                                               # (X, k)
        a_t = a_l[None, :]
        a_t_new = _density(intra_l[None, :] + wxt, n_t + 1)
        rt = e_l.sum(axis=1)[None, :]                          # (1, k)
        e_st = e_l[s_idx]                                      # (X, k) old density between s and t
        old = rs[:, None] + rt - e_st
        # new densities: rows for s and t over c not in {s, t}
        sum_s_new_all = e_s_new.sum(axis=1)[:, None]           # (X, 1)
        sum_s_new = sum_s_new_all - e_s_new                    # drop c == t
        # new t row: (I[t,c] + w_c) / ((n_t+1) n_c) for c not in {s,t}
        num = mm_l[None, :, :] + wl[:, None, :]                # (X, t, c)
        den = (n_l[:, None] + 1.0)[None, :, :] * n_l[None, None, :]
        q = num / den
        q[:, t_idx, t_idx] = 0.0
        q[np.arange(X), :, s_idx] = 0.0
        sum_t_new = q.sum(axis=2)                              # (X, k)
        inter_st_new = mm_l[s_idx] - wxt + wxs[:, None]
        e_st_new = _ratio(inter_st_new, n_s1[:, None] * (n_t + 1.0))
        new = np.where(vanish[:, None], 0.0, sum_s_new + e_st_new) + sum_t_new
        sum_a_new = sum_a - a_s[:, None] - a_t + np.where(vanish, 0.0, a_s_new)[:, None] + a_t_new
        sum_e_new = sum_e - old + new
        k_new = k - vanish.astype(int)
        mq_new = _basic_total_vec(sum_a_new, sum_e_new, k_new[:, None])
        out_live = mq_new - mq_now
        # map live-cluster columns to requested cols
        col_pos = [pos.get(int(c)) for c in cols]
        for j, p in enumerate(col_pos):
            if p is not None:
                out[:, j] = out_live[:, p]
        if len(cols) and col_pos[-1] is None:
            # new singleton cluster
            e_new_t = _ratio(wl, n_l[None, :])                  # (X, k) density new-vs-c
            e_new_t[np.arange(X), s_idx] = 0.0
            e_st_n = _ratio(wxs, n_s1)
            new_n = np.where(vanish, 0.0, e_s_new.sum(axis=1) + e_st_n) + e_new_t.sum(axis=1)
            old_n = rs
            sum_a_n = sum_a - a_s + np.where(vanish, 0.0, a_s_new)
            sum_e_n = sum_e - old_n + new_n
            k_n = k + 1 - vanish.astype(int)
            out[:, -1] = _basic_total_vec(sum_a_n, sum_e_n, k_n) - mq_now
        return out


def _basic_total(sum_a, sum_e, k):
    if k == 1:
        return float(sum_a)
    return float(sum_a / k - sum_e / (k * (k - 1) / 2.0))


def _basic_total_vec(sum_a, sum_e, k):
    k = np.asarray(k, dtype=float)
    pairs = k * (k - 1) / 2.0
    multi = sum_a / k - _ratio(sum_e, pairs)
    return np.where(k == 1, sum_a, multi)


def delta_mq(m: DependencyMatrix, p: MdgPartition, entity: int, target: Optional[int], calculator: str) -> float:
    """Score change for moving ``entity`` to cluster ``target``.

    ``target`` is a cluster index of ``p`` (``None`` or ``p.k`` means a new
    singleton cluster).
    """
    _check(m, p)
    family, weighted = _calc(calculator)
    if not 0 <= entity < m.n:
        raise UsageError(f"no entity with index {entity}")
    ev = MoveEvaluator(edge_weights(m, weighted), p.assignment, family)
    if target is None or target == p.k:
        if ev.sizes[ev.labels[entity]] == 1:
            return 0.0
        slot = ev.free_slot()
    elif 0 <= target < p.k:
        slot = target
    else:
        raise UsageError(f"no cluster with index {target}")
    return ev.delta(entity, slot)


# ---------------------------------------------------------------------------
# Searches
# ---------------------------------------------------------------------------


@dataclass
class SearchResult:
    partition: MdgPartition
    mq: float
    iterations: int = 0
    traces: list = field(default_factory=list)
    wall_time_ms: int = 0

    def report(self, config: str, seed: int) -> dict:
        return {
            "config": config,
            "seed": seed,
            "mq": self.mq,
            "iterations": self.iterations,
            "wall_time_ms": self.wall_time_ms,
        }


def _rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, *stream])


def random_partition(n: int, rng: np.random.Generator) -> np.ndarray:
    k = int(rng.integers(1, n + 1))
    return rng.integers(0, k, size=n)


def _climb(ev: MoveEvaluator) -> tuple[list, int]:
    trace = [ev.score()]
    steps = 0
    while True:
        deltas, cols = ev.all_deltas()
        flat = int(np.argmax(deltas))
        best = deltas.flat[flat]
        if not best > IMPROVEMENT_EPS:
            break
        x, j = divmod(flat, deltas.shape[1])
        ev.apply(x, int(cols[j]))
        steps += 1
        trace.append(ev.score())
    return trace, steps


def hill_climb(m: DependencyMatrix, calculator: str, params: SearchParams = SearchParams()) -> SearchResult:
    """Steepest-ascent hill climbing with random restarts.

    Every restart draws a random partition and repeatedly applies the best
    single-entity move until none improves MQ.
    """
    family, weighted = _calc(calculator)
    t0 = time.perf_counter()
    w = edge_weights(m, weighted)
    best: Optional[tuple[float, MdgPartition]] = None
    traces, iterations = [], 0
    for r in range(params.restarts):
        rng = _rng(params.seed, r)
        ev = MoveEvaluator(w, random_partition(m.n, rng), family)
        trace, steps = _climb(ev)
        traces.append(trace)
        iterations += steps
        part = ev.partition()
        score = _score(w, part.assignment, family)
        if best is None or score > best[0] + IMPROVEMENT_EPS:
            best = (score, part)
    ms = int((time.perf_counter() - t0) * 1000)
    return SearchResult(best[1], best[0], iterations, traces, ms)


def genetic_search(m: DependencyMatrix, calculator: str, params: SearchParams = SearchParams()) -> SearchResult:
    """Generational GA over cluster-assignment vectors.

    Tournament selection, single-point crossover, per-gene reassignment
    mutation and elitism; the best individual ever evaluated is returned.
    """
    family, weighted = _calc(calculator)
    t0 = time.perf_counter()
    w = edge_weights(m, weighted)
    n = m.n
    rng = _rng(params.seed, 0)
    pop = np.array([random_partition(n, rng) for _ in range(params.population)])
    fit = np.array([_score(w, ind, family) for ind in pop])
    b = int(np.argmax(fit))
    best_fit, best_ind = float(fit[b]), pop[b].copy()
    trace = [best_fit]

    def pick():
        idx = rng.integers(0, len(pop), size=params.tournament)
        return pop[idx[np.argmax(fit[idx])]]

    for _ in range(params.generations):
        elite_idx = np.argsort(-fit, kind="stable")[: params.elitism]
        children = [pop[i].copy() for i in elite_idx]
        while len(children) < params.population:
            p1, p2 = pick(), pick()
            if n > 1 and rng.random() < params.crossover_rate:
                cut = int(rng.integers(1, n))
                c1 = np.concatenate([p1[:cut], p2[cut:]])
                c2 = np.concatenate([p2[:cut], p1[cut:]])
            else:
                c1, c2 = p1.copy(), p2.copy()
            for c in (c1, c2):
                if params.mutation_rate > 0:
                    hit = rng.random(n) < params.mutation_rate
                    if hit.any():
                        c[hit] = rng.integers(0, n, size=int(hit.sum()))
                children.append(c)
        pop = np.array(children[: params.population])
        fit = np.array([_score(w, ind, family) for ind in pop])
        b = int(np.argmax(fit))
        if fit[b] > best_fit + IMPROVEMENT_EPS:
            best_fit, best_ind = float(fit[b]), pop[b].copy()
        trace.append(best_fit)
    ms = int((time.perf_counter() - t0) * 1000)
    return SearchResult(MdgPartition(best_ind), best_fit, params.generations, [trace], ms)


def bell_number(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def restricted_growth_strings(n: int):
    """All set partitions of ``range(n)`` as restricted growth strings."""
    if n == 0:
        yield ()
        return
    a = [0] * n
    m = [0] * n  # m[i] = max(a[:i+1])

    def rec(i):
        if i == n:
            yield tuple(a)
            return
        for v in range(m[i - 1] + 2):
            a[i] = v
            m[i] = max(m[i - 1], v)
            yield from rec(i + 1)

    yield from rec(1)


def exhaustive_search(m: DependencyMatrix, calculator: str, limit: int = 12) -> SearchResult:
    family, weighted = _calc(calculator)
    if m.n > limit:
        raise CapacityError(
            f"exhaustive search over {m.n} entities needs {bell_number(m.n):,} partitions "
            f"(Bell number); the limit is {limit} entities"
        )
    t0 = time.perf_counter()
    w = edge_weights(m, weighted)
    best, best_rgs, count = -math.inf, None, 0
    for rgs in restricted_growth_strings(m.n):
        count += 1
        score = _score(w, rgs, family)
        if score > best + IMPROVEMENT_EPS:
            best, best_rgs = score, rgs
    ms = int((time.perf_counter() - t0) * 1000)
    return SearchResult(MdgPartition(np.array(best_rgs, dtype=np.int64)), best, count, [], ms)


def run_search(m: DependencyMatrix, search: str, calculator: str, params: SearchParams = SearchParams()) -> SearchResult:
    if search == "hillclimbing":
        return hill_climb(m, calculator, params)
    if search == "ga":
        return genetic_search(m, calculator, params)
    if search == "exhaustive":
        return exhaustive_search(m, calculator, params.exhaustive_limit)
    raise UsageError(f"unknown search {search!r}")


__all__ = [
    "CALCULATORS", "MdgPartition", "SearchParams", "SearchResult", "MoveEvaluator",
    "basic_mq", "turbo_mq", "mq", "delta_mq", "hill_climb", "genetic_search",
    "exhaustive_search", "run_search", "bell_number", "restricted_growth_strings",
    "canonical_labels",
]
