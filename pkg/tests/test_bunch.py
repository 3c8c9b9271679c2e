import numpy as np
import pytest

from conftest import matrix_from, random_mdg, two_triangles
from oracles import mq_reference, rgs_partitions
from remodkit.bunch import (
    CALCULATORS,
    MdgPartition,
    MoveEvaluator,
    SearchParams,
    basic_mq,
    bell_number,
    delta_mq,
    edge_weights,
    exhaustive_search,
    genetic_search,
    hill_climb,
    mq,
    restricted_growth_strings,
    turbo_mq,
)
from remodkit.errors import CapacityError, UsageError

TRIANGLES = [0, 0, 0, 1, 1, 1]


def full(w):
    return matrix_from(w)


def test_basic_mq_examples():
    tri = full(np.ones((3, 3)) - np.eye(3))
    assert basic_mq(tri, MdgPartition([0, 0, 0])) == 1.0
    assert basic_mq(full([[0, 1], [1, 0]]), MdgPartition([0, 1])) == -1.0
    assert basic_mq(two_triangles(), MdgPartition(TRIANGLES)) == 1.0


def test_turbo_mq_examples():
    assert turbo_mq(two_triangles(), MdgPartition(TRIANGLES)) == 2.0
    assert turbo_mq(full(np.zeros((4, 4))), MdgPartition([0, 0, 1, 1])) == 0.0
    # cluster {0,1,2} with two internal edges and four external ones
    w = np.zeros((7, 7))
    for i, j in ((0, 1), (1, 2), (0, 3), (0, 4), (1, 5), (2, 6)):
        w[i, j] = w[j, i] = 1
    m = full(w)
    p = MdgPartition([0, 0, 0, 1, 2, 3, 4])
    assert turbo_mq(m, p) == pytest.approx(0.5)


def test_weighted_flag():
    m = full([[0, 3, 1], [3, 0, 0], [1, 0, 0]])
    p = MdgPartition([0, 0, 1])
    assert turbo_mq(m, p, weighted=False) == pytest.approx(2 / 3)
    assert turbo_mq(m, p, weighted=True) == pytest.approx(6 / 7)


@pytest.mark.parametrize("calc", sorted(CALCULATORS))
def test_mq_matches_edge_loop_reference(calc):
    family, weighted = CALCULATORS[calc]
    rng = np.random.default_rng(0)
    for _ in range(20):
        m = random_mdg(9, rng)
        labels = rng.integers(0, 4, 9)
        want = mq_reference(m.weights, labels, family, weighted)
        assert mq(m, MdgPartition(labels), calc) == pytest.approx(want, abs=1e-12)


@pytest.mark.parametrize("calc", sorted(CALCULATORS))
def test_mq_relabel_and_permutation_invariant(calc):
    rng = np.random.default_rng(1)
    m = random_mdg(10, rng)
    labels = rng.integers(0, 4, 10)
    base = mq(m, MdgPartition(labels), calc)
    assert mq(m, MdgPartition((labels + 7) % 11), calc) == pytest.approx(base, abs=1e-12)
    perm = rng.permutation(10)
    mp = matrix_from(m.weights[np.ix_(perm, perm)])
    assert mq(mp, MdgPartition(labels[perm]), calc) == pytest.approx(base, abs=1e-12)


def test_turbo_bounds():
    rng = np.random.default_rng(2)
    for _ in range(30):
        m = random_mdg(8, rng)
        p = MdgPartition(rng.integers(0, 5, 8))
        assert 0.0 <= turbo_mq(m, p) <= p.k


def _random_moves(calc, n_moves, seed):
    rng = np.random.default_rng(seed)
    m = random_mdg(30, rng, density=0.2)
    labels = rng.integers(0, 6, 30)
    worst = 0.0
    for _ in range(n_moves):
        p = MdgPartition(labels)
        x = int(rng.integers(0, 30))
        target = int(rng.integers(0, p.k + 1))
        d = delta_mq(m, p, x, target, calc)
        after = p.assignment.copy()
        after[x] = target
        worst = max(worst, abs(d - (mq(m, MdgPartition(after), calc) - mq(m, p, calc))))
        labels = after
    return worst


@pytest.mark.parametrize("calc", sorted(CALCULATORS))
def test_delta_matches_full_recompute(calc):
    assert _random_moves(calc, 200, 5) < 1e-9


def test_delta_null_move_and_sole_member():
    m = two_triangles()
    p = MdgPartition([0, 0, 0, 1, 1, 2])
    assert delta_mq(m, p, 1, 0, "turbomq") == 0.0
    assert delta_mq(m, p, 5, None, "turbomq") == 0.0
    d = delta_mq(m, p, 5, 1, "turbomq")
    assert d == pytest.approx(turbo_mq(m, MdgPartition(TRIANGLES)) - turbo_mq(m, p))
    assert MdgPartition(TRIANGLES).k == p.k - 1
    with pytest.raises(UsageError):
        delta_mq(m, p, 6, 0, "turbomq")
    with pytest.raises(UsageError):
        delta_mq(m, p, 0, 9, "turbomq")


def test_move_evaluator_sequence():
    rng = np.random.default_rng(3)
    m = random_mdg(20, rng)
    for family, weighted in (("basic", False), ("turbo", True)):
        w = edge_weights(m, weighted)
        ev = MoveEvaluator(w, rng.integers(0, 5, 20), family)
        for _ in range(100):
            x = int(rng.integers(0, 20))
            target = int(rng.integers(0, len(ev.sizes)))
            before = ev.score()
            d = ev.delta(x, target)
            ev.apply(x, target)
            assert ev.score() - before == pytest.approx(d, abs=1e-9)
        fresh = MoveEvaluator(w, ev.partition().assignment, family)
        assert fresh.score() == pytest.approx(ev.score(), abs=1e-9)


def test_rgs_and_bell():
    assert [bell_number(n) for n in range(8)] == [1, 1, 2, 5, 15, 52, 203, 877]
    assert sum(1 for _ in restricted_growth_strings(7)) == 877


@pytest.mark.parametrize("calc", ["basicmq", "turbomq", "turbomqw"])
def test_exhaustive_matches_enumeration(calc):
    rng = np.random.default_rng(4)
    family, weighted = CALCULATORS[calc]
    for n in (3, 5, 7):
        m = random_mdg(n, rng, density=0.5)
        want = max(mq_reference(m.weights, lab, family, weighted) for lab in rgs_partitions(n))
        res = exhaustive_search(m, calc)
        assert res.mq == pytest.approx(want, abs=1e-12)
        assert res.iterations == bell_number(n)


def test_exhaustive_small_cases():
    tri = full(np.ones((3, 3)) - np.eye(3))
    res = exhaustive_search(tri, "turbomq")
    assert res.mq == 1.0 and res.partition.k == 1
    one = full([[0]])
    assert exhaustive_search(one, "turbomq").partition.k == 1
    with pytest.raises(CapacityError, match="Bell"):
        exhaustive_search(full(np.zeros((13, 13))), "turbomq")


def test_hill_climb_traces_strictly_increase():
    rng = np.random.default_rng(6)
    m = random_mdg(25, rng, density=0.15)
    res = hill_climb(m, "turbomqw", SearchParams(seed=3, restarts=5))
    assert len(res.traces) == 5
    for trace in res.traces:
        assert all(b > a for a, b in zip(trace, trace[1:]))
    assert res.mq == pytest.approx(max(t[-1] for t in res.traces))


def test_searches_deterministic_and_single_entity():
    m = random_mdg(15, np.random.default_rng(7))
    p = SearchParams(seed=9, restarts=3, population=20, generations=10)
    for search in (hill_climb, genetic_search):
        a, b = search(m, "basicmq", p), search(m, "basicmq", p)
        assert a.partition == b.partition and a.mq == b.mq
        one = search(full([[0]]), "turbomq", p)
        assert one.partition.k == 1 and one.mq == 0.0


def test_ga_elitism_with_clone_population():
    m = random_mdg(12, np.random.default_rng(8))
    res = genetic_search(m, "turbomq", SearchParams(seed=1, population=10, generations=30,
                                                     crossover_rate=0.0, mutation_rate=0.0))
    trace = res.traces[0]
    assert all(b >= a for a, b in zip(trace, trace[1:]))


def test_search_params_validation():
    with pytest.raises(UsageError):
        SearchParams(mutation_rate=1.5)
    with pytest.raises(UsageError):
        SearchParams(restarts=0)
