import numpy as np
import pytest

from oracles import bfs_mno, random_partition
from remodkit.core import Decomposition
from remodkit.errors import CapacityError, UniverseError
from remodkit.mojo import all_partitions, max_mno, mno, mno_oracle, mojofm


def D(*groups):
    return Decomposition.from_groups(groups)


def test_small_examples():
    xy, x_y = D({"x", "y"}), D({"x"}, {"y"})
    assert mno(xy, xy) == 0
    assert mno(xy, x_y) == 1
    assert mno(x_y, xy) == 1
    assert max_mno(xy) == 1 and max_mno(x_y) == 1
    r = mojofm(xy, x_y)
    assert (r.mno, r.max_mno, r.mojofm) == (1, 1, 0.0)
    assert mojofm(xy, xy).mojofm == 100.0


def test_singletons_to_one_cluster():
    n = 6
    singles = D(*({f"e{i}"} for i in range(n)))
    whole = D({f"e{i}" for i in range(n)})
    assert mno(singles, whole) == n - 1
    assert mno_oracle(singles, whole) == n - 1


def test_single_entity_universe_scores_100():
    assert mojofm(D({"x"}), D({"x"})).mojofm == 100.0


def test_universe_mismatch():
    with pytest.raises(UniverseError) as exc:
        mno(D({"x", "y"}), D({"x", "z"}))
    assert "y" in str(exc.value) and "z" in str(exc.value)


def test_oracle_capacity():
    big = D({f"e{i}" for i in range(9)})
    with pytest.raises(CapacityError):
        mno_oracle(big, big)


def test_relabel_invariance():
    rng = np.random.default_rng(8)
    ents = [f"e{i}" for i in range(12)]
    for _ in range(20):
        a, b = random_partition(ents, rng), random_partition(ents, rng)
        base = mno(D(*a), D(*b))
        assert mno(Decomposition.from_groups(a[::-1], prefix="z"), D(*b)) == base
        assert mno(D(*a), Decomposition.from_groups(b[::-1], prefix="q")) == base


def test_fast_mno_matches_independent_bfs():
    rng = np.random.default_rng(1)
    for n in (4, 5, 6):
        ents = list(range(n))
        for _ in range(10):
            a, b = random_partition(ents, rng), random_partition(ents, rng)
            da = Decomposition.from_groups([{f"e{i}" for i in g} for g in a])
            db = Decomposition.from_groups([{f"e{i}" for i in g} for g in b])
            assert mno(da, db) == bfs_mno(a, b) == mno_oracle(da, db)


def test_max_mno_brute_force_small():
    rng = np.random.default_rng(2)
    ents = [f"e{i}" for i in range(6)]
    parts = all_partitions(ents)
    assert len(parts) == 203
    for _ in range(10):
        b = D(*random_partition(ents, rng))
        assert max_mno(b) == max(mno(a, b) for a in parts)
