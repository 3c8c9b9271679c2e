import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from remodkit.core import write_decomposition
from remodkit.errors import UsageError
from remodkit.groundtruth import (
    ROOT_LABEL,
    ReleaseTree,
    build_reference,
    common_paths,
    flatten,
    reference_for,
    release_window,
)

SPARK = ["user/spark/java/a.java", "user/spark/java/b.java", "user/spark/main/test.java"]


def three_versions():
    return [
        ReleaseTree("v1", {"src/var/c.java", "src/var/d.java", "tmp/eg/z.java"}),
        ReleaseTree("v2", {"src/var/c.java", "src/var/d.java", "temp/util/z.java"}),
        ReleaseTree("v3", {"src/var/c.java", "src/var/d.java", "temp/eg/z.java"}),
    ]


def test_three_version_common_paths():
    assert common_paths(three_versions()) == {"src/var/c.java", "src/var/d.java"}


def test_common_paths_edge_cases():
    t = ReleaseTree("x", {"a/b.java"})
    assert common_paths([t]) == {"a/b.java"}
    assert common_paths([t, ReleaseTree("y", {"c/d.java"})]) == frozenset()
    with pytest.raises(UsageError):
        common_paths([])


def test_spark_six_pairs():
    ref = build_reference(SPARK)
    assert ref.named_pairs() == {
        ("java", "a.java"), ("java", "b.java"), ("main", "test.java"),
        ("spark", "java"), ("spark", "main"), ("user", "spark"),
    }
    assert ref.roots == {"user"}


def test_spark_flatten():
    d = flatten(build_reference(SPARK))
    assert d.clusters == {
        "user/spark/java": {"user/spark/java/a.java", "user/spark/java/b.java"},
        "user/spark/main": {"user/spark/main/test.java"},
    }


def test_single_level_and_root_file(caplog):
    ref = build_reference(["x/F.java"])
    assert ref.contains == frozenset()
    assert ref.leaves == {"x": {"x/F.java"}}
    ref = build_reference(["Top.java", "x/F.java"])
    assert ref.leaves[ROOT_LABEL] == {"Top.java"}
    assert "no directory" in caplog.text


def test_shared_prefix_emitted_once():
    ref = build_reference(["a/b/c/F.java", "a/b/d/G.java"])
    assert ref.contains == {("a", "a/b"), ("a/b", "a/b/c"), ("a/b", "a/b/d")}


def test_single_directory_is_one_cluster():
    assert len(flatten(build_reference(["p/A.java", "p/B.java"]))) == 1


def test_reference_deterministic():
    a = write_decomposition(reference_for(three_versions()))
    b = write_decomposition(reference_for(three_versions()[::-1]))
    assert a == b == "src/var\tsrc/var/c.java\nsrc/var\tsrc/var/d.java\n"


def test_tree_from_directory_and_list(tmp_path):
    (tmp_path / "a" / "b").mkdir(parents=True)
    (tmp_path / "a" / "b" / "X.java").write_text("")
    (tmp_path / "a" / "notes.txt").write_text("")
    t = ReleaseTree.from_directory("r", tmp_path)
    assert t.paths == {"a/b/X.java"}
    t2 = ReleaseTree.from_path_list("r", "# listing\na/b/X.java\n./a/notes.txt\n")
    assert t2.paths == t.paths


def test_release_window():
    rel = [f"1.{i}" for i in range(12)]
    assert release_window(rel, 10) == list(range(10))
    with pytest.raises(UsageError):
        release_window(rel, 9)


_segment = st.sampled_from(["a", "b", "c", "util", "x"])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(_segment, min_size=1, max_size=4), min_size=1, max_size=100))
def test_flatten_partitions_leaf_files(dir_lists):
    paths = {"/".join(dirs) + f"/F{i}.java" for i, dirs in enumerate(dir_lists)}
    ref = build_reference(paths)
    d = flatten(ref)
    assert d.entities == paths
    for label, files in d.clusters.items():
        assert all(f.rsplit("/", 1)[0] == label for f in files)


def test_random_hundred_paths():
    rng = np.random.default_rng(1)
    paths = {"/".join(rng.choice(["a", "b", "c"], size=int(rng.integers(1, 4)))) + f"/F{i}.java"
             for i in range(100)}
    assert flatten(build_reference(paths)).entities == paths
