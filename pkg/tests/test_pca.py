import json

import numpy as np
import pytest

from remodkit.errors import UsageError
from remodkit.selection.pca import InstanceSpace, pca_project


def test_orthonormal_rows_on_random_inputs():
    rng = np.random.default_rng(0)
    for d in (2, 3, 7, 20):
        x = rng.normal(size=(30, d)) @ rng.normal(size=(d, d))
        p = pca_project(x).projection
        np.testing.assert_allclose(p @ p.T, np.eye(2), atol=1e-9)


def test_rank_one_ratio():
    rng = np.random.default_rng(1)
    t = rng.normal(size=(40, 1))
    x = t @ rng.normal(size=(1, 5)) + rng.normal(size=5)
    assert pca_project(x).explained_variance_ratio == pytest.approx(1.0, abs=1e-9)


def test_isotropic_gaussian():
    rng = np.random.default_rng(2)
    s = pca_project(rng.normal(size=(4000, 2)))
    assert s.explained_variance_ratio == pytest.approx(1.0, abs=1e-9)
    share = s.eigenvalues[:2] / s.eigenvalues[:2].sum()
    np.testing.assert_allclose(share, [0.5, 0.5], atol=0.05)


def test_eigen_residual():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(50, 6)) * [5, 3, 1, 1, 0.5, 0.1]
    s = pca_project(x)
    cov = np.cov(x, rowvar=False, bias=True)
    for v, lam in zip(s.projection, s.eigenvalues):
        assert np.linalg.norm(cov @ v - lam * v) < 1e-8


def test_points_centred_and_project():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(25, 4))
    s = pca_project(x, ["a", "b", "c", "d"])
    np.testing.assert_allclose(s.points.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(s.project(x), s.points, atol=1e-12)
    assert tuple(s.selected_features) == ("a", "b", "c", "d")


def test_sign_convention_deterministic():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(20, 3))
    p1, p2 = pca_project(x).projection, pca_project(-x).projection
    for row in (p1, p2):
        for v in row:
            assert v[np.argmax(np.abs(v))] > 0
    np.testing.assert_allclose(np.abs(p1), np.abs(p2), atol=1e-9)


def test_json_round_trip():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(10, 3))
    s = pca_project(x, ["a", "b", "c"])
    doc = json.loads(json.dumps(s.to_json()))
    back = InstanceSpace.from_json(doc, s.points.tolist())
    np.testing.assert_allclose(back.project(x), s.points)


def test_errors():
    with pytest.raises(UsageError):
        pca_project(np.ones((5, 1)))
    with pytest.raises(UsageError):
        pca_project(np.ones((2, 3)))


def test_reconstruction_loses_the_unexplained_share():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(80, 5)) * [4, 2, 1, 0.5, 0.2]
    s = pca_project(x)
    centred = x - x.mean(axis=0)
    lost = np.sum((x - s.reconstruct(s.points)) ** 2) / np.sum(centred ** 2)
    assert lost == pytest.approx(1 - s.explained_variance_ratio, abs=1e-6)
