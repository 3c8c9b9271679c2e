import json

import numpy as np
import pytest

from remodkit.core import DependencyMatrix

# Row a.java -> b.java of the dependency-kind table used in the worked example.
TABLE2_AB = {"Cast": 1, "Call": 8, "Return": 4, "Use": 9, "Contain": 0, "Import": 0, "Extend": 6, "Implement": 3}


@pytest.fixture
def table2_json():
    doc = {"schemaVersion": "1.0", "variables": ["a.java", "b.java", "c.java"],
           "cells": [{"src": 0, "dest": 1, "values": TABLE2_AB}]}
    return json.dumps(doc)


def matrix_from(weights, names=None):
    w = np.asarray(weights, dtype=float)
    names = names or [f"e{i:02d}" for i in range(len(w))]
    return DependencyMatrix(tuple(names), w)


def two_triangles():
    w = np.zeros((6, 6))
    for block in ((0, 1, 2), (3, 4, 5)):
        for i in block:
            for j in block:
                if i != j:
                    w[i, j] = 1.0
    return matrix_from(w)


def random_mdg(n, rng, density=0.3, weighted=True):
    w = np.triu((rng.random((n, n)) < density) * (rng.integers(1, 6, (n, n)) if weighted else 1), 1)
    return matrix_from(w + w.T)
