"""Seeded synthetic data shared by the selection tests."""

import numpy as np

from remodkit.features import ProjectFeatureVector
from remodkit.selection import PerformanceTable

CONFIGS = ("cosine_average_10", "euclidean_single_5", "manhattan_complete_7")
CENTRES = {CONFIGS[0]: (-3.0, 0.0), CONFIGS[1]: (3.0, 0.0), CONFIGS[2]: (0.0, 3.0)}


def blobs(seed=0, n=40, gap=4.0):
    rng = np.random.default_rng(seed)
    x = np.vstack([rng.normal(-gap / 2, 0.5, (n // 2, 2)), rng.normal(gap / 2, 0.5, (n - n // 2, 2))])
    y = np.array([0] * (n // 2) + [1] * (n - n // 2))
    return x, y


def xor(seed=0, per=25, spread=0.3):
    rng = np.random.default_rng(seed)
    centres = [(-1, -1, 0), (1, 1, 0), (-1, 1, 1), (1, -1, 1)]
    x = np.vstack([rng.normal((cx, cy), spread, (per, 2)) for cx, cy, _ in centres])
    y = np.repeat([c for _, _, c in centres], per)
    return x, y


def planted(seed, n=60, d=20, a=3, b=11):
    """Best-config labels that depend only on features ``a`` and ``b``."""
    rng = np.random.default_rng([seed, 99])
    x = rng.normal(size=(n, d))
    labels = np.where(x[:, a] > 0, np.where(x[:, b] > 0, "A", "B"), "C")
    return x, [f"f{i}" for i in range(d)], labels


def blob_corpus(per=12, seed=0):
    """Rows sit in one of three blobs; the blob decides which config wins."""
    rng = np.random.default_rng(seed)
    vectors, cells = [], []
    for k, cfg in enumerate(CONFIGS):
        cx, cy = CENTRES[cfg]
        for i in range(per):
            pos = rng.normal((cx, cy), 0.4)
            values = {"g_mean": pos[0], "h_sum": pos[1], "n1_max": rng.normal(), "n2_std": rng.normal(),
                      "k_sum": 5.0}
            vectors.append(ProjectFeatureVector(f"p{k}", f"1.{i}", values))
            cells.append([90.0 if c == cfg else 40.0 for c in CONFIGS])
    rows = tuple((v.project, v.release) for v in vectors)
    return PerformanceTable(rows, CONFIGS, np.array(cells)), vectors
