"""Two-component PCA instance space over standardised project features."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import NumericalError, UsageError

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class InstanceSpace:
    selected_features: tuple
    projection: np.ndarray          # 2 x d, orthonormal rows
    center: np.ndarray              # column means of the fitted data
    points: np.ndarray              # n x 2
    eigenvalues: np.ndarray         # all eigenvalues, descending
    explained_variance_ratio: float

    def project(self, z) -> np.ndarray:
        """Map standardised vectors over ``selected_features`` to (z1, z2)."""
        z = np.asarray(z, dtype=float)
        return (z - self.center) @ self.projection.T

    def reconstruct(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.projection + self.center

    def to_json(self) -> dict:
        return {
            "selected_features": list(self.selected_features),
            "projection": self.projection.tolist(),
            "center": self.center.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "explained_variance_ratio": self.explained_variance_ratio,
        }

    @classmethod
    def from_json(cls, doc, points=None) -> "InstanceSpace":
        proj = np.array(doc["projection"], dtype=float)
        pts = np.zeros((0, 2)) if points is None else np.asarray(points, dtype=float)
        return cls(tuple(doc["selected_features"]), proj, np.array(doc["center"], dtype=float),
                   pts, np.array(doc["eigenvalues"], dtype=float), float(doc["explained_variance_ratio"]))


def _fix_sign(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def pca_project(x, names: Sequence[str] | None = None) -> InstanceSpace:
    """Project rows of ``x`` onto the top two eigenvectors of their covariance.

    Covariance uses the population divisor. Each axis is signed so that its
    largest-magnitude coefficient is positive.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise UsageError("expected a 2-D feature matrix")
    n, d = x.shape
    if d < 2:
        raise UsageError(f"PCA needs at least two features, got {d}")
    if n < 3:
        raise UsageError(f"PCA needs at least three rows, got {n}")
    if names is None:
        names = [f"f{i}" for i in range(d)]
    if len(names) != d:
        raise UsageError("feature name count does not match the matrix")
    center = x.mean(axis=0)
    xc = x - center
    cov = xc.T @ xc / n
    cov = (cov + cov.T) / 2.0
    try:
        vals, vecs = np.linalg.eigh(cov)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from None
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    scale = max(1.0, float(np.abs(vals).max()))
    for k in range(2):
        resid = np.linalg.norm(cov @ vecs[:, k] - vals[k] * vecs[:, k])
        if resid > RESIDUAL_TOL * scale:
            raise NumericalError(f"eigenpair {k} residual {resid:.3g} exceeds tolerance")
    proj = np.vstack([_fix_sign(vecs[:, 0]), _fix_sign(vecs[:, 1])])
    vals = np.maximum(vals, 0.0)
    total = float(vals.sum())
    ratio = float((vals[0] + vals[1]) / total) if total > 0 else 1.0
    ratio = min(1.0, max(0.0, ratio))
    return InstanceSpace(tuple(names), proj, center, xc @ proj.T, vals, ratio)
