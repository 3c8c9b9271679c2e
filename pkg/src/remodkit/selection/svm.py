"""Soft-margin RBF support vector classification trained by SMO.

The solver follows the decomposition method used by LIBSVM: at each step it
picks the maximal-violating pair with second-order working-set selection,
solves the two-variable subproblem analytically, and stops once the KKT
violation gap falls below ``tol``. It is fully deterministic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import DegenerateLabelsError, UsageError

log = logging.getLogger(__name__)

KKT_TOL = 1e-3
TAU = 1e-12
C_GRID = tuple(float(c) for c in range(1, 11))
# 0 would make every kernel value 1, so the lower end of [0, 1] is 0.01
GAMMA_GRID = (0.01,) + tuple(round(0.1 * g, 1) for g in range(1, 11))


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    sq = np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :] - 2.0 * a @ b.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass
class _Solution:
    alpha: np.ndarray
    rho: float
    iterations: int
    gap: float


def _smo(K: np.ndarray, y: np.ndarray, C: float, tol: float = KKT_TOL, max_iter: Optional[int] = None) -> _Solution:
    """Solve the C-SVC dual for a precomputed kernel ``K`` and labels in {-1, +1}."""
    n = len(y)
    if max_iter is None:
        max_iter = max(10_000, 100 * n)
    Q = (y[:, None] * y[None, :]) * K
    diag = np.diag(Q).copy()
    pos = y > 0
    alpha = np.zeros(n)
    G = -np.ones(n)
    it = 0
    gap = np.inf
    while it < max_iter:
        yG = -y * G
        below = alpha < C
        above = alpha > 0
        up = np.where(pos, below, above)
        low = np.where(pos, above, below)
        up_vals = np.where(up, yG, -np.inf)
        i = int(up_vals.argmax())
        gmax = up_vals[i]
        low_vals = np.where(low, yG, np.inf)
        gmin = low_vals.min()
        gap = gmax - gmin
        if not np.isfinite(gap) or gap < tol:
            gap = 0.0 if not np.isfinite(gap) else gap
            break
        b = gmax - low_vals
        a = diag[i] + diag - 2.0 * Q[i] * y[i] * y
        a[a <= 0] = TAU
        score = np.where(b > 0, -(b * b) / a, np.inf)
        j = int(score.argmin())
        it += 1

        ai_old, aj_old = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = diag[i] + diag[j] + 2.0 * Q[i, j]
            quad = quad if quad > 0 else TAU
            delta = (-G[i] - G[j]) / quad
            diff = ai_old - aj_old
            ai, aj = ai_old + delta, aj_old + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            quad = diag[i] + diag[j] - 2.0 * Q[i, j]
            quad = quad if quad > 0 else TAU
            delta = (G[i] - G[j]) / quad
            total = ai_old + aj_old
            ai, aj = ai_old - delta, aj_old + delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        G += Q[i] * (ai - ai_old) + Q[j] * (aj - aj_old)
    else:
        log.warning("SMO stopped after %d iterations with KKT gap %.3g", it, gap)

    yG = y * G
    upper = alpha >= C
    lower = alpha <= 0
    free = ~upper & ~lower
    if free.any():
        rho = float(yG[free].mean())
    else:
        ub_mask = (upper & (y < 0)) | (lower & (y > 0))
        lb_mask = (upper & (y > 0)) | (lower & (y < 0))
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        rho = float((ub + lb) / 2.0) if np.isfinite(ub) and np.isfinite(lb) else float(ub if np.isfinite(ub) else lb)
    return _Solution(alpha, rho, it, float(gap))


@dataclass
class SVMClassifier:
    """Binary RBF classifier; class 1 is the positive ("good") class.

    A classifier trained on a single class stores it in ``constant`` and
    predicts it everywhere.
    """

    support_vectors: np.ndarray
    dual_coef: np.ndarray          # alpha_i * y_i for each support vector
    bias: float
    C: float
    gamma: float
    alpha: Optional[np.ndarray] = None
    constant: Optional[int] = None
    iterations: int = 0

    def decision_function(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.constant is not None:
            return np.full(len(x), 1.0 if self.constant == 1 else -1.0)
        if len(self.support_vectors) == 0:
            return np.full(len(x), self.bias)
        return rbf_kernel(x, self.support_vectors, self.gamma) @ self.dual_coef + self.bias

    def predict(self, x) -> np.ndarray:
        return (self.decision_function(x) > 0).astype(int)

    def to_json(self) -> dict:
        return {
            "support_vectors": self.support_vectors.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "bias": self.bias,
            "C": self.C,
            "gamma": self.gamma,
            "constant": self.constant,
        }

    @classmethod
    def from_json(cls, doc) -> "SVMClassifier":
        return cls(
            np.array(doc["support_vectors"], dtype=float).reshape(-1, 2) if doc["support_vectors"] else np.zeros((0, 2)),
            np.array(doc["dual_coef"], dtype=float),
            float(doc["bias"]),
            float(doc["C"]),
            float(doc["gamma"]),
            constant=doc.get("constant"),
        )


def _signs(labels) -> np.ndarray:
    lab = np.asarray(labels).astype(int)
    if not set(np.unique(lab)) <= {0, 1}:
        raise UsageError("labels must be binary (0/1 or bool)")
    return np.where(lab == 1, 1.0, -1.0)


def _check_classes(y: np.ndarray, minimum: int = 2):
    pos, neg = int((y > 0).sum()), int((y < 0).sum())
    if pos < minimum or neg < minimum:
        raise DegenerateLabelsError(
            f"need {minimum} examples of each class, got {pos} positive and {neg} negative"
        )


def _fit_kernel(K, y, x, C, gamma, tol) -> SVMClassifier:
    sol = _smo(K, y, C, tol)
    sv = sol.alpha > 0
    return SVMClassifier(
        support_vectors=np.asarray(x, dtype=float)[sv],
        dual_coef=(sol.alpha * y)[sv],
        bias=-sol.rho,
        C=C,
        gamma=gamma,
        alpha=sol.alpha,
        iterations=sol.iterations,
    )


def train_svm(points, labels, C: float, gamma: float, seed: int = 0, tol: float = KKT_TOL) -> SVMClassifier:
    """Fit a binary classifier. The solver is deterministic, so ``seed`` only
    exists for interface symmetry with the other trainers."""
    x = np.asarray(points, dtype=float)
    y = _signs(labels)
    _check_classes(y)
    if C <= 0 or gamma <= 0:
        raise UsageError("C and gamma must be positive")
    return _fit_kernel(rbf_kernel(x, x, gamma), y, x, float(C), float(gamma), tol)


def constant_classifier(label: int, C: float = 1.0, gamma: float = GAMMA_GRID[0]) -> SVMClassifier:
    return SVMClassifier(np.zeros((0, 2)), np.zeros(0), 0.0, C, gamma, constant=int(label))


def kkt_violations(clf: SVMClassifier, points, labels) -> np.ndarray:
    """Per-example KKT violation of a trained classifier on its training set."""
    y = _signs(labels)
    margin = y * clf.decision_function(points)
    alpha = clf.alpha
    C = clf.C
    viol = np.zeros(len(y))
    at_zero = alpha <= 0
    at_c = alpha >= C
    free = ~at_zero & ~at_c
    viol[at_zero] = np.maximum(0.0, 1.0 - margin[at_zero])
    viol[at_c] = np.maximum(0.0, margin[at_c] - 1.0)
    viol[free] = np.abs(margin[free] - 1.0)
    return viol


# ---------------------------------------------------------------------------
# Cross-validated grid search
# ---------------------------------------------------------------------------


def stratified_folds(labels, k: int, seed: int) -> list[np.ndarray]:
    """Assign indices to ``k`` folds, spreading each class round-robin."""
    lab = np.asarray(labels)
    rng = np.random.default_rng([seed, 10])
    folds = [[] for _ in range(k)]
    offset = 0
    for cls in sorted(np.unique(lab).tolist()):
        idx = np.flatnonzero(lab == cls)
        idx = idx[rng.permutation(len(idx))]
        for r, i in enumerate(idx):
            folds[(r + offset) % k].append(int(i))
        offset += len(idx)
    return [np.array(sorted(f), dtype=int) for f in folds]


@dataclass
class Scores:
    accuracy: float
    precision: float
    recall: float
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    @classmethod
    def from_predictions(cls, truth, pred) -> "Scores":
        t = np.asarray(truth).astype(int)
        p = np.asarray(pred).astype(int)
        tp = int(((t == 1) & (p == 1)).sum())
        tn = int(((t == 0) & (p == 0)).sum())
        fp = int(((t == 0) & (p == 1)).sum())
        fn = int(((t == 1) & (p == 0)).sum())
        total = tp + tn + fp + fn
        acc = 100.0 * (tp + tn) / total if total else 0.0
        prec = 100.0 * tp / (tp + fp) if tp + fp else 0.0
        rec = 100.0 * tp / (tp + fn) if tp + fn else 0.0
        return cls(acc, prec, rec, tp, tn, fp, fn)


@dataclass
class TuneResult:
    C: float
    gamma: float
    accuracy: float
    precision: float
    recall: float
    scores: Scores


def _cv_predict(Kfull, y, folds, C, tol) -> np.ndarray:
    pred = np.zeros(len(y), dtype=int)
    for test in folds:
        if len(test) == 0:
            continue
        train = np.setdiff1d(np.arange(len(y)), test)
        ytr = y[train]
        pos, neg = int((ytr > 0).sum()), int((ytr < 0).sum())
        if pos < 2 or neg < 2:
            pred[test] = 1 if pos > neg else 0
            continue
        sol = _smo(Kfull[np.ix_(train, train)], ytr, C, tol)
        dv = Kfull[np.ix_(test, train)] @ (sol.alpha * ytr) - sol.rho
        pred[test] = (dv > 0).astype(int)
    return pred


def tune_and_score(
    points,
    labels,
    seed: int = 0,
    *,
    folds: int = 10,
    allow_fewer_folds: bool = False,
    C_grid: Sequence[float] = C_GRID,
    gamma_grid: Sequence[float] = GAMMA_GRID,
    tol: float = KKT_TOL,
) -> TuneResult:
    """Grid search over (C, gamma) by stratified k-fold cross-validation.

    The best cell maximises CV accuracy, ties going to the smaller C and then
    the smaller gamma. Metrics are percentages for the positive class, pooled
    over all folds.
    """
    x = np.asarray(points, dtype=float)
    y = _signs(labels)
    n = len(y)
    if n < folds:
        if not allow_fewer_folds:
            raise UsageError(f"{folds}-fold cross-validation needs at least {folds} points, got {n}")
        folds = max(2, n)
    _check_classes(y)
    lab = (y > 0).astype(int)
    fold_idx = stratified_folds(lab, folds, seed)
    best: Optional[TuneResult] = None
    for gamma in sorted(gamma_grid):
        K = rbf_kernel(x, x, gamma)
        for C in sorted(C_grid):
            pred = _cv_predict(K, y, fold_idx, C, tol)
            s = Scores.from_predictions(lab, pred)
            cand = TuneResult(float(C), float(gamma), s.accuracy, s.precision, s.recall, s)
            if best is None or _better(cand, best):
                best = cand
    return best


def _better(a: TuneResult, b: TuneResult) -> bool:
    if a.accuracy != b.accuracy:
        return a.accuracy > b.accuracy
    return (a.C, a.gamma) < (b.C, b.gamma)


def one_vs_rest_predict(train_x, train_labels, test_x, C: float, gamma: float, tol: float = KKT_TOL) -> np.ndarray:
    """Multi-class prediction by the largest one-vs-rest decision value.

    Classes with fewer than two training examples (or whose complement has
    fewer than two) get no classifier and are never predicted, unless the
    training data holds a single class.
    """
    train_x = np.asarray(train_x, dtype=float)
    labels = np.asarray(train_labels)
    classes = sorted(np.unique(labels).tolist())
    test_x = np.atleast_2d(np.asarray(test_x, dtype=float))
    if len(classes) == 1:
        return np.array([classes[0]] * len(test_x), dtype=labels.dtype)
    K = rbf_kernel(train_x, train_x, gamma)
    Kt = rbf_kernel(test_x, train_x, gamma)
    scores = np.full((len(test_x), len(classes)), -np.inf)
    for c_idx, cls in enumerate(classes):
        y = np.where(labels == cls, 1.0, -1.0)
        if (y > 0).sum() < 2 or (y < 0).sum() < 2:
            continue
        sol = _smo(K, y, C, tol)
        scores[:, c_idx] = Kt @ (sol.alpha * y) - sol.rho
    if not np.isfinite(scores).any():
        majority = max(classes, key=lambda c: (int((labels == c).sum()), -classes.index(c)))
        return np.array([majority] * len(test_x), dtype=labels.dtype)
    return np.array([classes[i] for i in np.argmax(scores, axis=1)], dtype=labels.dtype)
