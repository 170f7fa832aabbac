"""Regression metrics and k-fold partition plans."""
from __future__ import annotations

import statistics
import warnings
from dataclasses import dataclass

import numpy as np

from .rng import fisher_yates


class ZeroVarianceWarning(UserWarning):
    """R2 requested on a target with zero variance; 0 is returned."""


def r2_score(y_true, y_pred) -> float:
    """Coefficient of determination, 1 - SS_res / SS_tot.

    A constant ``y_true`` has no variance to explain: the score is 0 by
    convention and a :class:`ZeroVarianceWarning` is emitted.
    """
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    if y_true.shape != y_pred.shape or y_true.size == 0:
        raise ValueError("y_true and y_pred must have the same nonzero length")
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        warnings.warn("zero-variance target; R2 defined as 0", ZeroVarianceWarning, stacklevel=2)
        return 0.0
    ss_res = float(np.sum((y_true - y_pred) ** 2))
    return 1.0 - ss_res / ss_tot


def mean_squared_error(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    return float(np.mean((y_true - y_pred) ** 2))


def mae(y, mu) -> float:
    """Mean absolute deviation of ``y`` from ``mu`` (scalar or per-sample array)."""
    y = np.asarray(y, dtype=float).ravel()
    if y.size == 0:
        raise ValueError("mae of an empty sample")
    return float(np.mean(np.abs(y - mu)))


def fold_std(scores) -> float:
    """Population standard deviation of per-fold scores.

    Computed in exact arithmetic (``statistics.pstdev``), so equal scores give
    exactly 0.
    """
    scores = [float(s) for s in np.asarray(scores, dtype=float).ravel()]
    if not scores:
        raise ValueError("fold_std of an empty list")
    return statistics.pstdev(scores)


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def sizes(self) -> list:
        return [int(c) for c in np.bincount(self.assignments, minlength=self.k)]


def kfold_partition(n: int, k: int, seed: int = 0) -> FoldPlan:
    """Shuffle ``range(n)`` and cut it into k contiguous chunks.

    The first ``n % k`` folds get ``ceil(n / k)`` elements, the rest
    ``floor(n / k)``.
    """
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={n}")
    perm = fisher_yates(n, seed)
    base, extra = divmod(n, k)
    assignments = np.empty(n, dtype=np.int64)
    start = 0
    for fold in range(k):
        size = base + (1 if fold < extra else 0)
        assignments[perm[start:start + size]] = fold
        start += size
    assignments.setflags(write=False)
    return FoldPlan(k, assignments, seed)
