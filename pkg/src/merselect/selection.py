"""Recursive feature elimination, with and without cross-validation."""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import estimators
from .dataset import Dataset
from .estimators import EstimatorSpec
from .metrics import kfold_partition, r2_score
from .rng import derive_seed

SFS_FORMAT = "merselect.sfs/1"


@dataclass(frozen=True)
class FeatureRanking:
    """``rank[j] == 1`` for survivors; the last feature eliminated gets rank 2."""

    rank: np.ndarray
    elimination_trace: tuple
    survivors: tuple

    @property
    def support(self) -> np.ndarray:
        return self.rank == 1


@dataclass(frozen=True)
class SelectedFeatureSet:
    selected_indices: tuple
    selected_names: tuple
    scores_by_size: dict
    chosen_size: int
    estimator: EstimatorSpec
    target: str
    master_seed: int
    n_features_total: int
    folds: int
    step: int
    ranking: Optional[FeatureRanking] = None
    extra: dict = field(default_factory=dict)

    def mean_scores(self) -> dict:
        return {size: entry["mean"] for size, entry in self.scores_by_size.items()}

    def to_dict(self) -> dict:
        out = {
            "format": SFS_FORMAT,
            "target": self.target,
            "estimator": self.estimator.to_dict(),
            "master_seed": self.master_seed,
            "folds": self.folds,
            "step": self.step,
            "n_features_total": self.n_features_total,
            "chosen_size": self.chosen_size,
            "selected_indices": list(self.selected_indices),
            "selected_names": list(self.selected_names),
            "scores_by_size": {
                str(size): {"mean": e["mean"], "fold_scores": list(e["fold_scores"])}
                for size, e in sorted(self.scores_by_size.items(), reverse=True)
            },
        }
        if self.ranking is not None:
            out["ranking"] = {
                "rank": self.ranking.rank.tolist(),
                "trace": [[int(i), float(v)] for i, v in self.ranking.elimination_trace],
            }
        out.update(self.extra)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "SelectedFeatureSet":
        if d.get("format") != SFS_FORMAT:
            raise ValueError(f"not a selected-feature-set artifact (format={d.get('format')!r})")
        known = {
            "format", "target", "estimator", "master_seed", "folds", "step", "n_features_total",
            "chosen_size", "selected_indices", "selected_names", "scores_by_size", "ranking",
        }
        ranking = None
        if "ranking" in d:
            rank = np.asarray(d["ranking"]["rank"], dtype=np.int64)
            ranking = FeatureRanking(
                rank, tuple((int(i), float(v)) for i, v in d["ranking"]["trace"]),
                tuple(int(j) for j in np.flatnonzero(rank == 1)),
            )
        return cls(
            selected_indices=tuple(int(i) for i in d["selected_indices"]),
            selected_names=tuple(d["selected_names"]),
            scores_by_size={
                int(k): {"mean": float(v["mean"]), "fold_scores": [float(s) for s in v["fold_scores"]]}
                for k, v in d["scores_by_size"].items()
            },
            chosen_size=int(d["chosen_size"]),
            estimator=EstimatorSpec.from_dict(d["estimator"]),
            target=d["target"],
            master_seed=int(d["master_seed"]),
            n_features_total=int(d["n_features_total"]),
            folds=int(d["folds"]),
            step=int(d["step"]),
            ranking=ranking,
            extra={k: v for k, v in d.items() if k not in known},
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "SelectedFeatureSet":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


class EliminationError(RuntimeError):
    pass


def _eliminate(X, y, spec: EstimatorSpec, n_target: int, step: int, seed: int,
               on_subset: Optional[Callable] = None, n_jobs: int = 1):
    """Core elimination loop.

    ``on_subset(surviving, model)`` is called once per visited subset size,
    largest first, with a model fitted on exactly those columns.
    """
    d = X.shape[1]
    if not 1 <= n_target <= d:
        raise ValueError(f"n_target must be in [1, {d}], got {n_target}")
    if step < 1:
        raise ValueError("step must be >= 1")
    surviving = list(range(d))
    trace = []
    fit_seed = derive_seed(seed, "fit")
    while True:
        Xs = X[:, surviving]
        done = len(surviving) <= n_target
        model = None
        try:
            if on_subset is not None or (not done and estimators.needs_model_for_importance(spec)):
                model = estimators.fit(spec, Xs, y, fit_seed, n_jobs)
            if on_subset is not None:
                on_subset(tuple(surviving), model)
            if done:
                break
            imp = estimators.importance(spec, Xs, y, derive_seed(seed, "step", len(surviving)), model, n_jobs)
        except (ValueError, FloatingPointError) as exc:
            raise EliminationError(f"estimator failed on a {len(surviving)}-feature subset {surviving}: {exc}") from exc
        n_remove = min(step, len(surviving) - n_target)
        # least important first; equal importance removes the higher index first
        order = sorted(range(len(surviving)), key=lambda j: (imp[j], -surviving[j]))
        drop = set(order[:n_remove])
        for j in order[:n_remove]:
            trace.append((surviving[j], float(imp[j])))
        surviving = [f for j, f in enumerate(surviving) if j not in drop]
    return surviving, trace


def _ranking(d: int, surviving, trace) -> FeatureRanking:
    rank = np.ones(d, dtype=np.int64)
    for pos, (idx, _) in enumerate(trace):
        rank[idx] = len(trace) - pos + 1
    return FeatureRanking(rank, tuple(trace), tuple(sorted(surviving)))


def rfe(X, y, estimator: EstimatorSpec, n_target: int = 1, step: int = 1, seed: int = 0, n_jobs: int = 1) -> FeatureRanking:
    """Recursive feature elimination down to ``n_target`` survivors.

    Each round refits the estimator on the surviving columns, scores their
    importance and drops the ``min(step, remaining - n_target)`` weakest.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    surviving, trace = _eliminate(X, y, estimator, n_target, step, seed, n_jobs=n_jobs)
    return _ranking(X.shape[1], surviving, trace)


def elimination_sizes(d: int, step: int, n_target: int = 1) -> list:
    sizes = [d]
    while sizes[-1] > n_target:
        sizes.append(sizes[-1] - min(step, sizes[-1] - n_target))
    return sizes


def rfecv(X, y, estimator: EstimatorSpec, k: int = 10, step: int = 1, seed: int = 0, n_jobs: int = 1,
          target: str = "valence", feature_names=None) -> SelectedFeatureSet:
    """RFE with k-fold cross-validation to pick the subset size.

    Every fold runs its own elimination on its training part and scores each
    visited subset on its held-out part (R2), so held-out rows never influence
    which features are dropped. The size with the best mean score wins (ties go
    to the smaller size) and a final elimination on all rows picks the features.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n, d = X.shape
    if k < 2 or n < k:
        raise ValueError(f"need 2 <= k <= N, got k={k}, N={n}")
    plan = kfold_partition(n, k, derive_seed(seed, "rfecv-folds"))
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{j}" for j in range(d))

    def run_fold(f):
        tr, te = plan.train_indices(f), plan.test_indices(f)
        if len(te) < 2:
            raise ValueError(f"fold {f} has fewer than 2 samples")
        scores = {}

        def score(surviving, model):
            pred = estimators.predict(estimator, model, X[np.ix_(te, surviving)])
            scores[len(surviving)] = r2_score(y[te], pred) if np.ptp(y[te]) > 0 else 0.0

        _eliminate(X[tr], y[tr], estimator, 1, step, derive_seed(seed, "rfecv-fold", f), on_subset=score)
        return scores

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            per_fold = list(pool.map(run_fold, range(k)))
    else:
        per_fold = [run_fold(f) for f in range(k)]

    scores_by_size = {}
    for size in elimination_sizes(d, step):
        fold_scores = [per_fold[f][size] for f in range(k)]
        scores_by_size[size] = {"mean": float(np.mean(fold_scores)), "fold_scores": fold_scores}
    chosen = None
    for size in sorted(scores_by_size):
        if chosen is None or scores_by_size[size]["mean"] > scores_by_size[chosen]["mean"]:
            chosen = size
    surviving, trace = _eliminate(X, y, estimator, chosen, step, derive_seed(seed, "rfecv-final"), n_jobs=n_jobs)
    ranking = _ranking(d, surviving, trace)
    selected = tuple(sorted(surviving))
    return SelectedFeatureSet(
        selected_indices=selected,
        selected_names=tuple(names[j] for j in selected),
        scores_by_size=scores_by_size,
        chosen_size=chosen,
        estimator=estimator,
        target=target,
        master_seed=seed,
        n_features_total=d,
        folds=k,
        step=step,
        ranking=ranking,
    )


def apply_selection(dataset: Dataset, sfs: SelectedFeatureSet) -> Dataset:
    """Column subset of ``dataset``; refuses artifacts built for other data."""
    idx = list(sfs.selected_indices)
    if any(not 0 <= j < dataset.n_features for j in idx):
        raise ValueError(f"selected index out of range for a {dataset.n_features}-feature dataset")
    names = tuple(dataset.feature_names[j] for j in idx)
    if names != tuple(sfs.selected_names):
        raise ValueError("selected feature names do not match the dataset at those indices")
    return dataset.take_columns(idx)


def compute_reduction_rate(d_original: int, d_selected: int) -> float:
    if not 0 < d_selected <= d_original:
        raise ValueError(f"need 0 < d_selected <= d_original, got {d_selected}, {d_original}")
    return (d_original - d_selected) / d_original
