"""Random forest regression built from CART trees.

The ensemble prediction is the arithmetic mean of the tree predictions. Each
tree is grown on a bootstrap resample drawn from a seed derived from the
master seed and the tree index, so forests are reproducible regardless of how
tree construction is scheduled.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional, Union

import numpy as np

from . import _cart
from .metrics import mae
from .rng import derive_seed, numpy_rng


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    criterion: str = "squared_error"
    max_depth: Optional[int] = None
    min_samples_split: int = 2
    features_per_split: Union[int, str] = "all"
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.criterion != "squared_error":
            raise ValueError("only the squared_error criterion is supported")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.features_per_split != "all" and (
            not isinstance(self.features_per_split, (int, np.integer)) or self.features_per_split < 1
        ):
            raise ValueError("features_per_split must be 'all' or a positive count")

    def resolved_features(self, d: int) -> int:
        return d if self.features_per_split == "all" else min(int(self.features_per_split), d)


@dataclass(frozen=True)
class Tree:
    """Flat-array regression tree; ``feature[i] == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    weight: np.ndarray
    sse: np.ndarray
    n_features: int

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] < 0

    def impurity_decrease(self) -> np.ndarray:
        """Total SSE reduction attributed to each feature."""
        out = np.zeros(self.n_features)
        internal = np.flatnonzero(self.feature >= 0)
        gain = self.sse[internal] - self.sse[self.left[internal]] - self.sse[self.right[internal]]
        np.add.at(out, self.feature[internal], gain)
        return out

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": [float(t) for t in self.threshold],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": [float(v) for v in self.value],
            "weight": [float(v) for v in self.weight],
            "sse": [float(v) for v in self.sse],
        }

    @classmethod
    def from_dict(cls, d: dict, n_features: int) -> "Tree":
        return cls(
            np.asarray(d["feature"], np.int64), np.asarray(d["threshold"], float),
            np.asarray(d["left"], np.int64), np.asarray(d["right"], np.int64),
            np.asarray(d["value"], float), np.asarray(d["weight"], float),
            np.asarray(d["sse"], float), n_features,
        )


@dataclass(frozen=True)
class ForestModel:
    trees: tuple
    params: ForestParams
    tree_seeds: tuple
    oob_indices: tuple
    n_features: int
    seed: int


def _as_xy(X, y=None):
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    if y is None:
        return X
    y = np.ascontiguousarray(y, dtype=float).ravel()
    if y.shape[0] != X.shape[0]:
        raise ValueError("X and y have different lengths")
    if X.shape[0] < 1:
        raise ValueError("need at least one sample")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite values in X or y")
    return X, y


def _grow(X, y, w, presorted, params: ForestParams, seed: int) -> Tree:
    max_depth = -1 if params.max_depth is None else int(params.max_depth)
    arrays = _cart.build_tree(
        X, y, w, presorted, max_depth, int(params.min_samples_split),
        params.resolved_features(X.shape[1]), np.uint64(seed),
    )
    return Tree(*arrays, n_features=X.shape[1])


def _presort(X):
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable"), dtype=np.int64)


def fit_tree(X, y, params: Optional[ForestParams] = None, seed: int = 0, sample_weight=None) -> Tree:
    """Greedy CART on all rows (no resampling).

    Each node takes the (feature, threshold) pair with the lowest weighted child
    SSE, thresholds being midpoints between consecutive distinct values. Ties go
    to the lower feature index, then the lower threshold. Growth stops at pure
    nodes, nodes lighter than ``min_samples_split``, ``max_depth``, or when no
    split lowers the SSE.
    """
    params = params or ForestParams(n_trees=1, bootstrap=False)
    X, y = _as_xy(X, y)
    w = np.ones(len(y)) if sample_weight is None else np.ascontiguousarray(sample_weight, dtype=float)
    return _grow(X, y, w, _presort(X), params, derive_seed(seed, "tree-features"))


def predict_tree(tree: Tree, x) -> float:
    """Route one sample: ``x[feature] <= threshold`` goes left."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != tree.n_features:
        raise ValueError(f"expected {tree.n_features} features, got {x.shape[0]}")
    node = 0
    while tree.feature[node] >= 0:
        node = tree.left[node] if x[tree.feature[node]] <= tree.threshold[node] else tree.right[node]
    return float(tree.value[node])


def predict_tree_batch(tree: Tree, X) -> np.ndarray:
    X = _as_xy(X)
    if X.shape[1] != tree.n_features:
        raise ValueError(f"expected {tree.n_features} features, got {X.shape[1]}")
    return _cart.predict_tree_rows(tree.feature, tree.threshold, tree.left, tree.right, tree.value, X)


def _bootstrap(n: int, seed: int):
    rng = np.random.Generator(np.random.PCG64(seed))
    counts = np.bincount(rng.integers(0, n, size=n), minlength=n).astype(float)
    return counts, np.flatnonzero(counts == 0)


def train_forest(X, y, params: ForestParams = ForestParams(), seed: int = 0, n_jobs: int = 1) -> ForestModel:
    X, y = _as_xy(X, y)
    n = X.shape[0]
    presorted = _presort(X)
    seeds = tuple(derive_seed(seed, "tree", i) for i in range(params.n_trees))

    def grow(i):
        if params.bootstrap:
            w, oob = _bootstrap(n, seeds[i])
        else:
            w, oob = np.ones(n), np.empty(0, dtype=np.int64)
        return _grow(X, y, w, presorted, params, derive_seed(seeds[i], "features")), oob

    if n_jobs > 1 and params.n_trees > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(grow, range(params.n_trees)))
    else:
        results = [grow(i) for i in range(params.n_trees)]
    return ForestModel(
        trees=tuple(t for t, _ in results), params=params, tree_seeds=seeds,
        oob_indices=tuple(o for _, o in results), n_features=X.shape[1], seed=seed,
    )


def _tree_predictions(model: ForestModel, X) -> np.ndarray:
    X = _as_xy(X)
    if X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {X.shape[1]}")
    return np.stack([
        _cart.predict_tree_rows(t.feature, t.threshold, t.left, t.right, t.value, X) for t in model.trees
    ])


def predict_forest(model: ForestModel, X) -> np.ndarray:
    """Ensemble mean, accumulated in tree-index order then divided by the tree count."""
    preds = _tree_predictions(model, X)
    total = np.zeros(preds.shape[1])
    for row in preds:
        total += row
    return total / len(model.trees)


def _oob_mae(model: ForestModel, X, y, seed: int):
    """Per-tree out-of-bag MAE, unpermuted and with each feature permuted."""
    if not model.params.bootstrap:
        raise ValueError("MAE importance needs out-of-bag rows; train with bootstrap=True")
    X, y = _as_xy(X, y)
    d = X.shape[1]
    base, permuted = [], []
    for i, (tree, oob) in enumerate(zip(model.trees, model.oob_indices)):
        if len(oob) == 0:
            continue
        rng = numpy_rng(seed, "oob-permute", i)
        Xo = np.array(X[oob])
        yo = y[oob]
        pred = predict_tree_batch(tree, Xo)
        base.append(mae(yo, pred))
        row = np.empty(d)
        for j in range(d):
            saved = Xo[:, j].copy()
            Xo[:, j] = saved[rng.permutation(len(oob))]
            row[j] = mae(yo, predict_tree_batch(tree, Xo))
            Xo[:, j] = saved
        permuted.append(row)
    if not base:
        raise ValueError("no tree has out-of-bag rows")
    return np.asarray(base), np.vstack(permuted)


@dataclass(frozen=True)
class OobMaeSummary:
    target_mae: float
    baseline_oob_mae: float
    permuted_oob_mae: np.ndarray
    importance: np.ndarray


def oob_mae_summary(model: ForestModel, X, y, seed: int = 0) -> OobMaeSummary:
    """Out-of-bag MAE quantities behind the MAE importance mode.

    ``target_mae`` is the spread of the targets around their own mean, the
    data-only baseline; ``baseline_oob_mae`` is the mean per-tree OOB error;
    ``permuted_oob_mae[j]`` is the same error with feature j shuffled among the
    OOB rows. ``importance`` is their difference.
    """
    X, y = _as_xy(X, y)
    base, permuted = _oob_mae(model, X, y, seed)
    imp = (permuted - base[:, None]).mean(axis=0)
    return OobMaeSummary(mae(y, y.mean()), float(base.mean()), permuted.mean(axis=0), imp)


def forest_feature_importance(model: ForestModel, X=None, y=None, mode: str = "impurity", seed: int = 0) -> np.ndarray:
    """Feature importance, either impurity decrease (sums to 1) or OOB MAE increase."""
    if mode == "impurity":
        per_tree = np.vstack([t.impurity_decrease() / t.weight[0] for t in model.trees])
        total = per_tree.mean(axis=0)
        s = total.sum()
        return total / s if s > 0 else total
    if mode == "mae":
        if X is None or y is None:
            raise ValueError("MAE importance needs X and y")
        return oob_mae_summary(model, X, y, seed).importance
    raise ValueError(f"unknown importance mode {mode!r}")


def forest_to_dict(model: ForestModel) -> dict:
    return {
        "format": "merselect.forest/1",
        "params": asdict(model.params),
        "seed": model.seed,
        "n_features": model.n_features,
        "tree_seeds": list(model.tree_seeds),
        "oob_indices": [o.tolist() for o in model.oob_indices],
        "trees": [t.to_dict() for t in model.trees],
    }


def forest_from_dict(d: dict) -> ForestModel:
    n_features = int(d["n_features"])
    return ForestModel(
        trees=tuple(Tree.from_dict(t, n_features) for t in d["trees"]),
        params=ForestParams(**d["params"]),
        tree_seeds=tuple(int(s) for s in d["tree_seeds"]),
        oob_indices=tuple(np.asarray(o, np.int64) for o in d["oob_indices"]),
        n_features=n_features,
        seed=int(d["seed"]),
    )


def save_forest(model: ForestModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(forest_to_dict(model), fh)


def load_forest(path) -> ForestModel:
    with open(path, encoding="utf-8") as fh:
        return forest_from_dict(json.load(fh))
