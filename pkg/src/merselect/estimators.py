"""Uniform fit / predict / importance interface over the two regressors."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Union

import numpy as np

from .forest import ForestParams, forest_feature_importance, predict_forest, train_forest
from .rng import derive_seed
from .svr import SvrParams, predict_svr, svr_feature_importance, train_svr

KINDS = ("svr", "forest")
IMPORTANCE_MODES = {"svr": ("permutation", "weights"), "forest": ("impurity", "mae")}


@dataclass(frozen=True)
class EstimatorSpec:
    kind: str = "forest"
    params: Union[SvrParams, ForestParams, None] = None
    importance_mode: Optional[str] = None
    importance_folds: int = 3

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown estimator kind {self.kind!r}")
        if self.params is None:
            object.__setattr__(self, "params", SvrParams() if self.kind == "svr" else ForestParams())
        expected = SvrParams if self.kind == "svr" else ForestParams
        if not isinstance(self.params, expected):
            raise TypeError(f"{self.kind} estimator needs {expected.__name__}")
        if self.importance_mode is None:
            object.__setattr__(self, "importance_mode", IMPORTANCE_MODES[self.kind][0])
        if self.importance_mode not in IMPORTANCE_MODES[self.kind]:
            raise ValueError(f"importance mode {self.importance_mode!r} not valid for {self.kind}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": asdict(self.params),
            "importance_mode": self.importance_mode,
            "importance_folds": self.importance_folds,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EstimatorSpec":
        params_cls = SvrParams if d["kind"] == "svr" else ForestParams
        return cls(d["kind"], params_cls(**d["params"]), d.get("importance_mode"), d.get("importance_folds", 3))


def fit(spec: EstimatorSpec, X, y, seed: int, n_jobs: int = 1):
    if spec.kind == "svr":
        return train_svr(X, y, spec.params, seed)
    return train_forest(X, y, spec.params, seed, n_jobs=n_jobs)


def predict(spec: EstimatorSpec, model, X) -> np.ndarray:
    if spec.kind == "svr":
        return predict_svr(model, X)
    return predict_forest(model, X)


def needs_model_for_importance(spec: EstimatorSpec) -> bool:
    return spec.kind == "forest"


def importance(spec: EstimatorSpec, X, y, seed: int, model=None, n_jobs: int = 1) -> np.ndarray:
    """Importance scores used to rank features; larger means more useful."""
    if spec.kind == "svr":
        return svr_feature_importance(
            spec.params, X, y, folds=spec.importance_folds, seed=derive_seed(seed, "importance"),
            method=spec.importance_mode,
        )
    if model is None:
        model = fit(spec, X, y, seed, n_jobs)
    return forest_feature_importance(model, X, y, mode=spec.importance_mode, seed=derive_seed(seed, "importance"))
