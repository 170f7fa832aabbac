"""Cross-validation and the complete-vs-selected feature set benchmark."""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import estimators
from .dataset import TARGETS, Dataset
from .estimators import EstimatorSpec
from .forest import ForestParams
from .metrics import FoldPlan, fold_std, kfold_partition, mean_squared_error, r2_score
from .rng import derive_seed
from .selection import apply_selection, compute_reduction_rate
from .svr import SvrParams

MODEL_NAMES = {"svr": "Support Vector Regression (SVR)", "forest": "Random Forest (RF)"}


class BenchmarkError(ValueError):
    pass


@dataclass(frozen=True)
class CvReport:
    """Per-fold R2 scores and squared-error losses.

    ``cv_loss`` is the squared error averaged over all N out-of-fold
    predictions; it equals the mean of ``fold_losses`` when folds are equal.
    """

    fold_scores: tuple
    mean_score: float
    std_score: float
    fold_losses: tuple
    cv_loss: float
    plan_seed: int
    k: int
    oof_predictions: np.ndarray
    zero_variance_folds: tuple = ()
    elapsed: tuple = ()


def cross_validate(dataset: Dataset, estimator: EstimatorSpec, k: int = 10, seed: int = 0, target: str = "valence",
                   plan: Optional[FoldPlan] = None, n_jobs: int = 1) -> CvReport:
    """Train on each fold's complement, score R2 and MSE on the fold."""
    X = dataset.X
    y = dataset.target(target)
    n = dataset.n_samples
    if plan is None:
        if n < k:
            raise ValueError(f"{n} samples cannot be split into {k} folds")
        plan = kfold_partition(n, k, derive_seed(seed, "cv-plan"))
    elif len(plan.assignments) != n:
        raise ValueError("fold plan does not match the dataset size")

    def run(f):
        tr, te = plan.train_indices(f), plan.test_indices(f)
        t0 = time.perf_counter()
        try:
            model = estimators.fit(estimator, X[tr], y[tr], derive_seed(seed, "cv-fold", f))
            pred = estimators.predict(estimator, model, X[te])
        except ValueError as exc:
            raise ValueError(f"fold {f}: {exc}") from exc
        degenerate = bool(np.ptp(y[te]) == 0)
        score = 0.0 if degenerate else r2_score(y[te], pred)
        return te, pred, score, mean_squared_error(y[te], pred), degenerate, time.perf_counter() - t0

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run, range(plan.k)))
    else:
        results = [run(f) for f in range(plan.k)]
    oof = np.empty(n)
    for te, pred, *_ in results:
        oof[te] = pred
    scores = tuple(r[2] for r in results)
    return CvReport(
        fold_scores=scores,
        mean_score=float(np.mean(scores)),
        std_score=fold_std(scores),
        fold_losses=tuple(r[3] for r in results),
        cv_loss=mean_squared_error(y, oof),
        plan_seed=plan.seed,
        k=plan.k,
        oof_predictions=oof,
        zero_variance_folds=tuple(f for f, r in enumerate(results) if r[4]),
        elapsed=tuple(r[5] for r in results),
    )


@dataclass(frozen=True)
class BenchmarkConfig:
    models: tuple = ("svr", "forest")
    targets: tuple = TARGETS
    k: int = 10
    seed: int = 0
    svr_params: SvrParams = SvrParams()
    forest_params: ForestParams = ForestParams()
    n_jobs: int = 1

    def estimator(self, kind: str) -> EstimatorSpec:
        return EstimatorSpec(kind, self.svr_params if kind == "svr" else self.forest_params)

    def to_dict(self) -> dict:
        return {
            "models": list(self.models),
            "targets": list(self.targets),
            "k": self.k,
            "seed": self.seed,
            "svr_params": asdict(self.svr_params),
            "forest_params": asdict(self.forest_params),
        }


@dataclass(frozen=True)
class BenchmarkRow:
    model: str
    target: str
    feature_set: str
    n_features: int
    score: float
    std: float
    fold_scores: tuple
    fold_losses: tuple
    cv_loss: float
    plan_seed: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fold_scores"] = list(self.fold_scores)
        d["fold_losses"] = list(self.fold_losses)
        return d


@dataclass(frozen=True)
class BenchmarkReport:
    rows: tuple
    deltas: dict
    reduction_rates: dict
    n_features_total: int
    n_samples: int
    config: BenchmarkConfig
    extra: dict = field(default_factory=dict)

    def row(self, model: str, target: str, feature_set: str) -> BenchmarkRow:
        for r in self.rows:
            if (r.model, r.target, r.feature_set) == (model, target, feature_set):
                return r
        raise KeyError((model, target, feature_set))

    def to_dict(self) -> dict:
        out = {
            "format": "merselect.benchmark/1",
            "n_samples": self.n_samples,
            "n_features_total": self.n_features_total,
            "config": self.config.to_dict(),
            "rows": [r.to_dict() for r in self.rows],
            "deltas": [
                {"model": m, "target": t, "sfs_minus_cfs": v} for (m, t), v in self.deltas.items()
            ],
            "reduction_rates": [
                {"model": m, "target": t, "n_selected": n, "rate": v}
                for (m, t), (n, v) in self.reduction_rates.items()
            ],
        }
        out.update(self.extra)
        return out


def benchmark(cfs: Dataset, sfs_artifacts: dict, config: BenchmarkConfig = BenchmarkConfig()) -> BenchmarkReport:
    """Cross-validate every (model, target) cell on the complete and the selected features.

    ``sfs_artifacts`` maps ``(model, target)`` to a SelectedFeatureSet. Both
    feature sets of a cell share one fold plan and one set of hyperparameters.
    """
    cells = [(m, t) for m in config.models for t in config.targets]
    views = {}
    for m, t in cells:
        sfs = sfs_artifacts.get((m, t))
        if sfs is None:
            raise BenchmarkError(f"no selected feature set for model={m}, target={t}")
        if sfs.n_features_total != cfs.n_features:
            raise BenchmarkError(
                f"artifact for {m}/{t} was built on {sfs.n_features_total} features, dataset has {cfs.n_features}"
            )
        try:
            views[(m, t, "SFS")] = apply_selection(cfs, sfs)
        except ValueError as exc:
            raise BenchmarkError(f"artifact for {m}/{t}: {exc}") from exc
        views[(m, t, "CFS")] = cfs

    plan = kfold_partition(cfs.n_samples, config.k, derive_seed(config.seed, "benchmark-plan"))
    keys = [(m, t, fs) for m, t in cells for fs in ("CFS", "SFS")]

    def run(key):
        m, t, fs = key
        return cross_validate(views[key], config.estimator(m), config.k, derive_seed(config.seed, "benchmark", m, t),
                              target=t, plan=plan)

    if config.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=config.n_jobs) as pool:
            reports = dict(zip(keys, pool.map(run, keys)))
    else:
        reports = {key: run(key) for key in keys}

    rows = []
    for key in keys:
        m, t, fs = key
        rep = reports[key]
        rows.append(BenchmarkRow(
            model=m, target=t, feature_set=fs, n_features=views[key].n_features,
            score=rep.mean_score, std=rep.std_score, fold_scores=rep.fold_scores,
            fold_losses=rep.fold_losses, cv_loss=rep.cv_loss, plan_seed=rep.plan_seed,
        ))
    deltas = {
        (m, t): reports[(m, t, "SFS")].mean_score - reports[(m, t, "CFS")].mean_score for m, t in cells
    }
    rates = {
        (m, t): (views[(m, t, "SFS")].n_features,
                 compute_reduction_rate(cfs.n_features, views[(m, t, "SFS")].n_features))
        for m, t in cells
    }
    return BenchmarkReport(tuple(rows), deltas, rates, cfs.n_features, cfs.n_samples, config)
