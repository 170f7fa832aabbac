import numpy as np
import pytest

from merselect.dataset import Dataset, SyntheticSpec, generate_synthetic
from merselect.estimators import EstimatorSpec
from merselect.evaluation import BenchmarkConfig, BenchmarkError, benchmark, cross_validate
from merselect.forest import ForestParams
from merselect.metrics import fold_std, kfold_partition
from merselect.selection import SelectedFeatureSet

FOREST = EstimatorSpec("forest", ForestParams(n_trees=20))


def _dataset(n=60, d=3, seed=0):
    r = np.random.default_rng(seed)
    X = r.normal(size=(n, d))
    return Dataset([f"s{i}" for i in range(n)], [f"f{j}" for j in range(d)], X,
                   np.tanh(X[:, 0]), np.tanh(X[:, 1] - X[:, 2]))


def test_noiseless_identity_target_scores_near_one():
    n = 100
    x = np.repeat(np.arange(50, dtype=float), 2)
    ds = Dataset([str(i) for i in range(n)], ["x"], x[:, None], x / 50, np.zeros(n))
    rep = cross_validate(ds, EstimatorSpec("forest", ForestParams(n_trees=10)), k=10)
    assert rep.mean_score > 0.95
    assert len(rep.fold_scores) == 10 and len(rep.fold_losses) == 10


def test_constant_target_gives_zero_scores():
    ds = _dataset()
    ds = Dataset(ds.song_ids, ds.feature_names, ds.X, np.full(60, 0.3), ds.arousal)
    rep = cross_validate(ds, FOREST, k=5)
    assert rep.fold_scores == (0.0,) * 5
    assert rep.zero_variance_folds == tuple(range(5))


def test_report_summaries_recomputable():
    rep = cross_validate(_dataset(), FOREST, k=10, seed=3)
    assert rep.mean_score == float(np.mean(rep.fold_scores))
    assert rep.std_score == fold_std(rep.fold_scores)
    y = _dataset().valence
    assert rep.cv_loss == pytest.approx(np.mean((y - rep.oof_predictions) ** 2), rel=1e-12)
    # equal fold sizes: pooled loss equals the mean fold loss
    assert rep.cv_loss == pytest.approx(np.mean(rep.fold_losses), rel=1e-12)


def test_cross_validate_schedule_independent():
    a = cross_validate(_dataset(), FOREST, k=6, seed=1, target="arousal")
    b = cross_validate(_dataset(), FOREST, k=6, seed=1, target="arousal", n_jobs=3)
    assert a.fold_scores == b.fold_scores and a.fold_losses == b.fold_losses


def test_cross_validate_errors():
    ds = _dataset(n=5)
    with pytest.raises(ValueError):
        cross_validate(ds, FOREST, k=10)
    with pytest.raises(ValueError, match="fold plan"):
        cross_validate(ds, FOREST, k=2, plan=kfold_partition(6, 2, 0))


def test_estimator_failure_names_fold(monkeypatch):
    from merselect import estimators

    def broken(*args, **kwargs):
        raise ValueError("solver exploded")

    monkeypatch.setattr(estimators, "fit", broken)
    with pytest.raises(ValueError, match="fold 0: solver exploded"):
        cross_validate(_dataset(n=12), FOREST, k=3)


# -- benchmark -------------------------------------------------------------------------

def _artifact(model, target, idx, names, d):
    spec = EstimatorSpec(model)
    return SelectedFeatureSet(tuple(idx), tuple(names[j] for j in idx), {len(idx): {"mean": 0.0, "fold_scores": []}},
                              len(idx), spec, target, 0, d, 10, 1)


def _artifacts(ds, idx):
    return {(m, t): _artifact(m, t, idx, ds.feature_names, ds.n_features)
            for m in ("svr", "forest") for t in ("valence", "arousal")}


def test_benchmark_eight_rows_and_shared_plans():
    ds = _dataset(n=40, d=4)
    config = BenchmarkConfig(k=4, forest_params=ForestParams(n_trees=10), seed=5)
    report = benchmark(ds, _artifacts(ds, [0, 1]), config)
    assert len(report.rows) == 8
    assert {(r.model, r.target, r.feature_set) for r in report.rows} == {
        (m, t, f) for m in ("svr", "forest") for t in ("valence", "arousal") for f in ("CFS", "SFS")}
    for (m, t), delta in report.deltas.items():
        cfs, sfs = report.row(m, t, "CFS"), report.row(m, t, "SFS")
        assert cfs.n_features == 4 and sfs.n_features == 2
        assert cfs.plan_seed == sfs.plan_seed
        assert delta == sfs.score - cfs.score
        assert report.reduction_rates[(m, t)] == (2, 0.5)


def test_benchmark_delta_arithmetic_with_table_numbers():
    assert 0.645 - 0.502 == pytest.approx(0.143, abs=1e-12)


def test_benchmark_is_deterministic():
    ds = _dataset(n=30, d=3)
    config = BenchmarkConfig(models=("forest",), k=3, forest_params=ForestParams(n_trees=5))
    a = benchmark(ds, _artifacts(ds, [2]), config).to_dict()
    b = benchmark(ds, _artifacts(ds, [2]), BenchmarkConfig(models=("forest",), k=3,
                                                           forest_params=ForestParams(n_trees=5), n_jobs=4)).to_dict()
    assert a == b


def test_benchmark_missing_or_mismatched_artifact():
    ds = _dataset(n=30, d=3)
    arts = _artifacts(ds, [0])
    del arts[("svr", "arousal")]
    with pytest.raises(BenchmarkError, match="svr, target=arousal"):
        benchmark(ds, arts)
    other = _dataset(n=30, d=5)
    with pytest.raises(BenchmarkError, match="built on 5 features"):
        benchmark(ds, _artifacts(other, [0]))
    arts = _artifacts(ds, [0])
    arts[("forest", "valence")] = _artifact("forest", "valence", [0], ("zz", "f1", "f2"), 3)
    with pytest.raises(BenchmarkError, match="forest/valence"):
        benchmark(ds, arts)


def test_selected_features_help_on_sparse_synthetic():
    ds, info = generate_synthetic(SyntheticSpec(n_samples=120, n_informative=3, n_noise=30), seed=0)
    idx = list(info)
    config = BenchmarkConfig(models=("svr",), targets=("valence",), k=5)
    report = benchmark(ds, {("svr", "valence"): _artifact("svr", "valence", idx, ds.feature_names, ds.n_features)},
                       config)
    assert report.deltas[("svr", "valence")] > 0
