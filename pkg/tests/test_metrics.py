import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from merselect.metrics import ZeroVarianceWarning, fold_std, kfold_partition, mae, mean_squared_error, r2_score
from oracles import r2_direct


def test_r2_examples():
    assert r2_score([1, 2, 3], [1, 2, 3]) == 1.0
    assert r2_score([1, 2, 3], [2, 2, 2]) == 0.0
    assert r2_score([1, 2, 3], [3, 2, 1]) == pytest.approx(-3.0, abs=1e-12)


def test_r2_zero_variance_truth_is_zero_and_flagged():
    with pytest.warns(ZeroVarianceWarning):
        assert r2_score([4, 4, 4], [1, 2, 3]) == 0.0


def test_r2_rejects_bad_shapes():
    with pytest.raises(ValueError):
        r2_score([1, 2], [1])
    with pytest.raises(ValueError):
        r2_score([], [])


finite = st.floats(-100, 100, allow_nan=False)


@given(arrays(float, st.integers(2, 30), elements=finite), st.data())
def test_r2_matches_direct_formula(y, data):
    p = data.draw(arrays(float, y.shape, elements=finite))
    if np.ptp(y) < 1e-3:
        return
    assert r2_score(y, p) == pytest.approx(r2_direct(y, p), rel=1e-9, abs=1e-9)


@given(arrays(float, st.integers(3, 20), elements=st.floats(-10, 10)), st.floats(0.1, 5), st.floats(-5, 5),
       st.booleans(), st.data())
def test_r2_affine_invariance(y, a, b, flip, data):
    if np.ptp(y) < 1e-2:
        return
    p = data.draw(arrays(float, y.shape, elements=st.floats(-10, 10)))
    a = -a if flip else a
    assert r2_score(a * y + b, a * p + b) == pytest.approx(r2_score(y, p), rel=1e-7, abs=1e-7)


def test_mae_examples():
    assert mae([1, 2, 3], 2) == pytest.approx(2 / 3, abs=1e-12)
    assert mae([5, 5, 5], 5) == 0.0
    assert mae([0, 4], 0) == 2.0


def test_mse():
    assert mean_squared_error([0, 0], [1, 3]) == 5.0


def test_fold_std_examples():
    assert fold_std([0.3] * 10) == 0.0
    assert fold_std([0, 1]) == 0.5


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=20))
def test_fold_std_is_population_std(scores):
    m = sum(scores) / len(scores)
    expected = math.sqrt(sum((s - m) ** 2 for s in scores) / len(scores))
    assert fold_std(scores) == pytest.approx(expected, abs=1e-12)


def test_kfold_examples():
    assert kfold_partition(10, 10, 0).sizes() == [1] * 10
    assert kfold_partition(23, 10, 5).sizes() == [3, 3, 3, 2, 2, 2, 2, 2, 2, 2]


@given(st.integers(2, 200).flatmap(lambda n: st.tuples(st.just(n), st.integers(2, n))), st.integers(0, 2**32))
def test_kfold_partition_laws(nk, seed):
    n, k = nk
    plan = kfold_partition(n, k, seed)
    tests = [plan.test_indices(f) for f in range(k)]
    allidx = np.concatenate(tests)
    assert sorted(allidx.tolist()) == list(range(n))
    sizes = plan.sizes()
    assert max(sizes) - min(sizes) <= 1
    assert sizes == sorted(sizes, reverse=True)
    for f in range(k):
        assert set(plan.train_indices(f).tolist()).isdisjoint(tests[f].tolist())


def test_kfold_rejects_bad_k():
    for n, k in ((5, 1), (5, 6)):
        with pytest.raises(ValueError):
            kfold_partition(n, k)


def test_kfold_is_seeded():
    a = kfold_partition(50, 5, 1).assignments
    assert np.array_equal(a, kfold_partition(50, 5, 1).assignments)
    assert not np.array_equal(a, kfold_partition(50, 5, 2).assignments)


def test_no_warning_on_regular_r2():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        r2_score([1, 2], [1, 2])
