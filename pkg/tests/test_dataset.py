import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import write_deam_fixture
from merselect.dataset import (AdapterConfig, Dataset, DatasetError, FeatureSeries, SyntheticSpec, apply_zscore,
                               clip_window, generate_synthetic, group_features_by_family, load_canonical, load_deam,
                               read_deam, rescale_targets, save_canonical, split, split_sizes, temporal_mean,
                               zscore_normalize)
from oracles import zscore_direct


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


# -- canonical files -----------------------------------------------------------

def test_load_canonical_three_rows(tmp_path):
    p = _write(tmp_path / "d.csv", "song_id,b,a,valence,arousal\ns1,1,2,0.1,0.2\ns2,3,4,-0.5,0\ns3,5,6,1,-1\n")
    ds = load_canonical(p)
    assert (ds.n_samples, ds.n_features) == (3, 2)
    assert ds.feature_names == ("b", "a")
    np.testing.assert_array_equal(ds.X[:, 0], [1, 3, 5])
    np.testing.assert_array_equal(ds.arousal, [0.2, 0, -1])


def test_load_canonical_rescales_one_to_nine(tmp_path):
    p = _write(tmp_path / "d.csv", "song_id,f,valence,arousal\na,0,5,1\nb,0,9,3\n")
    ds = load_canonical(p)
    np.testing.assert_allclose(ds.valence, [0.0, 1.0])
    np.testing.assert_allclose(ds.arousal, [-1.0, -0.5])


def test_rescale_hand_oracle():
    vals = np.array([1.0, 2.0, 5.0, 7.5, 9.0])
    np.testing.assert_allclose(rescale_targets(vals), (vals - 5) / 4, atol=1e-15)


def test_rescale_out_of_range_names_row():
    with pytest.raises(DatasetError, match="row 2"):
        rescale_targets(np.array([2.0, 11.0]))


@pytest.mark.parametrize("cell", ["NaN", "abc", "inf"])
def test_load_canonical_rejects_bad_cell_with_position(tmp_path, cell):
    p = _write(tmp_path / "d.csv", f"song_id,f,g,valence,arousal\na,1,2,0,0\nb,3,{cell},0,0\n")
    with pytest.raises(DatasetError, match=r"row 3, column 3"):
        load_canonical(p)


def test_load_canonical_structural_errors(tmp_path):
    with pytest.raises(DatasetError, match="header"):
        load_canonical(_write(tmp_path / "h.csv", "id,f,valence,arousal\na,1,0,0\n"))
    with pytest.raises(DatasetError, match="row 3"):
        load_canonical(_write(tmp_path / "r.csv", "song_id,f,valence,arousal\na,1,0,0\nb,1,0\n"))
    with pytest.raises(DatasetError, match="duplicate song_id"):
        load_canonical(_write(tmp_path / "u.csv", "song_id,f,valence,arousal\na,1,0,0\na,2,0,0\n"))


@given(arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 4)),
              elements=st.floats(-1e6, 1e6, allow_subnormal=False)), st.data())
def test_canonical_round_trip_is_exact(tmp_path_factory, X, data):
    n = X.shape[0]
    v = data.draw(arrays(float, n, elements=st.floats(-1, 1)))
    a = data.draw(arrays(float, n, elements=st.floats(-1, 1)))
    ds = Dataset([f"s{i}" for i in range(n)], [f"f{j}" for j in range(X.shape[1])], X, v, a)
    p = tmp_path_factory.mktemp("rt") / "d.csv"
    save_canonical(ds, p)
    back = load_canonical(p)
    assert back.song_ids == ds.song_ids and back.feature_names == ds.feature_names
    for name in ("X", "valence", "arousal"):
        np.testing.assert_array_equal(getattr(back, name), getattr(ds, name))
    save_canonical(back, p.with_name("again.csv"))
    assert p.read_bytes() == p.with_name("again.csv").read_bytes()


def test_dataset_invariants():
    with pytest.raises(DatasetError, match="duplicate"):
        Dataset(["a", "a"], ["f"], [[1], [2]], [0, 0], [0, 0])
    with pytest.raises(DatasetError, match="non-finite"):
        Dataset(["a"], ["f"], [[np.nan]], [0], [0])
    ds = Dataset(["a"], ["f"], [[1.0]], [0], [0])
    with pytest.raises(ValueError):
        ds.X[0, 0] = 2.0


# -- windowing and averaging ---------------------------------------------------

def _series(times, d=1):
    t = np.asarray(times, float)
    return FeatureSeries("s", t, np.arange(len(t) * d, dtype=float).reshape(len(t), d), [f"f{j}" for j in range(d)])


def test_clip_window_closed_interval():
    out = clip_window(_series([14.5, 15.0, 44.5, 45.0]), 15.0, 44.5)
    np.testing.assert_array_equal(out.frame_times, [15.0, 44.5])
    np.testing.assert_array_equal(out.frames[:, 0], [1, 2])


def test_clip_window_frame_count():
    t = np.round(np.arange(0, 45.01, 0.5), 3)
    assert len(t) == 91
    assert len(clip_window(_series(t), 15.0, 44.5)) == 60


def test_clip_window_wide_window_is_identity():
    s = _series([0.0, 1.0, 2.0], d=2)
    out = clip_window(s, 0, 100)
    np.testing.assert_array_equal(out.frames, s.frames)
    np.testing.assert_array_equal(out.frame_times, s.frame_times)


def test_clip_window_empty_names_song():
    with pytest.raises(DatasetError, match="song s"):
        clip_window(_series([1.0, 2.0]), 10, 20)


@given(st.lists(st.floats(0, 100), min_size=1, max_size=30, unique=True), st.floats(0, 50), st.floats(0, 50),
       st.floats(0, 10), st.floats(0, 10))
def test_clip_window_subset_and_monotone(times, t0, width, grow_lo, grow_hi):
    s = _series(sorted(times))
    t1 = t0 + width
    inner = set(s.frame_times[(s.frame_times >= t0) & (s.frame_times <= t1)].tolist())
    if not inner:
        return
    small = clip_window(s, t0, t1)
    big = clip_window(s, t0 - grow_lo, t1 + grow_hi)
    assert set(small.frame_times.tolist()) == inner
    assert set(small.frame_times.tolist()) <= set(big.frame_times.tolist()) <= set(s.frame_times.tolist())


def test_frame_series_requires_increasing_times():
    with pytest.raises(DatasetError, match="strictly increasing"):
        _series([0.0, 0.0])


def test_temporal_mean_examples():
    def mean_of(frames):
        frames = np.asarray(frames, float)
        return temporal_mean(FeatureSeries("s", np.arange(len(frames), dtype=float), frames, ["a", "b"]))

    np.testing.assert_array_equal(mean_of([[1, 3], [3, 5]]), [2, 4])
    np.testing.assert_array_equal(mean_of([[7, 7]]), [7, 7])
    np.testing.assert_array_equal(mean_of([[1, 0], [2, 0], [3, 0]]), [2, 0])


# -- z-score -------------------------------------------------------------------

def test_zscore_examples():
    Xn, stats = zscore_normalize(np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]))
    np.testing.assert_allclose(Xn[:, 0], [-1.22474487, 0, 1.22474487], atol=1e-8)
    np.testing.assert_allclose(Xn[:, 0], zscore_direct([1, 2, 3]), atol=1e-15)
    assert stats.stds[0] == pytest.approx(np.sqrt(2 / 3), abs=1e-15)
    np.testing.assert_array_equal(Xn[:, 1], [0, 0, 0])
    assert stats.constant_mask.tolist() == [False, True]
    assert stats.stds[1] == 0.0


matrices = arrays(float, st.tuples(st.integers(2, 25), st.integers(1, 6)), elements=st.floats(-1e3, 1e3))


@given(matrices)
def test_zscore_column_laws(X):
    Xn, stats = zscore_normalize(X)
    assert np.all(stats.stds >= 0)
    live = ~stats.constant_mask
    # columns whose spread is tiny relative to their magnitude lose precision in any float z-score
    scale = np.max(np.abs(X), axis=0)
    ok = live & (np.ptp(X, axis=0) > 1e-6 * np.maximum(scale, 1))
    assert np.all(np.abs(Xn[:, ok].mean(axis=0)) < 1e-9)
    assert np.all(np.abs(Xn[:, ok].std(axis=0) - 1) < 1e-9)
    assert np.all(Xn[:, stats.constant_mask] == 0)
    again, _ = zscore_normalize(Xn)
    np.testing.assert_allclose(again[:, ok], Xn[:, ok], atol=1e-9)
    np.testing.assert_allclose(apply_zscore(X, stats), Xn, atol=1e-12)


def test_zscore_standardized_column_unchanged():
    col = np.array(zscore_direct([3.0, 1.0, 4.0, 1.0, 5.0]))
    Xn, _ = zscore_normalize(col[:, None])
    np.testing.assert_allclose(Xn[:, 0], col, atol=1e-12)


# -- split ---------------------------------------------------------------------

def _toy(n, d=2):
    return Dataset([f"s{i}" for i in range(n)], [f"f{j}" for j in range(d)], np.arange(n * d, dtype=float).reshape(n, d),
                   np.zeros(n), np.zeros(n))


def test_split_examples():
    sel, val = split(_toy(10), 0.7, 0)
    assert (sel.n_samples, val.n_samples) == (7, 3)
    again = split(_toy(10), 0.7, 0)
    assert again[0].song_ids == sel.song_ids
    assert split_sizes(1802, 0.7) == (1261, 541)


@given(st.integers(2, 200), st.sampled_from([0.5, 0.7, 0.9]), st.integers(0, 2**32))
def test_split_partition_law(n, ratio, seed):
    ds = _toy(n, 1)
    expected = int(np.floor(ratio * n + 1e-9))
    if expected in (0, n):
        with pytest.raises(ValueError):
            split(ds, ratio, seed)
        return
    sel, val = split(ds, ratio, seed)
    assert sel.n_samples == expected and val.n_samples == n - expected
    assert set(sel.song_ids).isdisjoint(val.song_ids)
    assert set(sel.song_ids) | set(val.song_ids) == set(ds.song_ids)


def test_split_rejects_bad_ratio():
    for r in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            split(_toy(10), r, 0)


# -- synthetic -----------------------------------------------------------------

def test_synthetic_noiseless_is_exactly_linear():
    ds, inf = generate_synthetic(SyntheticSpec(n_samples=100, n_informative=10, n_noise=50, noise_sigma=0.0), 1)
    assert len(inf) == 10
    for y in (ds.valence, ds.arousal):
        coef, *_ = np.linalg.lstsq(ds.X[:, list(inf)], y, rcond=None)
        assert np.max(np.abs(ds.X[:, list(inf)] @ coef - y)) < 1e-10
        assert np.all(np.abs(coef) >= 0.5 - 1e-9)


def test_synthetic_single_coefficient_two():
    spec = SyntheticSpec(n_samples=20, n_informative=1, n_noise=0, coefficient_range=(2.0, 2.0), noise_sigma=0.0)
    ds, inf = generate_synthetic(spec, 0)
    assert inf == (0,)
    np.testing.assert_array_equal(ds.valence, 2 * ds.X[:, 0])


def test_synthetic_seeds_differ_shapes_agree():
    a, _ = generate_synthetic(SyntheticSpec(n_samples=30, n_informative=3, n_noise=4), 1)
    b, _ = generate_synthetic(SyntheticSpec(n_samples=30, n_informative=3, n_noise=4), 2)
    assert a.X.shape == b.X.shape == (30, 7)
    assert not np.array_equal(a.X, b.X)


def test_synthetic_spec_validation():
    for kwargs in ({"noise_sigma": -1}, {"coefficient_range": (0.1, 2)}, {"n_informative": 0, "n_noise": 0}):
        with pytest.raises(ValueError):
            SyntheticSpec(**kwargs)


# -- feature families ----------------------------------------------------------

def test_family_grouping():
    assert group_features_by_family(["pcm_fftMag_mfcc_sma[1]", "pcm_fftMag_mfcc_sma[2]"]) == {"pcm_fftMag_mfcc": 2}
    counts = group_features_by_family(["audSpec_Rfilt_sma[3]", "mystery"])
    assert counts == {"audSpec_Rfilt_sma": 1, "other": 1}


def test_family_longest_prefix_and_partition_sum():
    names = ["pcm_fftMag_spectralFlux_sma", "pcm_fftMag_fband250-650_sma", "audSpec_Rfilt_sma[0]",
             "pcm_fftMag_mfcc_sma_de[4]", "F0final_sma"]
    counts = group_features_by_family(names, ["pcm_fftMag", "pcm_fftMag_spectral"])
    assert counts["pcm_fftMag_spectral"] == 1 and counts["pcm_fftMag"] == 2
    assert sum(group_features_by_family(names).values()) == len(names)


# -- DEAM adapter --------------------------------------------------------------

def test_load_deam_two_songs(tmp_path):
    fdir, vfile, afile = write_deam_fixture(tmp_path)
    ds = load_deam(fdir, vfile, afile)
    assert ds.n_samples == 2 and ds.feature_names == ("f_a", "f_b")
    # feature value = s * (j + 1) + t, averaged over t = 15.0 ... 44.5 (60 frames)
    t_mean = np.mean(np.arange(15.0, 44.51, 0.5))
    np.testing.assert_allclose(ds.X, [[1 + t_mean, 2 + t_mean], [2 + t_mean, 4 + t_mean]])
    np.testing.assert_allclose(ds.valence, [(5.1 - 5) / 4, (5.2 - 5) / 4])


def test_load_deam_skips_unannotated_song(tmp_path):
    fdir, vfile, afile = write_deam_fixture(tmp_path, n_songs=2, annotated=[1])
    ds, skipped = read_deam(fdir, vfile, afile)
    assert ds.song_ids == ("1",) and skipped == ["2"]


def test_load_deam_tolerance_exceeded(tmp_path):
    fdir, vfile, afile = write_deam_fixture(tmp_path, n_songs=3, annotated=[1])
    with pytest.raises(DatasetError, match="tolerance"):
        load_deam(fdir, vfile, afile, AdapterConfig(mismatch_tolerance=0.5))


def test_load_deam_excludes_time_column_and_checks_names(tmp_path):
    names = tuple(f"pcm_fftMag_mfcc_sma[{j}]" for j in range(5))
    fdir, vfile, afile = write_deam_fixture(tmp_path, feature_names=names)
    ds = load_deam(fdir, vfile, afile, AdapterConfig(feature_names=names))
    assert ds.feature_names == names
    with pytest.raises(DatasetError, match="feature names"):
        load_deam(fdir, vfile, afile, AdapterConfig(feature_names=names[:4]))


def test_load_deam_errors(tmp_path):
    with pytest.raises(DatasetError, match="does not exist"):
        load_deam(tmp_path / "missing", tmp_path / "v.csv", tmp_path / "a.csv")
    (tmp_path / "empty").mkdir()
    with pytest.raises(DatasetError, match="no"):
        load_deam(tmp_path / "empty", tmp_path / "v.csv", tmp_path / "a.csv")
    fdir, vfile, afile = write_deam_fixture(tmp_path / "early", times=np.arange(0, 10, 0.5))
    with pytest.raises(DatasetError, match="song 1"):
        load_deam(fdir, vfile, afile)
