"""Data model, ingestion and preprocessing.

The canonical on-disk layout is a UTF-8 CSV::

    song_id,<feature_1>,...,<feature_D>,valence,arousal

with "." as decimal separator. Targets are kept on the [-1, 1] valence-arousal
scale; see :func:`rescale_targets` for how other scales are mapped.
"""
from __future__ import annotations

import csv
import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .rng import fisher_yates, numpy_rng

log = logging.getLogger(__name__)

TARGETS = ("valence", "arousal")

# Feature families that dominate the selected sets on DEAM.
DEFAULT_FAMILY_PREFIXES = (
    "audSpec_Rfilt_sma",
    "pcm_fftMag_spectral",
    "pcm_fftMag_mfcc",
    "pcm_fftMag_fband",
)


class DatasetError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass(frozen=True)
class FeatureSeries:
    song_id: str
    frame_times: np.ndarray
    frames: np.ndarray
    feature_names: tuple

    def __post_init__(self):
        t = np.asarray(self.frame_times, dtype=float)
        f = np.asarray(self.frames, dtype=float)
        if f.ndim != 2:
            f = f.reshape(len(t), -1)
        object.__setattr__(self, "frame_times", t)
        object.__setattr__(self, "frames", f)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if f.shape[0] != t.shape[0]:
            raise DatasetError(f"song {self.song_id}: {t.shape[0]} frame times but {f.shape[0]} frames")
        if f.shape[1] != len(self.feature_names):
            raise DatasetError(
                f"song {self.song_id}: frames have {f.shape[1]} values, expected {len(self.feature_names)}"
            )
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise DatasetError(f"song {self.song_id}: frame times are not strictly increasing")

    def __len__(self):
        return self.frames.shape[0]


@dataclass(frozen=True)
class Dataset:
    song_ids: tuple
    feature_names: tuple
    X: np.ndarray
    valence: np.ndarray
    arousal: np.ndarray

    def __post_init__(self):
        ids = tuple(str(s) for s in self.song_ids)
        names = tuple(str(n) for n in self.feature_names)
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(len(ids), -1)
        v = np.asarray(self.valence, dtype=float).reshape(-1)
        a = np.asarray(self.arousal, dtype=float).reshape(-1)
        n = len(ids)
        if X.shape != (n, len(names)):
            raise DatasetError(f"feature matrix shape {X.shape} does not match {n} songs x {len(names)} features")
        if v.shape[0] != n or a.shape[0] != n:
            raise DatasetError("target length does not match the number of songs")
        if len(set(ids)) != n:
            dup = next(s for s in ids if ids.count(s) > 1)
            raise DatasetError(f"duplicate song_id {dup!r}")
        for label, arr in (("X", X), ("valence", v), ("arousal", a)):
            if not np.all(np.isfinite(arr)):
                raise DatasetError(f"non-finite values in {label}")
        for arr in (X, v, a):
            arr.setflags(write=False)
        object.__setattr__(self, "song_ids", ids)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "valence", v)
        object.__setattr__(self, "arousal", a)

    @property
    def n_samples(self) -> int:
        return len(self.song_ids)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def target(self, name: str) -> np.ndarray:
        if name not in TARGETS:
            raise KeyError(f"unknown target {name!r}; expected one of {TARGETS}")
        return self.valence if name == "valence" else self.arousal

    def take_rows(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(
            [self.song_ids[i] for i in idx], self.feature_names, self.X[idx], self.valence[idx], self.arousal[idx]
        )

    def take_columns(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(
            self.song_ids, [self.feature_names[j] for j in idx], self.X[:, idx], self.valence, self.arousal
        )

    def with_features(self, X: np.ndarray) -> "Dataset":
        return Dataset(self.song_ids, self.feature_names, X, self.valence, self.arousal)


@dataclass(frozen=True)
class ColumnStats:
    means: np.ndarray
    stds: np.ndarray
    constant_mask: np.ndarray

    def to_dict(self) -> dict:
        return {
            "means": [float(m) for m in self.means],
            "stds": [float(s) for s in self.stds],
            "constant_mask": [bool(c) for c in self.constant_mask],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ColumnStats":
        return cls(np.asarray(d["means"], float), np.asarray(d["stds"], float), np.asarray(d["constant_mask"], bool))


@dataclass(frozen=True)
class SyntheticSpec:
    n_samples: int = 300
    n_informative: int = 10
    n_noise: int = 50
    coefficient_range: tuple = (0.5, 2.0)
    noise_sigma: float = 0.1

    def __post_init__(self):
        lo, hi = self.coefficient_range
        if self.n_samples < 1 or self.n_informative < 0 or self.n_noise < 0:
            raise ValueError("sample and feature counts must be non-negative (n_samples >= 1)")
        if self.n_informative + self.n_noise < 1:
            raise ValueError("need at least one feature")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if lo > hi or not (lo >= 0.5 or hi <= -0.5):
            raise ValueError("coefficient_range must lie entirely at magnitude >= 0.5")

    @property
    def n_features(self) -> int:
        return self.n_informative + self.n_noise


@dataclass(frozen=True)
class AdapterConfig:
    """Layout of a DEAM-style distribution.

    Defaults follow the public DEAM release: one ``<song_id>.csv`` per song,
    ``;``-separated, with a ``frameTime`` column in seconds, and annotation
    tables keyed by ``song_id`` with ``sample_<ms>ms`` columns.
    """

    delimiter: str = ";"
    extension: str = "csv"
    time_column: str = "frameTime"
    annotation_delimiter: str = ","
    id_column: str = "song_id"
    sample_pattern: str = r"sample_(\d+(?:\.\d+)?)ms"
    sample_time_scale: float = 0.001
    t_start: float = 15.0
    t_end: float = 44.5
    mismatch_tolerance: float = 0.5
    feature_names: Optional[tuple] = None
    target_range: Optional[tuple] = (1.0, 9.0)


# -- canonical CSV ---------------------------------------------------------

def rescale_targets(values: np.ndarray, source_range=(1.0, 9.0), *, label="target") -> np.ndarray:
    """Map targets onto [-1, 1].

    Columns already inside [-1, 1] are returned unchanged. Otherwise every value
    must lie in ``source_range`` = (lo, hi) and is mapped affinely so that lo -> -1
    and hi -> 1 (the default (1, 9) sends 5 to 0).
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0 or np.all(np.abs(values) <= 1.0):
        return values
    if source_range is None:
        bad = int(np.argmax(np.abs(values) > 1.0))
        raise DatasetError(f"{label} value {values[bad]!r} at data row {bad + 1} is outside [-1, 1]")
    lo, hi = map(float, source_range)
    outside = (values < lo) | (values > hi)
    if np.any(outside):
        bad = int(np.argmax(outside))
        raise DatasetError(
            f"{label} value {values[bad]!r} at data row {bad + 1} is outside both [-1, 1] and [{lo}, {hi}]"
        )
    mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0
    return (values - mid) / half


def _parse_float(cell: str, row: int, col: int, name: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise DatasetError(f"row {row}, column {col} ({name}): non-numeric value {cell!r}") from None
    if not math.isfinite(value):
        raise DatasetError(f"row {row}, column {col} ({name}): non-finite value {cell!r}")
    return value


def load_canonical(path, source_range=(1.0, 9.0)) -> Dataset:
    """Read a canonical dataset CSV. Row numbers in errors are 1-based file lines."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        if len(header) < 4 or header[0] != "song_id" or header[-2:] != ["valence", "arousal"]:
            raise DatasetError(
                f"{path}: malformed header; expected song_id,<features...>,valence,arousal (got {header[:3]}...)"
            )
        names = header[1:-2]
        if len(set(names)) != len(names):
            raise DatasetError(f"{path}: duplicate feature names in header")
        ids, rows, seen = [], [], {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetError(f"row {lineno}: expected {len(header)} columns, found {len(row)}")
            sid = row[0]
            if sid in seen:
                raise DatasetError(f"row {lineno}, column 1: duplicate song_id {sid!r} (first at row {seen[sid]})")
            seen[sid] = lineno
            ids.append(sid)
            rows.append([_parse_float(c, lineno, j + 1, header[j]) for j, c in enumerate(row) if j > 0])
    data = np.asarray(rows, dtype=float).reshape(len(ids), len(header) - 1)
    X = data[:, :-2]
    valence = rescale_targets(data[:, -2], source_range, label="valence")
    arousal = rescale_targets(data[:, -1], source_range, label="arousal")
    return Dataset(ids, names, X, valence, arousal)


def save_canonical(dataset: Dataset, path) -> None:
    """Write ``dataset`` so that :func:`load_canonical` reproduces it bit for bit."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["song_id", *dataset.feature_names, "valence", "arousal"])
        for i, sid in enumerate(dataset.song_ids):
            writer.writerow(
                [sid, *(repr(float(v)) for v in dataset.X[i]), repr(float(dataset.valence[i])),
                 repr(float(dataset.arousal[i]))]
            )


# -- preprocessing ---------------------------------------------------------

def clip_window(series: FeatureSeries, t_start: float = 15.0, t_end: float = 44.5) -> FeatureSeries:
    """Keep frames with ``t_start <= t <= t_end`` (closed interval)."""
    if t_start > t_end:
        raise ValueError(f"t_start {t_start} > t_end {t_end}")
    keep = (series.frame_times >= t_start) & (series.frame_times <= t_end)
    if not np.any(keep):
        raise DatasetError(f"song {series.song_id}: no frames inside [{t_start}, {t_end}] s")
    return FeatureSeries(series.song_id, series.frame_times[keep], series.frames[keep], series.feature_names)


def temporal_mean(series: FeatureSeries) -> np.ndarray:
    if len(series) == 0:
        raise DatasetError(f"song {series.song_id}: empty series")
    return series.frames.mean(axis=0)


def zscore_normalize(X: np.ndarray):
    """Column-wise z-score with the population standard deviation.

    Constant columns (zero range) become all zeros and are flagged in
    ``constant_mask``; their std is reported as exactly 0.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("expected a non-empty 2-D matrix")
    means = X.mean(axis=0)
    raw_std = X.std(axis=0)
    # a spread so small that its std underflows to 0 is treated as constant too
    constant = (np.ptp(X, axis=0) == 0) | ~(raw_std > 0)
    stds = np.where(constant, 0.0, raw_std)
    means = np.where(constant, X[0], means)
    Xn = np.zeros_like(X)
    live = ~constant
    Xn[:, live] = (X[:, live] - means[live]) / stds[live]
    return Xn, ColumnStats(means, stds, constant)


def apply_zscore(X: np.ndarray, stats: ColumnStats) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    safe = np.where(stats.constant_mask, 1.0, stats.stds)
    return np.where(stats.constant_mask, 0.0, (X - stats.means) / safe)


def split_sizes(n: int, ratio: float) -> tuple:
    # the 1e-9 absorbs representation error such as 0.29 * 100 = 28.999...
    n_sel = int(math.floor(ratio * n + 1e-9))
    return n_sel, n - n_sel


def split(dataset: Dataset, ratio: float = 0.7, seed: int = 0):
    """Seeded selection/validation partition; both parts keep the original row order."""
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    n = dataset.n_samples
    n_sel, n_val = split_sizes(n, ratio)
    if n_sel == 0 or n_val == 0:
        raise ValueError(f"ratio {ratio} on {n} samples leaves an empty side")
    perm = fisher_yates(n, seed)
    return dataset.take_rows(np.sort(perm[:n_sel])), dataset.take_rows(np.sort(perm[n_sel:]))


# -- synthetic data --------------------------------------------------------

def generate_synthetic(spec: SyntheticSpec, seed: int = 0):
    """Linear-target data with a known informative feature set.

    Features are i.i.d. standard normal. Each target (valence, arousal) is an
    independent linear combination of the informative columns with coefficients
    drawn uniformly from ``coefficient_range``, plus Gaussian noise. Targets are
    not rescaled, so they are generally outside [-1, 1].

    Returns ``(dataset, informative)`` where ``informative`` is a sorted tuple of
    column indices.
    """
    rng = numpy_rng(seed, "synthetic")
    d = spec.n_features
    X = rng.standard_normal((spec.n_samples, d))
    informative = np.sort(rng.permutation(d)[: spec.n_informative])
    lo, hi = spec.coefficient_range
    targets = []
    for _ in TARGETS:
        coef = rng.uniform(lo, hi, size=spec.n_informative)
        noise = rng.standard_normal(spec.n_samples) * spec.noise_sigma
        targets.append(X[:, informative] @ coef + noise)
    width = len(str(spec.n_samples - 1))
    ids = [f"syn{i:0{width}d}" for i in range(spec.n_samples)]
    names = [f"f{j:03d}" for j in range(d)]
    return Dataset(ids, names, X, targets[0], targets[1]), tuple(int(i) for i in informative)


# -- feature families ------------------------------------------------------

def group_features_by_family(names: Iterable[str], prefixes: Sequence[str] = DEFAULT_FAMILY_PREFIXES) -> dict:
    """Count names per longest matching prefix; unmatched names go to ``"other"``."""
    ordered = sorted(prefixes, key=len, reverse=True)
    counts: dict = {}
    for name in names:
        family = next((p for p in ordered if name.startswith(p)), "other")
        counts[family] = counts.get(family, 0) + 1
    return counts


# -- DEAM adapter ----------------------------------------------------------

def _song_sort_key(song_id: str):
    return (0, int(song_id), "") if song_id.isdigit() else (1, 0, song_id)


def read_feature_series(path, adapter: AdapterConfig, song_id: Optional[str] = None) -> FeatureSeries:
    path = Path(path)
    song_id = song_id or path.stem
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=adapter.delimiter)
        try:
            header = [h.strip().strip('"') for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty feature file") from None
        if adapter.time_column not in header:
            raise DatasetError(f"{path}: no time column {adapter.time_column!r}")
        tcol = header.index(adapter.time_column)
        names = [h for j, h in enumerate(header) if j != tcol]
        if adapter.feature_names is not None and tuple(names) != tuple(adapter.feature_names):
            raise DatasetError(
                f"{path}: {len(names)} feature columns do not match the configured "
                f"{len(adapter.feature_names)} feature names"
            )
        times, frames = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetError(f"{path}: row {lineno} has {len(row)} columns, expected {len(header)}")
            vals = [_parse_float(c, lineno, j + 1, header[j]) for j, c in enumerate(row)]
            times.append(vals[tcol])
            frames.append([v for j, v in enumerate(vals) if j != tcol])
    return FeatureSeries(song_id, np.asarray(times), np.asarray(frames).reshape(len(times), len(names)), names)


def read_annotations(path, adapter: AdapterConfig, t_start: float, t_end: float) -> dict:
    """Window-averaged annotation per song id. Empty cells are ignored."""
    pattern = re.compile(adapter.sample_pattern)
    out = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=adapter.annotation_delimiter)
        header = [h.strip() for h in next(reader)]
        if adapter.id_column not in header:
            raise DatasetError(f"{path}: no id column {adapter.id_column!r}")
        id_col = header.index(adapter.id_column)
        cols = []
        for j, h in enumerate(header):
            m = pattern.fullmatch(h)
            if m:
                t = float(m.group(1)) * adapter.sample_time_scale
                if t_start <= t <= t_end:
                    cols.append(j)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            sid = row[id_col].strip()
            vals = [_parse_float(row[j], lineno, j + 1, header[j]) for j in cols if j < len(row) and row[j].strip()]
            if vals:
                out[sid] = float(np.mean(vals))
    return out


def read_deam(features_dir, valence_file, arousal_file, adapter: AdapterConfig = AdapterConfig()):
    """Ingest a DEAM-style distribution; returns ``(dataset, skipped_song_ids)``."""
    features_dir = Path(features_dir)
    if not features_dir.is_dir():
        raise DatasetError(f"features directory {features_dir} does not exist")
    files = sorted(features_dir.glob(f"*.{adapter.extension}"), key=lambda p: _song_sort_key(p.stem))
    if not files:
        raise DatasetError(f"features directory {features_dir} contains no *.{adapter.extension} files")
    valence = read_annotations(valence_file, adapter, adapter.t_start, adapter.t_end)
    arousal = read_annotations(arousal_file, adapter, adapter.t_start, adapter.t_end)
    ids, rows, v, a, skipped = [], [], [], [], []
    names = None
    for path in files:
        sid = path.stem
        if sid not in valence or sid not in arousal:
            skipped.append(sid)
            continue
        series = read_feature_series(path, adapter, sid)
        if names is None:
            names = series.feature_names
        elif series.feature_names != names:
            raise DatasetError(f"{path}: feature columns differ from the first song's")
        clipped = clip_window(series, adapter.t_start, adapter.t_end)
        ids.append(sid)
        rows.append(temporal_mean(clipped))
        v.append(valence[sid])
        a.append(arousal[sid])
    if skipped:
        log.warning("skipped %d song(s) without both annotations", len(skipped))
    frac = len(skipped) / len(files)
    if frac > adapter.mismatch_tolerance:
        raise DatasetError(
            f"{len(skipped)} of {len(files)} songs lack annotations ({frac:.1%} > tolerance "
            f"{adapter.mismatch_tolerance:.1%})"
        )
    if not ids:
        raise DatasetError("no song has both features and annotations")
    X = np.vstack(rows)
    ds = Dataset(
        ids, names, X,
        rescale_targets(np.asarray(v), adapter.target_range, label="valence"),
        rescale_targets(np.asarray(a), adapter.target_range, label="arousal"),
    )
    return ds, skipped


def load_deam(features_dir, valence_file, arousal_file, adapter: AdapterConfig = AdapterConfig()) -> Dataset:
    return read_deam(features_dir, valence_file, arousal_file, adapter)[0]
