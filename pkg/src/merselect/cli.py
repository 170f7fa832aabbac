"""Command-line entry point: ingest, select, benchmark, classify.

Every machine-readable output records the fully resolved configuration. The
only fields that may differ between two runs with the same inputs and seed
live under ``run_info`` (creation time, worker count).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import secrets
import sys
import tempfile
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .dataset import (TARGETS, Dataset, DatasetError, generate_synthetic, load_canonical, read_deam, save_canonical,
                      split, zscore_normalize)
from .emotion import QUADRANT_COLORS, EmotionError, VaPoint, categorize_dataset, label_order
from .estimators import EstimatorSpec
from .evaluation import BenchmarkConfig, BenchmarkError, benchmark
from .report import (HEVNER_COLORS, fold_scores_csv, report_json, report_markdown, svg_fold_lines, svg_score_bars,
                     svg_va_scatter)
from .rng import derive_seed
from .selection import EliminationError, SelectedFeatureSet, compute_reduction_rate, rfecv

log = logging.getLogger("merselect")

PROVENANCE_FORMAT = "merselect.provenance/1"
VOLATILE_KEYS = ("run_info",)


class CliError(Exception):
    def __init__(self, message, status=1):
        super().__init__(message)
        self.status = status


def _missing(path) -> CliError:
    return CliError(f"no such file or directory: {path}", status=2)


def _require(path, kind="file") -> Path:
    p = Path(path)
    ok = p.is_dir() if kind == "dir" else p.is_file()
    if not ok:
        raise _missing(p)
    return p


# -- output ----------------------------------------------------------------

def write_outputs(files: dict) -> None:
    """Write ``{path: text}`` atomically: every file goes to a temp name first,
    and nothing is renamed into place unless all temp writes succeeded."""
    staged = []
    try:
        for path, text in files.items():
            path = Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
            staged.append((tmp, path))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
    except BaseException:
        for tmp, _ in staged:
            Path(tmp).unlink(missing_ok=True)
        raise
    for tmp, path in staged:
        os.replace(tmp, path)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _run_info(jobs: int) -> dict:
    return {"created": datetime.now(timezone.utc).isoformat(timespec="seconds"), "jobs": jobs,
            "version": __version__}


def strip_volatile(d: dict) -> dict:
    return {k: v for k, v in d.items() if k not in VOLATILE_KEYS}


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _resolve_seed(cfg: RunConfig) -> RunConfig:
    if cfg.run.seed is not None:
        return cfg
    seed = secrets.randbelow(2**31)
    print(f"seed: {seed} (drawn; pass --seed {seed} to replay)", file=sys.stderr)
    return cfg.with_run(seed=seed)


def _dataset_text(ds: Dataset) -> str:
    # save_canonical writes to a path; render into memory so the write stays atomic
    with tempfile.TemporaryDirectory() as tmp:
        p = Path(tmp) / "d.csv"
        save_canonical(ds, p)
        return p.read_text(encoding="utf-8")


# -- ingest ------------------------------------------------------------------

def _scale_to_unit_box(values: np.ndarray):
    """Divide by the largest magnitude so targets land in [-1, 1]."""
    m = float(np.max(np.abs(values))) if values.size else 0.0
    scale = m if m > 0 else 1.0
    return np.clip(values / scale, -1.0, 1.0), scale


def cmd_ingest(args, cfg: RunConfig) -> dict:
    prov = {"format": PROVENANCE_FORMAT, "source": args.source}
    if args.source == "canonical":
        if not args.input:
            raise CliError("--input is required for --source canonical", status=2)
        path = _require(args.input)
        ds = load_canonical(path, cfg.source_range)
        prov["input"] = {"path": str(path), "sha256": _sha256(path)}
    elif args.source == "deam":
        for flag in ("features_dir", "valence_file", "arousal_file"):
            if not getattr(args, flag):
                raise CliError(f"--{flag.replace('_', '-')} is required for --source deam", status=2)
        _require(args.features_dir, "dir")
        _require(args.valence_file)
        _require(args.arousal_file)
        ds, skipped = read_deam(args.features_dir, args.valence_file, args.arousal_file, cfg.adapter)
        prov["window"] = [cfg.adapter.t_start, cfg.adapter.t_end]
        prov["skipped"] = list(skipped)
        prov["input"] = {"features_dir": str(args.features_dir), "valence_file": str(args.valence_file),
                         "arousal_file": str(args.arousal_file)}
    else:
        seed = cfg.run.seed
        raw, informative = generate_synthetic(cfg.synthetic, derive_seed(seed, "ingest-synthetic"))
        v, v_scale = _scale_to_unit_box(raw.valence)
        a, a_scale = _scale_to_unit_box(raw.arousal)
        ds = Dataset(raw.song_ids, raw.feature_names, raw.X, v, a)
        prov["informative_indices"] = list(informative)
        prov["target_scale"] = {"valence": v_scale, "arousal": a_scale}

    if not args.no_normalize:
        Xn, stats = zscore_normalize(ds.X)
        ds = ds.with_features(Xn)
        prov["normalization"] = {"method": "zscore", **stats.to_dict()}
    else:
        prov["normalization"] = None
    prov.update({"n_samples": ds.n_samples, "n_features": ds.n_features, "config": cfg.to_dict(),
                 "run_info": _run_info(cfg.run.jobs)})
    out = Path(args.out_dir)
    write_outputs({out / "dataset.csv": _dataset_text(ds), out / "dataset.provenance.json": _json(prov)})
    print(f"wrote {out / 'dataset.csv'}: N={ds.n_samples}, D={ds.n_features}")
    return prov


# -- select ------------------------------------------------------------------

def _estimator(kind: str, cfg: RunConfig) -> EstimatorSpec:
    return EstimatorSpec(kind, cfg.svr if kind == "svr" else cfg.forest)


def cmd_select(args, cfg: RunConfig) -> SelectedFeatureSet:
    path = _require(args.dataset)
    ds = load_canonical(path, cfg.source_range)
    run = cfg.run
    split_seed = derive_seed(run.seed, "split")
    selection, validation = split(ds, run.ratio, split_seed)
    spec = _estimator(run.estimator, cfg)
    sfs = rfecv(selection.X, selection.target(run.target), spec, k=run.folds, step=run.step, seed=run.seed,
                n_jobs=run.jobs, target=run.target, feature_names=ds.feature_names)
    split_info = {"ratio": run.ratio, "seed": split_seed, "n_samples": ds.n_samples,
                  "n_selection": selection.n_samples, "n_validation": validation.n_samples}
    sfs = replace(sfs, extra={
        "split": split_info,
        "dataset": {"path": str(path), "sha256": _sha256(path)},
        "config": cfg.to_dict(),
        "run_info": _run_info(run.jobs),
    })
    out = Path(args.out_dir) / f"sfs_{run.estimator}_{run.target}.json"
    write_outputs({out: _json(sfs.to_dict())})
    rate = compute_reduction_rate(ds.n_features, sfs.chosen_size)
    print(f"selected {sfs.chosen_size} of {ds.n_features} features (reduction {rate:.1%}) -> {out}")
    return sfs


# -- benchmark ---------------------------------------------------------------

def _benchmark_view(ds: Dataset, artifacts) -> Dataset:
    """The validation part of the split the artifacts were selected on."""
    splits = {json.dumps(a.extra.get("split"), sort_keys=True) for a in artifacts}
    if len(splits) != 1:
        raise BenchmarkError("artifacts were selected on different splits; rerun select with one seed and ratio")
    info = artifacts[0].extra.get("split")
    if info is None:
        return ds
    if info["n_samples"] != ds.n_samples:
        raise BenchmarkError(f"artifacts were built on {info['n_samples']} rows, dataset has {ds.n_samples}")
    return split(ds, info["ratio"], info["seed"])[1]


def _shared_params(artifacts, kind, default):
    params = {a.estimator.params for a in artifacts if a.estimator.kind == kind}
    if len(params) > 1:
        raise BenchmarkError(f"{kind} artifacts disagree on hyperparameters")
    return params.pop() if params else default


def cmd_benchmark(args, cfg: RunConfig):
    ds = load_canonical(_require(args.dataset), cfg.source_range)
    artifacts = []
    for p in args.sfs:
        try:
            artifacts.append(SelectedFeatureSet.load(_require(p)))
        except (ValueError, KeyError) as exc:
            raise CliError(f"{p}: {exc}") from exc
    cells = {}
    for a in artifacts:
        key = (a.estimator.kind, a.target)
        if key in cells:
            raise BenchmarkError(f"two artifacts for model={key[0]}, target={key[1]}")
        cells[key] = a
    models = tuple(m for m in ("svr", "forest") if any(k[0] == m for k in cells))
    targets = tuple(t for t in TARGETS if any(k[1] == t for k in cells))
    view = _benchmark_view(ds, artifacts)
    bcfg = BenchmarkConfig(
        models=models, targets=targets, k=cfg.run.folds, seed=cfg.run.seed,
        svr_params=_shared_params(artifacts, "svr", cfg.svr),
        forest_params=_shared_params(artifacts, "forest", cfg.forest),
        n_jobs=cfg.run.jobs,
    )
    report = benchmark(view, cells, bcfg)
    report = replace(report, extra={
        "dataset": {"path": str(args.dataset), "n_rows_total": ds.n_samples,
                    "rows_used": "validation" if artifacts[0].extra.get("split") else "all"},
        "artifacts": [str(p) for p in args.sfs],
        "config": cfg.to_dict(),
        "run_info": _run_info(cfg.run.jobs),
    })
    out = Path(args.out_dir)
    formats = set(args.format or ("json", "md", "csv"))
    files = {}
    if "json" in formats:
        files[out / "benchmark.json"] = report_json(report)
    if "md" in formats:
        files[out / "benchmark.md"] = report_markdown(report)
    if "csv" in formats:
        files[out / "benchmark_folds.csv"] = fold_scores_csv(report)
    if not args.no_plots:
        files[out / "benchmark_scores.svg"] = svg_score_bars(report)
        files[out / "benchmark_folds.svg"] = svg_fold_lines(report)
    write_outputs(files)
    print(report_markdown(report), end="")
    return report


# -- classify ----------------------------------------------------------------

def read_va_points(path):
    """Rows of ``(id, VaPoint)`` from a CSV with id, valence and arousal columns."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        cols = {name.strip(): j for j, name in enumerate(header)}
        id_col = next((cols[c] for c in ("song_id", "id") if c in cols), None)
        if id_col is None or "valence" not in cols or "arousal" not in cols:
            raise DatasetError(f"{path}: header needs an id (song_id or id), valence and arousal column")
        out, bad = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                v, a = float(row[cols["valence"]]), float(row[cols["arousal"]])
            except (ValueError, IndexError):
                raise DatasetError(f"row {lineno}: valence/arousal not numeric") from None
            if not (math.isfinite(v) and math.isfinite(a) and abs(v) <= 1 and abs(a) <= 1):
                bad.append(lineno)
                continue
            out.append((row[id_col], VaPoint(v, a)))
        if bad:
            shown = ", ".join(map(str, bad[:20])) + (" ..." if len(bad) > 20 else "")
            raise EmotionError(f"{path}: {len(bad)} point(s) outside [-1, 1] x [-1, 1] at rows {shown}")
    return out


def cmd_classify(args, cfg: RunConfig):
    points = read_va_points(_require(args.annotations))
    layout = cfg.hevner
    labelled, counts = categorize_dataset(points, args.mode, layout)
    order = label_order(args.mode, layout)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "valence", "arousal", "label"])
    for (sid, p), (_, label) in zip(points, labelled):
        writer.writerow([sid, repr(p.valence), repr(p.arousal), label])
    out = Path(args.out_dir)
    files = {out / f"labels_{args.mode}.csv": buf.getvalue()}
    if not args.no_plots:
        if args.mode == "quadrant":
            palette = {q.value: c for q, c in QUADRANT_COLORS.items()}
        else:
            palette = dict(zip(order, HEVNER_COLORS))
        files[out / f"labels_{args.mode}.svg"] = svg_va_scatter(
            [(p.valence, p.arousal) for _, p in points], [lab for _, lab in labelled], palette)
    write_outputs(files)
    for label in order:
        print(f"{label}: {counts.get(label, 0)}")
    return labelled, counts


# -- argument parsing --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file; flags override its values")
    common.add_argument("--seed", type=int, help="master seed (drawn and printed when omitted)")
    common.add_argument("--out-dir", default=".", help="directory for outputs (default: current)")
    common.add_argument("--jobs", type=int, help="worker threads (results do not depend on it)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="merselect", description="Feature selection and benchmarking for "
                                "valence-arousal regression.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    ing = sub.add_parser("ingest", parents=[common], help="build a canonical dataset file")
    ing.add_argument("--source", choices=("canonical", "deam", "synthetic"), required=True)
    ing.add_argument("--input", help="canonical CSV (source=canonical)")
    ing.add_argument("--features-dir", help="per-song feature files (source=deam)")
    ing.add_argument("--valence-file", help="valence annotation table (source=deam)")
    ing.add_argument("--arousal-file", help="arousal annotation table (source=deam)")
    ing.add_argument("--no-normalize", action="store_true", help="skip z-score normalization")

    sel = sub.add_parser("select", parents=[common], help="RFECV feature selection")
    sel.add_argument("--dataset", required=True)
    sel.add_argument("--estimator", choices=("svr", "forest"))
    sel.add_argument("--target", choices=TARGETS)
    sel.add_argument("--folds", type=int, help="cross-validation folds (default 10)")
    sel.add_argument("--step", type=int, help="features removed per elimination round (default 1)")
    sel.add_argument("--ratio", type=float, help="selection share of the split (default 0.7)")

    ben = sub.add_parser("benchmark", parents=[common], help="complete vs selected feature set benchmark")
    ben.add_argument("--dataset", required=True)
    ben.add_argument("--sfs", nargs="+", required=True, help="selected-feature-set artifacts")
    ben.add_argument("--folds", type=int, help="cross-validation folds (default 10)")
    ben.add_argument("--format", action="append", choices=("json", "md", "csv"),
                     help="report formats to write; repeatable (default: all)")
    ben.add_argument("--no-plots", action="store_true")

    cls = sub.add_parser("classify", parents=[common], help="label valence-arousal points")
    cls.add_argument("--annotations", required=True, help="CSV with id, valence, arousal columns")
    cls.add_argument("--mode", choices=("quadrant", "hevner"), default="quadrant")
    cls.add_argument("--no-plots", action="store_true")
    return p


def resolve_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        cfg = load_config(_require(args.config))
    return cfg.with_run(
        seed=args.seed, jobs=args.jobs,
        folds=getattr(args, "folds", None), estimator=getattr(args, "estimator", None),
        target=getattr(args, "target", None), step=getattr(args, "step", None), ratio=getattr(args, "ratio", None),
    )


COMMANDS = {"ingest": cmd_ingest, "select": cmd_select, "benchmark": cmd_benchmark, "classify": cmd_classify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command != "classify":
            cfg = _resolve_seed(cfg)
        COMMANDS[args.command](args, cfg)
    except CliError as exc:
        print(f"merselect {args.command}: error: {exc}", file=sys.stderr)
        return exc.status
    except FileNotFoundError as exc:
        print(f"merselect {args.command}: error: no such file or directory: {exc.filename or exc}", file=sys.stderr)
        return 2
    except (DatasetError, ConfigError, EmotionError, BenchmarkError, EliminationError, ValueError) as exc:
        print(f"merselect {args.command}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
