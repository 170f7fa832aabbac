"""Full DEAM run for the SVR cells: ingest, select valence and arousal, benchmark.

    python scripts/deam_pipeline.py --features-dir DEAM/features \
        --valence-file DEAM/annotations/valence.csv --arousal-file DEAM/annotations/arousal.csv \
        --out-dir runs/deam --seed 0 --step 5

The annotation tables must have a song id column and ``sample_<ms>ms``
columns; see the ``[adapter]`` config section for other layouts.
"""
import argparse
import json
import sys
from pathlib import Path

from merselect.cli import main


def run(*argv):
    status = main([str(a) for a in argv])
    if status != 0:
        sys.exit(status)


def parse_args(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--features-dir", required=True)
    p.add_argument("--valence-file", required=True)
    p.add_argument("--arousal-file", required=True)
    p.add_argument("--out-dir", type=Path, default=Path("runs/deam"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step", type=int, default=1)
    p.add_argument("--estimators", nargs="+", choices=("svr", "forest"), default=["svr"])
    p.add_argument("--config")
    p.add_argument("--jobs", type=int, default=1)
    return p.parse_args(argv)


def main_script(argv=None):
    args = parse_args(argv)
    common = ["--seed", args.seed, "--jobs", args.jobs, "--out-dir", args.out_dir]
    if args.config:
        common += ["--config", args.config]
    run("ingest", "--source", "deam", "--features-dir", args.features_dir, "--valence-file", args.valence_file,
        "--arousal-file", args.arousal_file, *common)
    dataset = args.out_dir / "dataset.csv"
    artifacts = []
    for estimator in args.estimators:
        for target in ("valence", "arousal"):
            run("select", "--dataset", dataset, "--estimator", estimator, "--target", target,
                "--step", args.step, *common)
            artifacts.append(args.out_dir / f"sfs_{estimator}_{target}.json")
    run("benchmark", "--dataset", dataset, "--sfs", *artifacts, *common)
    report = json.loads((args.out_dir / "benchmark.json").read_text())
    for d in report["deltas"]:
        print(f"{d['model']} {d['target']}: SFS - CFS = {d['sfs_minus_cfs']:+.3f}")


if __name__ == "__main__":
    main_script()
