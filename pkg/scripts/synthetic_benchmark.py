"""End-to-end run on synthetic data: ingest, select all four cells, benchmark.

    python scripts/synthetic_benchmark.py --out-dir runs/synthetic --seed 0

Drives the ``merselect`` command line, so the outputs are the same files a
user would get from the four commands run by hand.
"""
import argparse
import sys
from pathlib import Path

from merselect.cli import main


def run(*argv):
    status = main([str(a) for a in argv])
    if status != 0:
        sys.exit(status)


def parse_args(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out-dir", type=Path, default=Path("runs/synthetic"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="INI file passed to every command (synthetic size, hyperparameters)")
    p.add_argument("--step", type=int, default=1, help="features removed per elimination round")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--jobs", type=int, default=1)
    return p.parse_args(argv)


def main_script(argv=None):
    args = parse_args(argv)
    common = ["--seed", args.seed, "--jobs", args.jobs, "--out-dir", args.out_dir]
    if args.config:
        common += ["--config", args.config]
    run("ingest", "--source", "synthetic", *common)
    dataset = args.out_dir / "dataset.csv"
    artifacts = []
    for estimator in ("svr", "forest"):
        for target in ("valence", "arousal"):
            run("select", "--dataset", dataset, "--estimator", estimator, "--target", target,
                "--folds", args.folds, "--step", args.step, *common)
            artifacts.append(args.out_dir / f"sfs_{estimator}_{target}.json")
    run("benchmark", "--dataset", dataset, "--sfs", *artifacts, "--folds", args.folds, *common)


if __name__ == "__main__":
    main_script()
