"""How well RFECV recovers the informative columns of the synthetic data.

Prints, per master seed, the chosen size, how many informative columns it
contains, and the mean CV score curve over subset sizes. Optionally writes
the curves to a JSON file for plotting.

    python scripts/rfecv_recovery.py --seeds 0 1 2 3 4 --curves curves.json
"""
import argparse
import json
import time

from merselect.dataset import SyntheticSpec, generate_synthetic
from merselect.estimators import EstimatorSpec
from merselect.forest import ForestParams
from merselect.selection import rfecv
from merselect.svr import SvrParams


def parse_args(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    p.add_argument("--estimator", choices=("forest", "svr"), default="forest")
    p.add_argument("--n-trees", type=int, default=100)
    p.add_argument("--importance", help="importance mode (forest: impurity, mae; svr: permutation, weights)")
    p.add_argument("--samples", type=int, default=300)
    p.add_argument("--informative", type=int, default=10)
    p.add_argument("--noise", type=int, default=50)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--step", type=int, default=1)
    p.add_argument("--curves", help="write the score curves here (JSON)")
    return p.parse_args(argv)


def main(argv=None):
    args = parse_args(argv)
    spec = SyntheticSpec(n_samples=args.samples, n_informative=args.informative, n_noise=args.noise)
    params = ForestParams(n_trees=args.n_trees) if args.estimator == "forest" else SvrParams()
    estimator = EstimatorSpec(args.estimator, params, args.importance)
    curves = {}
    for seed in args.seeds:
        ds, informative = generate_synthetic(spec, seed)
        t0 = time.perf_counter()
        sfs = rfecv(ds.X, ds.valence, estimator, k=args.folds, step=args.step, seed=seed)
        hits = len(set(sfs.selected_indices) & set(informative))
        means = sfs.mean_scores()
        top = sorted(means, key=means.get, reverse=True)[:5]
        print(f"seed {seed}: chose {sfs.chosen_size}, {hits}/{len(informative)} informative, "
              f"{time.perf_counter() - t0:.0f}s; best sizes {[(s, round(means[s], 4)) for s in top]}")
        curves[seed] = {"chosen": sfs.chosen_size, "hits": hits, "means": {str(s): m for s, m in means.items()}}
    if args.curves:
        with open(args.curves, "w", encoding="utf-8") as fh:
            json.dump(curves, fh, indent=2)


if __name__ == "__main__":
    main()
